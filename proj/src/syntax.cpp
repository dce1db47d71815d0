#include "forge/syntax.hpp"

#include "forge/error.hpp"

#include <cctype>
#include <functional>
#include <map>
#include <optional>

namespace forge {

namespace {

enum class Tok { ident, number, hash, colon, dot, lparen, rparen, comma, eq, bang, amp, bar, arrow, end };

struct Token {
    Tok kind;
    std::string text;
    std::size_t pos;
};

std::vector<Token> lex(std::string_view s)
{
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_' || s[i] == '\''))
                ++i;
            out.push_back({Tok::ident, std::string(s.substr(start, i - start)), start});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])))
                ++i;
            out.push_back({Tok::number, std::string(s.substr(start, i - start)), start});
            continue;
        }
        if (c == '-' && i + 1 < s.size() && s[i + 1] == '>') {
            out.push_back({Tok::arrow, "->", start});
            i += 2;
            continue;
        }
        Tok k;
        switch (c) {
        case '#': k = Tok::hash; break;
        case ':': k = Tok::colon; break;
        case '.': k = Tok::dot; break;
        case '(': k = Tok::lparen; break;
        case ')': k = Tok::rparen; break;
        case ',': k = Tok::comma; break;
        case '=': k = Tok::eq; break;
        case '!': k = Tok::bang; break;
        case '&': k = Tok::amp; break;
        case '|': k = Tok::bar; break;
        default: throw ParseError(std::string("unexpected character '") + c + "' at " + std::to_string(i), i);
        }
        out.push_back({k, std::string(1, c), start});
        ++i;
    }
    out.push_back({Tok::end, "", s.size()});
    return out;
}

constexpr int kUnresolved = -1;

class Parser {
public:
    Parser(std::string_view text, const Signature& sig) : text_(text), sig_(sig), toks_(lex(text)) {}

    Formula run()
    {
        Formula f = implication();
        if (peek().kind != Tok::end)
            fail("unexpected '" + peek().text + "'");
        return resolve(f);
    }

private:
    const Token& peek() const { return toks_[at_]; }
    const Token& next() { return toks_[at_++]; }
    bool accept(Tok k)
    {
        if (peek().kind != k)
            return false;
        ++at_;
        return true;
    }
    [[noreturn]] void fail(const std::string& msg) const
    {
        throw ParseError("syntax error at " + std::to_string(peek().pos) + ": " + msg + " in \"" + std::string(text_) +
                             "\"",
                         peek().pos);
    }
    const Token& expect(Tok k, const char* what)
    {
        if (peek().kind != k)
            fail(std::string("expected ") + what);
        return next();
    }

    int sort_named(const Token& t) const
    {
        const int s = sig_.find_sort(t.text);
        if (s < 0)
            throw ParseError("sort error at " + std::to_string(t.pos) + ": unknown sort '" + t.text + "'", t.pos);
        return s;
    }

    Formula implication()
    {
        Formula lhs = disjunction();
        if (accept(Tok::arrow))
            return Formula::implication(lhs, implication());
        return lhs;
    }

    Formula disjunction()
    {
        std::vector<Formula> parts{conjunction()};
        while (accept(Tok::bar))
            parts.push_back(conjunction());
        return parts.size() == 1 ? parts.front() : Formula::nary(Op::disjunction, std::move(parts));
    }

    Formula conjunction()
    {
        std::vector<Formula> parts{unary()};
        while (accept(Tok::amp))
            parts.push_back(unary());
        return parts.size() == 1 ? parts.front() : Formula::nary(Op::conjunction, std::move(parts));
    }

    Formula unary()
    {
        if (accept(Tok::bang))
            return Formula::negation(unary());
        if (peek().kind == Tok::ident && (peek().text == "exists" || peek().text == "forall")) {
            const bool ex = next().text == "exists";
            const Token& name = expect(Tok::ident, "variable name");
            int sort;
            if (accept(Tok::colon))
                sort = sort_named(expect(Tok::ident, "sort name"));
            else if (sig_.sort_count() == 1)
                sort = 0;
            else
                fail("quantified variable '" + name.text + "' needs a sort");
            expect(Tok::dot, "'.'");
            Variable v{name.text, sort};
            scope_.push_back(v);
            Formula body = implication();
            scope_.pop_back();
            return ex ? Formula::exists(v, body) : Formula::forall(v, body);
        }
        return primary();
    }

    Formula primary()
    {
        if (accept(Tok::lparen)) {
            Formula f = implication();
            expect(Tok::rparen, "')'");
            return f;
        }
        if (peek().kind == Tok::ident && toks_[at_ + 1].kind != Tok::lparen && toks_[at_ + 1].kind != Tok::colon &&
            toks_[at_ + 1].kind != Tok::eq) {
            if (peek().text == "true") {
                next();
                return Formula::truth();
            }
            if (peek().text == "false") {
                next();
                return Formula::falsity();
            }
        }
        if (peek().kind == Tok::ident && toks_[at_ + 1].kind == Tok::lparen) {
            const Token& name = next();
            next();
            std::vector<Term> args;
            if (peek().kind != Tok::rparen) {
                args.push_back(term());
                while (accept(Tok::comma))
                    args.push_back(term());
            }
            expect(Tok::rparen, "')'");
            const int rel = sig_.find_relation(name.text);
            if (rel < 0 && name.text == "H") {
                if (args.size() != 1)
                    throw ParseError("sort error at " + std::to_string(name.pos) + ": H takes one argument", name.pos);
                return Formula::in_h(args[0]);
            }
            if (rel < 0)
                throw ParseError("sort error at " + std::to_string(name.pos) + ": unknown relation '" + name.text + "'",
                                 name.pos);
            const auto& sym = sig_.relation(rel);
            if (static_cast<int>(args.size()) != sym.arity())
                throw ParseError("sort error at " + std::to_string(name.pos) + ": atom " +
                                     print_atom(name.text, args) + " has arity " + std::to_string(args.size()) +
                                     ", " + sym.name + " expects " + std::to_string(sym.arity()),
                                 name.pos);
            atom_pos_.push_back(name.pos);
            return Formula::atom(rel, std::move(args));
        }
        Term a = term();
        expect(Tok::eq, "'=' or an atom");
        Term b = term();
        return Formula::equal(std::move(a), std::move(b));
    }

    static std::string print_atom(const std::string& name, const std::vector<Term>& args)
    {
        std::string out = name + "(";
        for (std::size_t i = 0; i < args.size(); ++i)
            out += (i ? "," : "") + (args[i].is_var() ? args[i].name : "#" + std::to_string(args[i].id));
        return out + ")";
    }

    Term term()
    {
        if (accept(Tok::hash)) {
            const int sort = sort_named(expect(Tok::ident, "sort name"));
            expect(Tok::colon, "':'");
            const Token& num = expect(Tok::number, "element id");
            return Term::param({sort, std::stoi(num.text)});
        }
        const Token& name = expect(Tok::ident, "term");
        std::optional<int> annotated;
        if (accept(Tok::colon))
            annotated = sort_named(expect(Tok::ident, "sort name"));
        for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
            if (it->name == name.text) {
                if (annotated && *annotated != it->sort)
                    throw ParseError("sort error at " + std::to_string(name.pos) + ": variable '" + name.text +
                                         "' is bound with sort " + sig_.sort_name(it->sort),
                                     name.pos);
                return Term::var(*it);
            }
        if (annotated) {
            auto [pos, inserted] = free_sorts_.emplace(name.text, *annotated);
            if (!inserted && pos->second != *annotated)
                throw ParseError("sort error at " + std::to_string(name.pos) + ": variable '" + name.text +
                                     "' used with two sorts",
                                 name.pos);
        }
        return Term{Term::Kind::variable, name.text, kUnresolved, 0};
    }

    // Infers sorts of unannotated free variables, then checks every atom.
    Formula resolve(const Formula& f)
    {
        bool changed = true;
        while (changed) {
            changed = false;
            infer(f, changed);
        }
        if (sig_.sort_count() == 1)
            for (const auto& v : unresolved_names(f))
                free_sorts_.emplace(v, 0);
        Formula out = fill(f);
        check_well_sorted(out, sig_);
        return out;
    }

    std::vector<std::string> unresolved_names(const Formula& f) const
    {
        std::vector<std::string> names;
        std::function<void(const Formula&)> walk = [&](const Formula& g) {
            for (const auto& t : g.terms())
                if (t.is_var() && t.sort == kUnresolved)
                    names.push_back(t.name);
            for (const auto& k : g.children())
                walk(k);
        };
        walk(f);
        return names;
    }

    std::optional<int> known(const Term& t) const
    {
        if (t.sort != kUnresolved)
            return t.sort;
        auto it = free_sorts_.find(t.name);
        if (it == free_sorts_.end())
            return std::nullopt;
        return it->second;
    }

    void learn(const Term& t, int sort, bool& changed)
    {
        if (!t.is_var() || t.sort != kUnresolved)
            return;
        auto [it, inserted] = free_sorts_.emplace(t.name, sort);
        if (inserted)
            changed = true;
        else if (it->second != sort)
            throw ParseError("sort error: variable '" + t.name + "' is used with sorts " + sig_.sort_name(it->second) +
                                 " and " + sig_.sort_name(sort),
                             std::string::npos);
    }

    void infer(const Formula& f, bool& changed)
    {
        if (f.op() == Op::atom) {
            const auto& sym = sig_.relation(f.relation());
            for (int i = 0; i < sym.arity(); ++i)
                learn(f.terms()[i], sym.profile[i], changed);
        } else if (f.op() == Op::equal) {
            const auto a = known(f.terms()[0]);
            const auto b = known(f.terms()[1]);
            if (a && !b)
                learn(f.terms()[1], *a, changed);
            if (b && !a)
                learn(f.terms()[0], *b, changed);
        }
        for (const auto& k : f.children())
            infer(k, changed);
    }

    Formula fill(const Formula& f)
    {
        auto fix = [&](const Term& t) {
            if (!t.is_var() || t.sort != kUnresolved)
                return t;
            auto it = free_sorts_.find(t.name);
            if (it == free_sorts_.end())
                throw ParseError("sort error: cannot infer the sort of free variable '" + t.name + "'",
                                 std::string::npos);
            Term out = t;
            out.sort = it->second;
            return out;
        };
        switch (f.op()) {
        case Op::truth:
        case Op::falsity:
            return f;
        case Op::atom: {
            std::vector<Term> ts;
            for (const auto& t : f.terms())
                ts.push_back(fix(t));
            return Formula::atom(f.relation(), ts);
        }
        case Op::equal:
            return Formula::equal(fix(f.terms()[0]), fix(f.terms()[1]));
        case Op::in_h:
            return Formula::in_h(fix(f.terms()[0]));
        case Op::negation:
            return Formula::negation(fill(f.children()[0]));
        case Op::implication:
            return Formula::implication(fill(f.children()[0]), fill(f.children()[1]));
        case Op::conjunction:
        case Op::disjunction: {
            std::vector<Formula> parts;
            for (const auto& k : f.children())
                parts.push_back(fill(k));
            return Formula::nary(f.op(), parts);
        }
        case Op::exists:
            return Formula::exists(f.bound(), fill(f.children()[0]));
        case Op::forall:
            return Formula::forall(f.bound(), fill(f.children()[0]));
        }
        return f;
    }

    std::string_view text_;
    const Signature& sig_;
    std::vector<Token> toks_;
    std::size_t at_ = 0;
    std::vector<Variable> scope_;
    std::map<std::string, int> free_sorts_;
    std::vector<std::size_t> atom_pos_;
};

class Printer {
public:
    explicit Printer(const Signature& sig) : sig_(sig) {}

    std::string top(const Formula& f) { return print(f); }

private:
    std::string term(const Term& t) const
    {
        if (!t.is_var())
            return "#" + sig_.sort_name(t.sort) + ":" + std::to_string(t.id);
        for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
            if (it->name == t.name)
                return t.name;
        return t.name + ":" + sig_.sort_name(t.sort);
    }

    static bool is_quantifier(const Formula& f) { return f.op() == Op::exists || f.op() == Op::forall; }

    std::string wrap(const Formula& f, bool parens)
    {
        std::string s = print(f);
        return parens ? "(" + s + ")" : s;
    }

    std::string print(const Formula& f)
    {
        switch (f.op()) {
        case Op::truth: return "true";
        case Op::falsity: return "false";
        case Op::atom: {
            std::string out = sig_.relation(f.relation()).name + "(";
            for (std::size_t i = 0; i < f.terms().size(); ++i)
                out += (i ? "," : "") + term(f.terms()[i]);
            return out + ")";
        }
        case Op::equal: return term(f.terms()[0]) + " = " + term(f.terms()[1]);
        case Op::in_h: return "H(" + term(f.terms()[0]) + ")";
        case Op::negation: {
            const Formula& k = f.children()[0];
            const bool parens = k.op() == Op::conjunction || k.op() == Op::disjunction || k.op() == Op::implication ||
                                is_quantifier(k);
            return "!" + wrap(k, parens);
        }
        case Op::conjunction:
        case Op::disjunction: {
            std::string out;
            const bool conj = f.op() == Op::conjunction;
            for (std::size_t i = 0; i < f.children().size(); ++i) {
                const Formula& k = f.children()[i];
                bool parens = is_quantifier(k) || k.op() == Op::implication || k.op() == Op::disjunction ||
                              (conj && k.op() == Op::conjunction);
                if (!conj && k.op() == Op::conjunction)
                    parens = false;
                out += (i ? (conj ? " & " : " | ") : "") + wrap(k, parens);
            }
            return out;
        }
        case Op::implication: {
            const Formula& l = f.children()[0];
            const Formula& r = f.children()[1];
            return wrap(l, l.op() == Op::implication || is_quantifier(l)) + " -> " + print(r);
        }
        case Op::exists:
        case Op::forall: {
            std::string out = std::string(f.op() == Op::exists ? "exists " : "forall ") + f.bound().name + ":" +
                              sig_.sort_name(f.bound().sort) + ". ";
            scope_.push_back(f.bound());
            out += print(f.children()[0]);
            scope_.pop_back();
            return out;
        }
        }
        return "?";
    }

    const Signature& sig_;
    std::vector<Variable> scope_;
};

} // namespace

Formula parse_formula(std::string_view text, const Signature& sig) { return Parser(text, sig).run(); }

std::string print_formula(const Formula& f, const Signature& sig) { return Printer(sig).top(f); }

} // namespace forge
