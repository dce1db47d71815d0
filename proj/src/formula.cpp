#include "forge/formula.hpp"

#include "forge/error.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace forge {

Formula::Formula() : Formula(truth()) {}

Formula Formula::make(Node n) { return Formula(std::make_shared<const Node>(std::move(n))); }

Formula Formula::truth()
{
    static const Formula t = make(Node{Op::truth, -1, {}, {}, {}});
    return t;
}

Formula Formula::falsity() { return make(Node{Op::falsity, -1, {}, {}, {}}); }

Formula Formula::atom(int rel, std::vector<Term> args) { return make(Node{Op::atom, rel, std::move(args), {}, {}}); }

Formula Formula::equal(Term a, Term b) { return make(Node{Op::equal, -1, {std::move(a), std::move(b)}, {}, {}}); }

Formula Formula::in_h(Term t) { return make(Node{Op::in_h, -1, {std::move(t)}, {}, {}}); }

Formula Formula::negation(Formula f) { return make(Node{Op::negation, -1, {}, {std::move(f)}, {}}); }

Formula Formula::conjunction(std::vector<Formula> parts)
{
    if (parts.empty())
        return truth();
    if (parts.size() == 1)
        return parts.front();
    return nary(Op::conjunction, std::move(parts));
}

Formula Formula::disjunction(std::vector<Formula> parts)
{
    if (parts.empty())
        return falsity();
    if (parts.size() == 1)
        return parts.front();
    return nary(Op::disjunction, std::move(parts));
}

Formula Formula::nary(Op op, std::vector<Formula> parts) { return make(Node{op, -1, {}, std::move(parts), {}}); }

Formula Formula::implication(Formula lhs, Formula rhs)
{
    return make(Node{Op::implication, -1, {}, {std::move(lhs), std::move(rhs)}, {}});
}

Formula Formula::exists(Variable v, Formula body) { return make(Node{Op::exists, -1, {}, {std::move(body)}, std::move(v)}); }

Formula Formula::forall(Variable v, Formula body) { return make(Node{Op::forall, -1, {}, {std::move(body)}, std::move(v)}); }

bool Formula::operator==(const Formula& o) const
{
    if (node_ == o.node_)
        return true;
    const Node& a = *node_;
    const Node& b = *o.node_;
    return a.op == b.op && a.rel == b.rel && a.terms == b.terms && a.bound == b.bound && a.kids == b.kids;
}

namespace {

void collect_free(const Formula& f, std::vector<Variable>& bound, std::vector<Variable>& out)
{
    auto is_bound = [&](const std::string& name) {
        return std::any_of(bound.begin(), bound.end(), [&](const Variable& v) { return v.name == name; });
    };
    switch (f.op()) {
    case Op::atom:
    case Op::equal:
    case Op::in_h:
        for (const auto& t : f.terms())
            if (t.is_var() && !is_bound(t.name) &&
                std::none_of(out.begin(), out.end(), [&](const Variable& v) { return v.name == t.name; }))
                out.push_back(t.variable());
        break;
    case Op::exists:
    case Op::forall:
        bound.push_back(f.bound());
        collect_free(f.children()[0], bound, out);
        bound.pop_back();
        break;
    default:
        for (const auto& k : f.children())
            collect_free(k, bound, out);
    }
}

Formula map_terms(const Formula& f, std::vector<std::string>& bound,
                  const std::function<Term(const Term&)>& on_free)
{
    auto is_bound = [&](const std::string& name) { return std::find(bound.begin(), bound.end(), name) != bound.end(); };
    switch (f.op()) {
    case Op::truth:
    case Op::falsity:
        return f;
    case Op::atom:
    case Op::equal:
    case Op::in_h: {
        std::vector<Term> ts;
        for (const auto& t : f.terms())
            ts.push_back(t.is_var() && !is_bound(t.name) ? on_free(t) : t);
        if (f.op() == Op::atom)
            return Formula::atom(f.relation(), std::move(ts));
        if (f.op() == Op::equal)
            return Formula::equal(ts[0], ts[1]);
        return Formula::in_h(ts[0]);
    }
    case Op::exists:
    case Op::forall: {
        bound.push_back(f.bound().name);
        Formula body = map_terms(f.children()[0], bound, on_free);
        bound.pop_back();
        return f.op() == Op::exists ? Formula::exists(f.bound(), body) : Formula::forall(f.bound(), body);
    }
    case Op::negation:
        return Formula::negation(map_terms(f.children()[0], bound, on_free));
    case Op::implication:
        return Formula::implication(map_terms(f.children()[0], bound, on_free),
                                    map_terms(f.children()[1], bound, on_free));
    case Op::conjunction:
    case Op::disjunction: {
        std::vector<Formula> parts;
        for (const auto& k : f.children())
            parts.push_back(map_terms(k, bound, on_free));
        return Formula::nary(f.op(), std::move(parts));
    }
    }
    return f;
}

} // namespace

std::vector<Variable> free_variables(const Formula& f)
{
    std::vector<Variable> bound;
    std::vector<Variable> out;
    collect_free(f, bound, out);
    return out;
}

bool mentions_h(const Formula& f)
{
    if (f.op() == Op::in_h)
        return true;
    return std::any_of(f.children().begin(), f.children().end(), [](const Formula& k) { return mentions_h(k); });
}

std::vector<Elem> parameters(const Formula& f)
{
    std::set<Elem> out;
    std::function<void(const Formula&)> walk = [&](const Formula& g) {
        for (const auto& t : g.terms())
            if (!t.is_var())
                out.insert(t.element());
        for (const auto& k : g.children())
            walk(k);
    };
    walk(f);
    return {out.begin(), out.end()};
}

Formula rename_free(const Formula& f, const std::vector<std::pair<std::string, Variable>>& renaming)
{
    std::vector<std::string> bound;
    return map_terms(f, bound, [&](const Term& t) {
        for (const auto& [from, to] : renaming)
            if (from == t.name)
                return Term::var(to);
        return t;
    });
}

Formula substitute(const Formula& f, const std::vector<std::pair<std::string, Elem>>& values)
{
    std::vector<std::string> bound;
    return map_terms(f, bound, [&](const Term& t) {
        for (const auto& [name, e] : values)
            if (name == t.name) {
                if (e.sort != t.sort)
                    throw Error("substitute: sort mismatch for variable '" + name + "'");
                return Term::param(e);
            }
        return t;
    });
}

void check_well_sorted(const Formula& f, const Signature& sig)
{
    switch (f.op()) {
    case Op::atom: {
        if (f.relation() < 0 || f.relation() >= sig.relation_count())
            throw ParseError("sort error: unknown relation index", std::string::npos);
        const auto& sym = sig.relation(f.relation());
        if (static_cast<int>(f.terms().size()) != sym.arity())
            throw ParseError("sort error: atom " + sym.name + " has " + std::to_string(f.terms().size()) +
                                 " arguments, expected " + std::to_string(sym.arity()),
                             std::string::npos);
        for (int i = 0; i < sym.arity(); ++i)
            if (f.terms()[i].sort != sym.profile[i])
                throw ParseError("sort error: argument " + std::to_string(i + 1) + " of atom " + sym.name +
                                     " must have sort " + sig.sort_name(sym.profile[i]),
                                 std::string::npos);
        break;
    }
    case Op::equal:
        if (f.terms()[0].sort != f.terms()[1].sort)
            throw ParseError("sort error: equality between different sorts", std::string::npos);
        break;
    default:
        break;
    }
    for (const auto& t : f.terms())
        if (t.sort < 0 || t.sort >= sig.sort_count())
            throw ParseError("sort error: term of unknown sort", std::string::npos);
    for (const auto& k : f.children())
        check_well_sorted(k, sig);
}

PartitionedFormula PartitionedFormula::from(Formula body, Variable x)
{
    PartitionedFormula pf{std::move(body), std::move(x), {}};
    for (const auto& v : free_variables(pf.body)) {
        if (v.name == pf.x.name) {
            if (v.sort != pf.x.sort)
                throw Error("designated variable '" + v.name + "' occurs with another sort");
            continue;
        }
        pf.params.push_back(v);
    }
    return pf;
}

PartitionedFormula PartitionedFormula::from(Formula body, const std::string& x_name)
{
    for (const auto& v : free_variables(body))
        if (v.name == x_name)
            return from(std::move(body), v);
    throw Error("variable '" + x_name + "' does not occur free");
}

std::vector<int> PartitionedFormula::param_profile() const
{
    std::vector<int> out;
    for (const auto& v : params)
        out.push_back(v.sort);
    return out;
}

} // namespace forge
