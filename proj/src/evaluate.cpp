#include "forge/evaluate.hpp"

#include "forge/budget.hpp"
#include "forge/error.hpp"

#include <algorithm>

namespace forge {

PredicateSet::PredicateSet(const std::vector<int>& sizes)
{
    resize(sizes);
}

PredicateSet::PredicateSet(const std::vector<int>& sizes, const std::vector<Elem>& members) : PredicateSet(sizes)
{
    for (const Elem& e : members)
        insert(e);
}

bool PredicateSet::contains(Elem e) const
{
    if (e.sort < 0 || e.sort >= sort_count() || e.id < 0 || e.id >= static_cast<int>(mask_[e.sort].size()))
        return false;
    return mask_[e.sort][e.id] != 0;
}

void PredicateSet::insert(Elem e)
{
    if (e.sort < 0 || e.sort >= sort_count() || e.id < 0 || e.id >= static_cast<int>(mask_[e.sort].size()))
        throw Error("predicate member " + to_string(e) + " is outside the universe");
    mask_[e.sort][e.id] = 1;
}

void PredicateSet::erase(Elem e)
{
    if (contains(e))
        mask_[e.sort][e.id] = 0;
}

std::vector<int> PredicateSet::ids(int sort) const
{
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(mask_.at(sort).size()); ++i)
        if (mask_[sort][i])
            out.push_back(i);
    return out;
}

std::vector<Elem> PredicateSet::elements() const
{
    std::vector<Elem> out;
    for (int s = 0; s < sort_count(); ++s)
        for (int id : ids(s))
            out.push_back({s, id});
    return out;
}

std::size_t PredicateSet::count() const
{
    std::size_t n = 0;
    for (const auto& m : mask_)
        n += static_cast<std::size_t>(std::count(m.begin(), m.end(), 1));
    return n;
}

void PredicateSet::resize(const std::vector<int>& sizes)
{
    mask_.resize(sizes.size());
    for (std::size_t s = 0; s < sizes.size(); ++s)
        mask_[s].resize(static_cast<std::size_t>(sizes[s]), 0);
}

namespace {

class Evaluator {
public:
    Evaluator(const FinStructure& s, const Assignment& a, const PredicateSet* h) : s_(s), a_(a), h_(h) {}

    bool run(const Formula& f)
    {
        switch (f.op()) {
        case Op::truth: return true;
        case Op::falsity: return false;
        case Op::atom: {
            int buf[kMaxArity];
            const auto& ts = f.terms();
            for (std::size_t i = 0; i < ts.size(); ++i)
                buf[i] = value(ts[i]);
            return s_.holds(f.relation(), std::span<const int>(buf, ts.size()));
        }
        case Op::equal: {
            const Term& a = f.terms()[0];
            const Term& b = f.terms()[1];
            return a.sort == b.sort && value(a) == value(b);
        }
        case Op::in_h: {
            const Term& t = f.terms()[0];
            if (h_ == nullptr)
                throw Error("formula mentions H but no H set was given");
            return h_->contains({t.sort, value(t)});
        }
        case Op::negation: return !run(f.children()[0]);
        case Op::conjunction:
            for (const auto& k : f.children())
                if (!run(k))
                    return false;
            return true;
        case Op::disjunction:
            for (const auto& k : f.children())
                if (run(k))
                    return true;
            return false;
        case Op::implication: return !run(f.children()[0]) || run(f.children()[1]);
        case Op::exists:
        case Op::forall: {
            const bool ex = f.op() == Op::exists;
            const Variable& v = f.bound();
            const int n = s_.size(v.sort);
            env_.push_back({v.name, 0});
            const std::size_t slot = env_.size() - 1;
            bool result = !ex;
            for (int i = 0; i < n; ++i) {
                budget::check();
                env_[slot].second = i;
                if (run(f.children()[0]) == ex) {
                    result = ex;
                    break;
                }
            }
            env_.pop_back();
            return result;
        }
        }
        return false;
    }

private:
    int value(const Term& t) const
    {
        if (!t.is_var()) {
            if (t.sort < 0 || t.sort >= s_.sig().sort_count() || t.id < 0 || t.id >= s_.size(t.sort))
                throw Error("parameter #" + s_.sig().sort_name(t.sort) + ":" + std::to_string(t.id) +
                            " is not an element of the structure");
            return t.id;
        }
        for (auto it = env_.rbegin(); it != env_.rend(); ++it)
            if (it->first == t.name)
                return it->second;
        auto it = a_.find(t.name);
        if (it == a_.end())
            throw Error("free variable '" + t.name + "' is unassigned");
        if (it->second < 0 || it->second >= s_.size(t.sort))
            throw Error("variable '" + t.name + "' is assigned " + std::to_string(it->second) +
                        ", outside sort " + s_.sig().sort_name(t.sort));
        return it->second;
    }

    const FinStructure& s_;
    const Assignment& a_;
    const PredicateSet* h_;
    std::vector<std::pair<std::string, int>> env_;
};

void precheck(const FinStructure& s, const Formula& f, const Assignment& a, const PredicateSet* h,
              const std::string* skip)
{
    for (const auto& v : free_variables(f)) {
        if (skip && v.name == *skip)
            continue;
        if (!a.contains(v.name))
            throw Error("free variable '" + v.name + "' is unassigned");
    }
    if (h == nullptr && mentions_h(f))
        throw Error("formula mentions H but no H set was given");
    (void)s;
}

void put_int(std::vector<unsigned char>& out, int v)
{
    const auto u = static_cast<std::uint32_t>(v);
    for (int sh = 24; sh >= 0; sh -= 8)
        out.push_back(static_cast<unsigned char>((u >> sh) & 0xff));
}

} // namespace

bool evaluate(const FinStructure& s, const Formula& f, const Assignment& assignment, const PredicateSet* h)
{
    precheck(s, f, assignment, h, nullptr);
    return Evaluator(s, assignment, h).run(f);
}

std::vector<int> realizations(const FinStructure& s, const Formula& f, const Variable& x, const Assignment& assignment,
                              const PredicateSet* h)
{
    precheck(s, f, assignment, h, &x.name);
    Assignment a = assignment;
    std::vector<int> out;
    for (int i = 0; i < s.size(x.sort); ++i) {
        a[x.name] = i;
        if (Evaluator(s, a, h).run(f))
            out.push_back(i);
    }
    return out;
}

std::string TypeFingerprint::hex() const
{
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned char c : bytes) {
        out += digits[c >> 4];
        out += digits[c & 15];
    }
    return out;
}

TypeFingerprint qftp(const FinStructure& s, const std::vector<Elem>& tuple, const std::vector<Elem>& base)
{
    for (const Elem& e : tuple)
        if (!s.contains(e))
            throw Error("qftp: unknown element " + to_string(e));
    std::vector<Elem> b = base;
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    for (const Elem& e : b)
        if (!s.contains(e))
            throw Error("qftp: unknown base element " + to_string(e));

    std::vector<Elem> items = tuple;
    items.insert(items.end(), b.begin(), b.end());
    const int n = static_cast<int>(tuple.size());
    const int m = static_cast<int>(items.size());

    TypeFingerprint fp;
    put_int(fp.bytes, n);
    for (const Elem& e : tuple)
        put_int(fp.bytes, e.sort);
    put_int(fp.bytes, static_cast<int>(b.size()));
    for (const Elem& e : b) {
        put_int(fp.bytes, e.sort);
        put_int(fp.bytes, e.id);
    }

    unsigned char acc = 0;
    int bits = 0;
    auto push_bit = [&](bool v) {
        acc = static_cast<unsigned char>((acc << 1) | (v ? 1 : 0));
        if (++bits == 8) {
            fp.bytes.push_back(acc);
            acc = 0;
            bits = 0;
        }
    };

    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < m; ++j)
            if (items[i].sort == items[j].sort)
                push_bit(items[i].id == items[j].id);

    const Signature& sig = s.sig();
    std::vector<int> pick(kMaxArity);
    std::vector<int> ids(kMaxArity);
    for (int r = 0; r < sig.relation_count(); ++r) {
        const auto& profile = sig.relation(r).profile;
        const int ar = static_cast<int>(profile.size());
        std::vector<std::vector<int>> choices(ar);
        for (int p = 0; p < ar; ++p)
            for (int i = 0; i < m; ++i)
                if (items[i].sort == profile[p])
                    choices[p].push_back(i);
        bool empty = false;
        for (const auto& c : choices)
            empty = empty || c.empty();
        if (empty)
            continue;
        std::vector<std::size_t> at(ar, 0);
        while (true) {
            bool touches = false;
            for (int p = 0; p < ar; ++p) {
                const int idx = choices[p][at[p]];
                touches = touches || idx < n;
                ids[p] = items[idx].id;
            }
            if (touches)
                push_bit(s.holds(r, std::span<const int>(ids.data(), ar)));
            int p = ar - 1;
            while (p >= 0 && ++at[p] == choices[p].size()) {
                at[p] = 0;
                --p;
            }
            if (p < 0)
                break;
        }
    }
    if (bits > 0)
        fp.bytes.push_back(static_cast<unsigned char>(acc << (8 - bits)));
    put_int(fp.bytes, bits);
    return fp;
}

int count_type_realizations(const FinStructure& s, Elem a, const std::vector<Elem>& base)
{
    const TypeFingerprint target = qftp(s, {a}, base);
    int count = 0;
    for (int i = 0; i < s.size(a.sort); ++i) {
        budget::check();
        if (qftp(s, {{a.sort, i}}, base) == target)
            ++count;
    }
    return count;
}

} // namespace forge
