#include "forge/trees.hpp"

#include "forge/budget.hpp"
#include "forge/builtins.hpp"
#include "forge/error.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <set>

namespace forge {

std::string index_to_string(const TreeIndex& i, int branching)
{
    std::string out;
    for (std::size_t p = 0; p < i.size(); ++p) {
        if (branching > 10) {
            if (p > 0)
                out += '.';
            out += std::to_string(i[p]);
        } else {
            out += static_cast<char>('0' + i[p]);
        }
    }
    return out;
}

TreeIndex index_from_string(std::string_view text, int branching)
{
    TreeIndex out;
    if (text.empty())
        return out;
    if (branching > 10) {
        std::size_t start = 0;
        while (true) {
            const std::size_t dot = text.find('.', start);
            const std::string part(text.substr(start, dot == std::string_view::npos ? text.npos : dot - start));
            if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos)
                throw Error("malformed tree index '" + std::string(text) + "'");
            out.push_back(std::stoi(part));
            if (dot == std::string_view::npos)
                break;
            start = dot + 1;
        }
    } else {
        for (char c : text) {
            if (c < '0' || c > '9')
                throw Error("malformed tree index '" + std::string(text) + "'");
            out.push_back(c - '0');
        }
    }
    for (int d : out)
        if (d >= branching)
            throw Error("tree index '" + std::string(text) + "' exceeds the branching");
    return out;
}

bool is_initial_segment(const TreeIndex& a, const TreeIndex& b)
{
    return a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin());
}

bool comparable(const TreeIndex& a, const TreeIndex& b) { return is_initial_segment(a, b) || is_initial_segment(b, a); }

TreeIndex meet(const TreeIndex& a, const TreeIndex& b)
{
    std::size_t n = 0;
    while (n < a.size() && n < b.size() && a[n] == b[n])
        ++n;
    return TreeIndex(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n));
}

bool lex_less(const TreeIndex& a, const TreeIndex& b)
{
    // std::lexicographical_compare puts a proper initial segment first.
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

std::vector<TreeIndex> all_indices(int branching, int depth)
{
    if (branching < 1 || depth < 0)
        throw Error("index tree needs branching >= 1 and depth >= 0");
    std::vector<TreeIndex> out{TreeIndex{}};
    std::size_t level_start = 0;
    for (int len = 1; len <= depth; ++len) {
        const std::size_t level_end = out.size();
        for (std::size_t i = level_start; i < level_end; ++i)
            for (int d = 0; d < branching; ++d) {
                TreeIndex next = out[i];
                next.push_back(d);
                out.push_back(std::move(next));
            }
        level_start = level_end;
    }
    return out;
}

std::string L0TypeCode::hex() const
{
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (int v : data) {
        const auto u = static_cast<std::uint32_t>(v);
        for (int sh = 28; sh >= 0; sh -= 4)
            out += digits[(u >> sh) & 15];
    }
    return out;
}

L0TypeCode tree_qftp(const std::vector<TreeIndex>& indices)
{
    std::vector<TreeIndex> closure = indices;
    for (std::size_t i = 0; i < indices.size(); ++i)
        for (std::size_t j = i + 1; j < indices.size(); ++j)
            closure.push_back(meet(indices[i], indices[j]));
    std::sort(closure.begin(), closure.end(), lex_less);
    closure.erase(std::unique(closure.begin(), closure.end()), closure.end());

    auto position = [&](const TreeIndex& x) {
        return static_cast<int>(std::lower_bound(closure.begin(), closure.end(), x, lex_less) - closure.begin());
    };
    const int m = static_cast<int>(closure.size());
    L0TypeCode code;
    code.data.push_back(m);
    code.data.push_back(static_cast<int>(indices.size()));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            code.data.push_back(i != j && is_initial_segment(closure[i], closure[j]) ? 1 : 0);
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            code.data.push_back(position(meet(closure[i], closure[j])));
    for (const auto& x : indices)
        code.data.push_back(position(x));
    return code;
}

void LabeledTree::validate() const
{
    if (branching < 1 || depth < 0)
        throw Error("labeled tree needs branching >= 1 and depth >= 0");
    for (int s : profile)
        if (s < 0 || s >= host.sig().sort_count())
            throw Error("label profile names an unknown sort");
    const auto dom = domain();
    if (labels.size() != dom.size())
        throw Error("labeled tree has " + std::to_string(labels.size()) + " labels, expected " +
                    std::to_string(dom.size()));
    for (const auto& idx : dom) {
        auto it = labels.find(idx);
        if (it == labels.end())
            throw Error("missing label at index '" + index_to_string(idx, branching) + "'");
        if (it->second.size() != profile.size())
            throw Error("label at '" + index_to_string(idx, branching) + "' does not match the profile");
        for (std::size_t p = 0; p < profile.size(); ++p)
            if (!host.contains({profile[p], it->second[p]}))
                throw Error("label at '" + index_to_string(idx, branching) + "' names a missing element");
    }
    for (const Elem& e : base)
        if (!host.contains(e))
            throw Error("base element " + to_string(e) + " is not in the host");
    if (h && h->sort_count() != host.sig().sort_count())
        throw Error("H set does not match the host sorts");
}

const std::vector<int>& LabeledTree::label(const TreeIndex& i) const
{
    auto it = labels.find(i);
    if (it == labels.end())
        throw Error("no label at index '" + index_to_string(i, branching) + "'");
    return it->second;
}

std::vector<Elem> LabeledTree::label_elements(const TreeIndex& i) const
{
    const auto& ids = label(i);
    std::vector<Elem> out;
    for (std::size_t p = 0; p < ids.size(); ++p)
        out.push_back({profile[p], ids[p]});
    return out;
}

namespace {

Json elems_to_json(const Signature& sig, const std::vector<Elem>& es)
{
    Json out = Json::array();
    for (const Elem& e : es)
        out.push_back(Json::array({sig.sort_name(e.sort), e.id}));
    return out;
}

std::vector<Elem> elems_from_json(const Signature& sig, const Json& j)
{
    std::vector<Elem> out;
    for (const auto& e : j) {
        if (e.is_number_integer())
            out.push_back({0, e.get<int>()});
        else
            out.push_back({sig.sort_index(e.at(0).get<std::string>()), e.at(1).get<int>()});
    }
    return out;
}

} // namespace

Json labeled_tree_to_json(const LabeledTree& t)
{
    Json j;
    j["branching"] = t.branching;
    j["depth"] = t.depth;
    Json prof = Json::array();
    for (int s : t.profile)
        prof.push_back(t.host.sig().sort_name(s));
    j["profile"] = prof;
    Json labels = Json::object();
    for (const auto& [idx, ids] : t.labels)
        labels[index_to_string(idx, t.branching)] = ids;
    j["labels"] = labels;
    j["base"] = elems_to_json(t.host.sig(), t.base);
    j["host"] = structure_to_json(t.host);
    if (t.h)
        j["h"] = elems_to_json(t.host.sig(), t.h->elements());
    return j;
}

LabeledTree labeled_tree_from_json(const Json& j)
{
    LabeledTree t;
    t.host = structure_from_json(j.at("host"));
    t.branching = j.at("branching").get<int>();
    t.depth = j.at("depth").get<int>();
    for (const auto& s : j.at("profile"))
        t.profile.push_back(t.host.sig().sort_index(s.get<std::string>()));
    for (const auto& [key, ids] : j.at("labels").items())
        t.labels[index_from_string(key, t.branching)] = ids.get<std::vector<int>>();
    if (j.contains("base"))
        t.base = elems_from_json(t.host.sig(), j.at("base"));
    if (j.contains("h"))
        t.h = PredicateSet(t.host.sizes(), elems_from_json(t.host.sig(), j.at("h")));
    t.validate();
    return t;
}

Json WitnessReport::to_json(int branching) const
{
    auto strs = [&](const std::vector<TreeIndex>& v) {
        Json a = Json::array();
        for (const auto& i : v)
            a.push_back(index_to_string(i, branching));
        return a;
    };
    Json j;
    j["pass"] = pass;
    j["thresholds"] = {{"t", t}, {"k", k}, {"width", width}};
    if (!pass) {
        j["condition"] = condition;
        j["indices"] = strs(indices);
        if (!other.empty())
            j["other"] = strs(other);
        j["count"] = count;
    }
    return j;
}

namespace {

using Bits = std::vector<std::uint64_t>;

Bits full_bits(int n)
{
    Bits b(static_cast<std::size_t>((n + 63) / 64), ~std::uint64_t{0});
    if (n % 64 != 0 && !b.empty())
        b.back() = (std::uint64_t{1} << (n % 64)) - 1;
    return b;
}

void and_into(Bits& a, const Bits& b)
{
    for (std::size_t i = 0; i < a.size(); ++i)
        a[i] &= b[i];
}

int popcount(const Bits& b)
{
    int n = 0;
    for (auto w : b)
        n += std::popcount(w);
    return n;
}

bool disjoint(const Bits& a, const Bits& b)
{
    for (std::size_t i = 0; i < a.size(); ++i)
        if ((a[i] & b[i]) != 0)
            return false;
    return true;
}

// Realization sets of q ∧ φ(x, label) over one host.
class Realizer {
public:
    Realizer(const FinStructure& s, const PredicateSet* h, const PartitionedFormula& phi, const FormulaSet& q)
        : s_(s), h_(h), phi_(phi), n_(s.size(phi.x.sort)), q_bits_(full_bits(n_))
    {
        for (const auto& f : q.members) {
            if (q.x.sort != phi.x.sort)
                throw Error("q and the formula disagree on the sort of x");
            q_bits_ = intersect(q_bits_, to_bits(realizations(s_, f, q.x, {}, h_)));
        }
    }

    [[nodiscard]] Bits of(const std::vector<int>& label) const
    {
        Assignment a;
        for (std::size_t p = 0; p < phi_.params.size(); ++p)
            a[phi_.params[p].name] = label[p];
        return intersect(q_bits_, to_bits(realizations(s_, phi_.body, phi_.x, a, h_)));
    }
    [[nodiscard]] int universe() const { return n_; }

private:
    [[nodiscard]] Bits to_bits(const std::vector<int>& ids) const
    {
        Bits b(static_cast<std::size_t>((n_ + 63) / 64), 0);
        for (int i : ids)
            b[static_cast<std::size_t>(i) / 64] |= std::uint64_t{1} << (i % 64);
        return b;
    }
    static Bits intersect(Bits a, const Bits& b)
    {
        and_into(a, b);
        return a;
    }

    const FinStructure& s_;
    const PredicateSet* h_;
    const PartitionedFormula& phi_;
    int n_;
    Bits q_bits_;
};

void check_profile(const LabeledTree& t, const PartitionedFormula& phi)
{
    t.validate();
    if (phi.param_profile() != t.profile)
        throw Error("label profile does not match the formula parameters");
}

// Realization set of every labeled index.
std::map<TreeIndex, Bits> realization_table(const LabeledTree& t, const PartitionedFormula& phi, const FormulaSet& q)
{
    check_profile(t, phi);
    Realizer r(t.host, t.h ? &*t.h : nullptr, phi, q);
    std::map<TreeIndex, Bits> out;
    for (const auto& [idx, label] : t.labels)
        out.emplace(idx, r.of(label));
    return out;
}

Bits joint(const std::map<TreeIndex, Bits>& table, const std::vector<TreeIndex>& indices, int universe)
{
    Bits b = full_bits(universe);
    for (const auto& i : indices)
        and_into(b, table.at(i));
    return b;
}

std::vector<TreeIndex> path_to(const TreeIndex& leaf)
{
    std::vector<TreeIndex> out;
    for (std::size_t n = 0; n <= leaf.size(); ++n)
        out.emplace_back(leaf.begin(), leaf.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
}

// Fails the report at the first leaf whose path has fewer than t realizations.
bool check_paths(const LabeledTree& t, const std::map<TreeIndex, Bits>& table, int universe, WitnessReport& rep)
{
    for (const auto& idx : t.domain()) {
        if (static_cast<int>(idx.size()) != t.depth)
            continue;
        const int c = popcount(joint(table, path_to(idx), universe));
        if (c < rep.t) {
            rep.pass = false;
            rep.condition = "path";
            rep.indices = {idx};
            rep.count = c;
            return false;
        }
    }
    return true;
}

TypeFingerprint label_type(const LabeledTree& t, const std::vector<TreeIndex>& tuple, const std::vector<Elem>& base)
{
    std::vector<Elem> elems;
    for (const auto& i : tuple) {
        auto e = t.label_elements(i);
        elems.insert(elems.end(), e.begin(), e.end());
    }
    TypeFingerprint fp = qftp(t.host, elems, base);
    if (t.h) {
        fp.bytes.push_back(0xff);
        for (const Elem& e : elems)
            fp.bytes.push_back(t.h->contains(e) ? 1 : 0);
    }
    return fp;
}

constexpr double kMaxTuples = 2e6;

// Calls visit on every tuple over `dom` of length 1..w, shorter tuples first.
template <class Visit>
void for_each_index_tuple(const std::vector<TreeIndex>& dom, int w, Visit&& visit)
{
    double total = 0;
    double p = 1;
    for (int len = 1; len <= w; ++len) {
        p *= static_cast<double>(dom.size());
        total += p;
    }
    if (total > kMaxTuples)
        throw BudgetExceeded("index tuples up to width " + std::to_string(w) + " exceed the cap");
    for (int len = 1; len <= w; ++len) {
        std::vector<std::size_t> at(static_cast<std::size_t>(len), 0);
        std::vector<TreeIndex> tuple(static_cast<std::size_t>(len), dom[0]);
        while (true) {
            for (int i = 0; i < len; ++i)
                tuple[i] = dom[at[i]];
            if (!visit(static_cast<const std::vector<TreeIndex>&>(tuple)))
                return;
            int i = len - 1;
            while (i >= 0 && ++at[i] == dom.size()) {
                at[i] = 0;
                --i;
            }
            if (i < 0)
                break;
        }
    }
}

// Every variable name in f, free or bound.
void collect_names(const Formula& f, std::set<std::string>& out)
{
    for (const auto& t : f.terms())
        if (t.is_var())
            out.insert(t.name);
    if (f.op() == Op::exists || f.op() == Op::forall)
        out.insert(f.bound().name);
    for (const auto& k : f.children())
        collect_names(k, out);
}

std::vector<int> concat(std::vector<int> a, const std::vector<int>& b)
{
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

TreeIndex zeros(int n) { return TreeIndex(static_cast<std::size_t>(n), 0); }

TreeIndex side_index(int i)
{
    TreeIndex s = zeros(i);
    s.push_back(1);
    return s;
}

TreeIndex join(const TreeIndex& a, const TreeIndex& b)
{
    TreeIndex out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

} // namespace

WitnessReport check_strong_indiscernibility(const LabeledTree& t, int w)
{
    if (w < 1)
        throw Error("width must be at least 1");
    t.validate();
    WitnessReport rep;
    rep.width = w;
    std::map<L0TypeCode, std::pair<std::vector<TreeIndex>, TypeFingerprint>> seen;
    std::size_t visited = 0;
    for_each_index_tuple(t.domain(), w, [&](const std::vector<TreeIndex>& tuple) {
        if (++visited % 4096 == 0)
            budget::check();
        auto code = tree_qftp(tuple);
        auto fp = label_type(t, tuple, t.base);
        auto [it, fresh] = seen.try_emplace(std::move(code), tuple, fp);
        if (!fresh && it->second.second != fp) {
            rep.pass = false;
            rep.condition = "type";
            rep.indices = it->second.first;
            rep.other = tuple;
            return false;
        }
        return true;
    });
    return rep;
}

WitnessReport check_sop2_witness(const LabeledTree& t, const PartitionedFormula& phi, const FormulaSet& q,
                                 int threshold)
{
    if (threshold < 1)
        throw Error("threshold must be at least 1");
    const auto table = realization_table(t, phi, q);
    const int universe = t.host.size(phi.x.sort);
    WitnessReport rep;
    rep.t = threshold;
    if (!check_paths(t, table, universe, rep))
        return rep;
    const auto dom = t.domain();
    for (std::size_t i = 0; i < dom.size(); ++i)
        for (std::size_t j = i + 1; j < dom.size(); ++j) {
            if (comparable(dom[i], dom[j]))
                continue;
            const Bits& a = table.at(dom[i]);
            const Bits& b = table.at(dom[j]);
            if (!disjoint(a, b)) {
                rep.pass = false;
                rep.condition = "incomparable";
                rep.indices = {dom[i], dom[j]};
                rep.count = popcount(joint(table, rep.indices, universe));
                return rep;
            }
        }
    return rep;
}

WitnessReport check_ktp1_witness(const LabeledTree& t, const PartitionedFormula& psi, int k, int threshold)
{
    if (k < 2)
        throw Error("k must be at least 2");
    if (threshold < 1)
        throw Error("threshold must be at least 1");
    const auto table = realization_table(t, psi, FormulaSet{psi.x, {}});
    const int universe = t.host.size(psi.x.sort);
    WitnessReport rep;
    rep.t = threshold;
    rep.k = k;
    if (!check_paths(t, table, universe, rep))
        return rep;

    const auto dom = t.domain();
    std::vector<std::size_t> chosen;
    std::vector<Bits> running{full_bits(universe)};
    std::size_t visited = 0;
    // Antichains in increasing domain order; an empty running intersection already
    // settles every extension.
    auto dfs = [&](auto&& self, std::size_t from) -> bool {
        for (std::size_t i = from; i < dom.size(); ++i) {
            if (++visited % 4096 == 0)
                budget::check();
            bool ok = true;
            for (std::size_t c : chosen)
                ok = ok && !comparable(dom[c], dom[i]);
            if (!ok)
                continue;
            Bits next = running.back();
            and_into(next, table.at(dom[i]));
            const int count = popcount(next);
            if (count == 0)
                continue;
            chosen.push_back(i);
            if (static_cast<int>(chosen.size()) == k) {
                rep.pass = false;
                rep.condition = "incomparable";
                for (std::size_t c : chosen)
                    rep.indices.push_back(dom[c]);
                rep.count = count;
                return false;
            }
            running.push_back(std::move(next));
            if (!self(self, i + 1))
                return false;
            running.pop_back();
            chosen.pop_back();
        }
        return true;
    };
    dfs(dfs, 0);
    return rep;
}

namespace {

// Copies of φ with parameters renamed apart from every name in φ, even for one copy.
PartitionedFormula renamed_copies(const PartitionedFormula& phi, int copies)
{
    std::set<std::string> used;
    collect_names(phi.body, used);
    used.insert(phi.x.name);
    for (const auto& p : phi.params)
        used.insert(p.name);
    PartitionedFormula out;
    out.x = phi.x;
    std::vector<Formula> parts;
    for (int i = 0; i < copies; ++i) {
        std::vector<std::pair<std::string, Variable>> renaming;
        for (const auto& p : phi.params) {
            std::string name = p.name + "_" + std::to_string(i);
            while (used.contains(name))
                name += "_";
            used.insert(name);
            renaming.emplace_back(p.name, Variable{name, p.sort});
            out.params.push_back({name, p.sort});
        }
        parts.push_back(rename_free(phi.body, renaming));
    }
    out.body = Formula::conjunction(std::move(parts));
    return out;
}

// φ(x, ȳ) ∧ [¬]⋀_{i<k} φ(x, ȳ_i), parameters ȳ first.
PartitionedFormula with_side_copies(const PartitionedFormula& phi, int k, bool negated)
{
    const PartitionedFormula side = renamed_copies(phi, k);
    PartitionedFormula out;
    out.x = phi.x;
    out.body = Formula::conjunction({phi.body, negated ? Formula::negation(side.body) : side.body});
    out.params = phi.params;
    out.params.insert(out.params.end(), side.params.begin(), side.params.end());
    return out;
}

} // namespace

PartitionedFormula conjunction_power(const PartitionedFormula& phi, int copies)
{
    if (copies < 0)
        throw Error("number of copies must be non-negative");
    if (copies == 1)
        return phi;
    return renamed_copies(phi, copies);
}

TreeWitness power_reindex(const LabeledTree& t, const PartitionedFormula& phi, int k)
{
    if (k < 1)
        throw Error("block length must be at least 1");
    check_profile(t, phi);
    if (k == 1)
        return {t, phi};
    LabeledTree out = t;
    out.depth = t.depth / k;
    out.labels.clear();
    out.profile.clear();
    for (int i = 0; i < k; ++i)
        out.profile.insert(out.profile.end(), t.profile.begin(), t.profile.end());
    for (const auto& eta : out.domain()) {
        std::vector<int> label;
        if (eta.empty()) {
            for (int i = 0; i < k; ++i)
                label = concat(std::move(label), t.label({}));
        } else {
            TreeIndex stem;
            for (std::size_t p = 0; p + 1 < eta.size(); ++p)
                stem.insert(stem.end(), static_cast<std::size_t>(k), eta[p]);
            for (int j = 1; j <= k; ++j) {
                stem.push_back(eta.back());
                label = concat(std::move(label), t.label(stem));
            }
        }
        out.labels.emplace(eta, std::move(label));
    }
    return {std::move(out), conjunction_power(phi, k)};
}

TreeWitness prune_exceptional(const LabeledTree& t, const PartitionedFormula& phi, int k)
{
    if (k < 0)
        throw Error("number of side labels must be non-negative");
    check_profile(t, phi);
    if (k == 0)
        return {t, phi};
    if (t.depth < k)
        throw Error("depth " + std::to_string(t.depth) + " is too small to prune " + std::to_string(k) +
                    " side labels");
    PartitionedFormula next = with_side_copies(phi, k, true);

    std::vector<int> sides;
    for (int i = 0; i < k; ++i)
        sides = concat(std::move(sides), t.label(side_index(i)));
    LabeledTree out = t;
    out.depth = t.depth - k;
    out.labels.clear();
    out.profile = concat(t.profile, [&] {
        std::vector<int> p;
        for (int i = 0; i < k; ++i)
            p = concat(std::move(p), t.profile);
        return p;
    }());
    for (const auto& eta : out.domain())
        out.labels.emplace(eta, concat(t.label(join(zeros(k), eta)), sides));
    return {std::move(out), std::move(next)};
}

namespace {

// Realization sets A_S of φ over one tree, S a set of indices.
class TreeSets {
public:
    TreeSets(const LabeledTree& t, const PartitionedFormula& phi)
        : table_(realization_table(t, phi, FormulaSet{phi.x, {}})), universe_(t.host.size(phi.x.sort))
    {
    }
    [[nodiscard]] Bits of(const std::vector<TreeIndex>& s) const { return joint(table_, s, universe_); }

private:
    std::map<TreeIndex, Bits> table_;
    int universe_;
};

ExtractResult extract_failure(ExtractResult r, std::string stage, std::string diagnostic)
{
    r.ok = false;
    r.stage = std::move(stage);
    r.diagnostic = std::move(diagnostic);
    return r;
}

} // namespace

ExtractResult extract_sop2(const LabeledTree& t, const PartitionedFormula& phi, const ExtractOptions& options)
{
    check_profile(t, phi);
    ExtractResult res;
    const int th = options.threshold;

    WitnessReport paths;
    paths.t = th;
    {
        const auto table = realization_table(t, phi, FormulaSet{phi.x, {}});
        if (!check_paths(t, table, t.host.size(phi.x.sort), paths))
            return extract_failure(res, "path consistency",
                                   "path at '" + index_to_string(paths.indices[0], t.branching) + "' has " +
                                       std::to_string(paths.count) + " realizations, below the threshold");
    }
    if (t.depth < 2 || t.branching < 2)
        return extract_failure(res, "depth", "need depth at least 2 and branching at least 2; increase depth");

    const TreeSets base_sets(t, phi);
    const int pair = popcount(base_sets.of({{0}, {1}}));
    if (pair >= options.pair_bound)
        return extract_failure(res, "pairwise finiteness",
                               "the pair 0, 1 has " + std::to_string(pair) + " joint realizations, not below " +
                                   std::to_string(options.pair_bound));

    // Smallest block length after which A_{0^n,1^m} no longer depends on n, m.
    std::optional<TreeWitness> reindexed;
    for (int k = 1; t.depth / k >= 2; ++k) {
        budget::check();
        TreeWitness cand = power_reindex(t, phi, k);
        const TreeSets sets(cand.tree, cand.phi);
        const Bits first = sets.of({{0}, {1}});
        bool stable = true;
        for (int n = 1; n <= cand.tree.depth && stable; ++n)
            for (int m = 1; m <= cand.tree.depth && stable; ++m)
                stable = sets.of({zeros(n), TreeIndex(static_cast<std::size_t>(m), 1)}) == first;
        if (stable) {
            res.k = k;
            reindexed = std::move(cand);
            break;
        }
    }
    if (!reindexed)
        return extract_failure(res, "block stabilization",
                               "A(0^n, 1^m) did not stabilize within depth " + std::to_string(t.depth) +
                                   "; increase depth");

    // Side labels 0^i 1 whose joint realizations already equal those of all of them.
    const int d1 = reindexed->tree.depth;
    {
        const TreeSets sets(reindexed->tree, reindexed->phi);
        std::vector<TreeIndex> all_sides;
        for (int i = 0; i < d1; ++i)
            all_sides.push_back(side_index(i));
        const Bits full = sets.of(all_sides);
        int kp = 0;
        if (popcount(full) > 0) {
            kp = -1;
            for (int k = 1; k < d1; ++k)
                if (sets.of(std::vector<TreeIndex>(all_sides.begin(), all_sides.begin() + k)) == full) {
                    kp = k;
                    break;
                }
            if (kp < 0)
                return extract_failure(res, "side stabilization",
                                       "A(1, 01, ...) did not stabilize within depth " + std::to_string(d1) +
                                           "; increase depth");
        }
        if (d1 - kp < 1)
            return extract_failure(res, "side stabilization",
                                   "pruning " + std::to_string(kp) + " side labels leaves no depth; increase depth");
        res.k_prime = kp;
    }
    TreeWitness pruned = prune_exceptional(reindexed->tree, reindexed->phi, res.k_prime);

    // Largest n with A_{1, 01, …, 0^{n-1}1, 0^n, 0^{n+1}, …} nonempty.
    const int d2 = pruned.tree.depth;
    const TreeSets sets(pruned.tree, pruned.phi);
    int best = -1;
    for (int n = 0; n <= d2; ++n) {
        std::vector<TreeIndex> s;
        for (int i = 0; i < n; ++i)
            s.push_back(side_index(i));
        for (int j = n; j <= d2; ++j)
            s.push_back(zeros(j));
        if (popcount(sets.of(s)) > 0)
            best = n;
    }
    if (best < 0)
        return extract_failure(res, "final shift", "the 0-path has no realizations after pruning");
    if (best >= d2)
        return extract_failure(res, "final shift", "the final shift leaves no depth; increase depth");
    res.n = best;

    TreeWitness out;
    if (best == 0) {
        out = std::move(pruned);
    } else {
        out.phi = with_side_copies(pruned.phi, best, false);
        std::vector<int> c;
        for (int i = 0; i < best; ++i)
            c = concat(std::move(c), pruned.tree.label(side_index(i)));
        out.tree = pruned.tree;
        out.tree.depth = d2 - best;
        out.tree.labels.clear();
        out.tree.profile = out.phi.param_profile();
        for (const auto& eta : out.tree.domain())
            out.tree.labels.emplace(eta, concat(pruned.tree.label(join(zeros(best), eta)), c));
    }

    res.verification = check_sop2_witness(out.tree, out.phi, FormulaSet{out.phi.x, {}}, th);
    if (!res.verification.pass)
        return extract_failure(res, "verification", "the normalized tree fails the " + res.verification.condition +
                                                        " condition");
    res.ok = true;
    res.witness = std::move(out);
    return res;
}

std::optional<TreeWitness> search_sop2(const FinStructure& s, const std::vector<PartitionedFormula>& templates,
                                       const SearchOptions& options)
{
    if (options.threshold < 1 || options.max_conjuncts < 1)
        throw Error("search needs threshold >= 1 and at least one conjunct");
    const auto dom = all_indices(options.branching, options.depth);
    const std::size_t nd = dom.size();
    std::vector<int> parent(nd, -1);
    std::vector<std::vector<std::size_t>> earlier_incomparable(nd);
    for (std::size_t i = 0; i < nd; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            if (comparable(dom[j], dom[i])) {
                if (dom[j].size() + 1 == dom[i].size())
                    parent[i] = static_cast<int>(j);
            } else {
                earlier_incomparable[i].push_back(j);
            }
        }

    std::size_t nodes = 0;
    for (int d = 1; d <= options.max_conjuncts; ++d) {
        for (const auto& tmpl : templates) {
            const PartitionedFormula psi = conjunction_power(tmpl, d);
            const auto profile = psi.param_profile();
            double total = 1;
            for (int sort : profile)
                total *= s.size(sort);
            if (total > static_cast<double>(options.max_candidates))
                throw BudgetExceeded("search candidates exceed the cap");

            // Labels with equal realization sets are interchangeable; keep the first.
            Realizer r(s, nullptr, psi, FormulaSet{psi.x, {}});
            std::vector<std::pair<std::vector<int>, Bits>> cands;
            std::set<Bits> seen;
            for_each_tuple(profile, s.sizes(), [&](const Tuple& label) {
                Bits b = r.of(label);
                if (popcount(b) >= options.threshold && seen.insert(b).second)
                    cands.emplace_back(label, std::move(b));
            });
            if (cands.empty())
                continue;

            std::vector<std::size_t> pick(nd, 0);
            std::vector<Bits> run(nd);
            // Iterative backtracking: pos is the index being assigned.
            std::size_t pos = 0;
            std::size_t next = 0;
            bool found = false;
            while (true) {
                bool placed = false;
                for (std::size_t c = next; c < cands.size(); ++c) {
                    if (++nodes > options.max_nodes)
                        throw BudgetExceeded("search nodes exceed the cap");
                    if (nodes % 4096 == 0)
                        budget::check();
                    const Bits& b = cands[c].second;
                    bool ok = true;
                    for (std::size_t j : earlier_incomparable[pos])
                        if (!disjoint(b, cands[pick[j]].second)) {
                            ok = false;
                            break;
                        }
                    if (!ok)
                        continue;
                    Bits path = parent[pos] < 0 ? b : run[static_cast<std::size_t>(parent[pos])];
                    if (parent[pos] >= 0)
                        and_into(path, b);
                    if (popcount(path) < options.threshold)
                        continue;
                    pick[pos] = c;
                    run[pos] = std::move(path);
                    placed = true;
                    break;
                }
                if (placed) {
                    if (++pos == nd) {
                        found = true;
                        break;
                    }
                    next = 0;
                } else {
                    if (pos == 0)
                        break;
                    --pos;
                    next = pick[pos] + 1;
                }
            }
            if (!found)
                continue;
            LabeledTree tree;
            tree.host = s;
            tree.branching = options.branching;
            tree.depth = options.depth;
            tree.profile = profile;
            for (std::size_t i = 0; i < nd; ++i)
                tree.labels.emplace(dom[i], cands[pick[i]].first);
            return TreeWitness{std::move(tree), psi};
        }
    }
    return std::nullopt;
}

WitnessReport check_based_on(const LabeledTree& tb, const LabeledTree& ta, int w)
{
    if (w < 1)
        throw Error("width must be at least 1");
    tb.validate();
    ta.validate();
    if (tb.profile != ta.profile || !(tb.host == ta.host))
        throw Error("based-on check needs the same host and label profile");
    std::set<std::pair<L0TypeCode, TypeFingerprint>> available;
    for_each_index_tuple(ta.domain(), w, [&](const std::vector<TreeIndex>& tuple) {
        available.emplace(tree_qftp(tuple), label_type(ta, tuple, ta.base));
        return true;
    });
    WitnessReport rep;
    rep.width = w;
    for_each_index_tuple(tb.domain(), w, [&](const std::vector<TreeIndex>& tuple) {
        if (available.contains({tree_qftp(tuple), label_type(tb, tuple, ta.base)}))
            return true;
        rep.pass = false;
        rep.condition = "based_on";
        rep.indices = tuple;
        return false;
    });
    return rep;
}

namespace {

std::vector<std::pair<int, int>> tree_code_edges(const std::vector<TreeIndex>& nodes, int h)
{
    std::vector<std::pair<int, int>> edges;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (static_cast<int>(nodes[i].size()) != h)
            continue;
        for (std::size_t j = 0; j < nodes.size(); ++j)
            if (j != i && is_initial_segment(nodes[j], nodes[i]))
                edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
    return edges;
}

LabeledTree node_labeled(FinStructure host, int depth, int sort)
{
    LabeledTree t;
    t.host = std::move(host);
    t.depth = depth;
    t.profile = {sort};
    const auto dom = t.domain();
    for (std::size_t i = 0; i < dom.size(); ++i)
        t.labels.emplace(dom[i], std::vector<int>{static_cast<int>(i)});
    return t;
}

} // namespace

FinStructure tree_code_structure(int h)
{
    return junk_tree_code_structure(h, 0);
}

LabeledTree tree_code_witness(int h)
{
    if (h < 1)
        throw Error("tree code witness needs h >= 1");
    return node_labeled(tree_code_structure(h), h - 1, 0);
}

FinStructure junk_tree_code_structure(int h, int junk)
{
    if (h < 0 || junk < 0)
        throw Error("tree code structure needs h >= 0 and junk >= 0");
    const auto nodes = all_indices(2, h);
    auto edges = tree_code_edges(nodes, h);
    const int n = static_cast<int>(nodes.size());
    for (int j = 0; j < junk; ++j)
        for (int i = 0; i < n; ++i)
            if (static_cast<int>(nodes[i].size()) < h)
                edges.emplace_back(n + j, i);
    return make_graph(n + junk, edges);
}

LabeledTree junk_tree_code_witness(int h, int junk)
{
    if (h < 1)
        throw Error("tree code witness needs h >= 1");
    return node_labeled(junk_tree_code_structure(h, junk), h - 1, 0);
}

FinStructure pairwise_consistent_triple_empty(int h)
{
    if (h < 0)
        throw Error("fixture needs h >= 0");
    Signature sig({"point", "node"}, {{"R", {"point", "node"}, 0}});
    const auto nodes = all_indices(2, h);
    const int n = static_cast<int>(nodes.size());
    std::vector<Tuple> rows;
    int points = 0;
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(nodes[i].size()) != h)
            continue;
        for (int j = 0; j < n; ++j)
            if (is_initial_segment(nodes[j], nodes[i]))
                rows.push_back({points, j});
        ++points;
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (!comparable(nodes[i], nodes[j])) {
                rows.push_back({points, i});
                rows.push_back({points, j});
                ++points;
            }
    return FinStructure(std::move(sig), {points, n}, {std::move(rows)});
}

LabeledTree pairwise_consistent_triple_empty_witness(int h)
{
    return node_labeled(pairwise_consistent_triple_empty(h), h, 1);
}

} // namespace forge
