#include "forge/presentation.hpp"

#include "forge/budget.hpp"
#include "forge/builtins.hpp"
#include "forge/construct.hpp"
#include "forge/embedding.hpp"
#include "forge/error.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace forge {

namespace {

const char* kind_name(HelperKind k)
{
    switch (k) {
    case HelperKind::symmetric: return "symmetric";
    case HelperKind::reflexive: return "reflexive";
    case HelperKind::irreflexive: return "irreflexive";
    case HelperKind::transitive: return "transitive";
    case HelperKind::invariant: return "invariant";
    }
    return "?";
}

std::string trim(std::string_view s)
{
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
        ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
        --b;
    return std::string(s.substr(a, b - a));
}

void check_positions(const Helper& h, const Signature& sig)
{
    const auto& sym = sig.relation(h.rel);
    if (h.kind == HelperKind::invariant) {
        const auto& e = sig.relation(h.other);
        if (e.arity() != 2 || e.profile[0] != e.profile[1])
            throw Error("invariant helper needs a binary relation on one sort, got " + e.name);
        return;
    }
    if (h.i < 0 || h.j < 0 || h.i >= sym.arity() || h.j >= sym.arity() || h.i == h.j ||
        sym.profile[h.i] != sym.profile[h.j])
        throw Error(std::string(kind_name(h.kind)) + " helper on " + sym.name + " needs two distinct positions of one sort");
}

} // namespace

std::string helper_name(const Helper& h, const Signature& sig)
{
    const auto& sym = sig.relation(h.rel);
    std::string out = std::string(kind_name(h.kind)) + "(" + sym.name;
    if (h.kind == HelperKind::invariant)
        return out + "," + sig.relation(h.other).name + ")";
    if (!(sym.arity() == 2 && h.i == 0 && h.j == 1))
        out += "," + std::to_string(h.i) + "," + std::to_string(h.j);
    return out + ")";
}

std::vector<Helper> parse_helpers(std::string_view text, const Signature& sig)
{
    const auto open = text.find('(');
    const auto close = text.rfind(')');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open)
        throw ParseError("malformed helper '" + std::string(text) + "'", 0);
    const std::string kind = trim(text.substr(0, open));
    std::vector<std::string> args;
    std::string_view rest = text.substr(open + 1, close - open - 1);
    while (true) {
        const auto comma = rest.find(',');
        args.push_back(trim(rest.substr(0, comma)));
        if (comma == std::string_view::npos)
            break;
        rest = rest.substr(comma + 1);
    }
    const int rel = sig.find_relation(args[0]);
    if (rel < 0)
        throw ParseError("helper '" + std::string(text) + "' names unknown relation " + args[0], open + 1);
    std::vector<Helper> out;
    if (kind == "equivalence") {
        out = {{HelperKind::reflexive, rel, 0, 1, -1},
               {HelperKind::symmetric, rel, 0, 1, -1},
               {HelperKind::transitive, rel, 0, 1, -1}};
    } else if (kind == "invariant") {
        if (args.size() != 2 || sig.find_relation(args[1]) < 0)
            throw ParseError("helper '" + std::string(text) + "' needs a relation and an equivalence", open + 1);
        out = {{HelperKind::invariant, rel, 0, 1, sig.find_relation(args[1])}};
    } else {
        HelperKind k;
        if (kind == "symmetric")
            k = HelperKind::symmetric;
        else if (kind == "reflexive")
            k = HelperKind::reflexive;
        else if (kind == "irreflexive")
            k = HelperKind::irreflexive;
        else if (kind == "transitive")
            k = HelperKind::transitive;
        else
            throw ParseError("unknown helper kind '" + kind + "'", 0);
        Helper h{k, rel, 0, 1, -1};
        if (args.size() == 3) {
            h.i = std::stoi(args[1]);
            h.j = std::stoi(args[2]);
        } else if (args.size() != 1) {
            throw ParseError("helper '" + std::string(text) + "' takes one or three arguments", open + 1);
        }
        out = {h};
    }
    for (const auto& h : out)
        check_positions(h, sig);
    return out;
}

bool helper_holds(const Helper& h, const FinStructure& s)
{
    const auto& prof = s.sig().relation(h.rel).profile;
    const auto& rows = s.table(h.rel);
    switch (h.kind) {
    case HelperKind::symmetric:
        for (auto t : rows) {
            std::swap(t[h.i], t[h.j]);
            if (!s.holds(h.rel, t))
                return false;
        }
        return true;
    case HelperKind::irreflexive:
        return std::none_of(rows.begin(), rows.end(), [&](const Tuple& t) { return t[h.i] == t[h.j]; });
    case HelperKind::reflexive: {
        bool ok = true;
        for_each_tuple(prof, s.sizes(), [&](const Tuple& t) {
            if (ok && t[h.i] == t[h.j] && !s.holds(h.rel, t))
                ok = false;
        });
        return ok;
    }
    case HelperKind::transitive:
        for (const auto& t : rows)
            for (const auto& u : rows) {
                bool agree = u[h.i] == t[h.j];
                for (std::size_t p = 0; p < t.size() && agree; ++p)
                    if (static_cast<int>(p) != h.i && static_cast<int>(p) != h.j)
                        agree = t[p] == u[p];
                if (!agree)
                    continue;
                Tuple w = t;
                w[h.j] = u[h.j];
                if (!s.holds(h.rel, w))
                    return false;
            }
        return true;
    case HelperKind::invariant: {
        const int esort = s.sig().relation(h.other).profile[0];
        for (const auto& t : rows)
            for (std::size_t p = 0; p < t.size(); ++p) {
                if (prof[p] != esort)
                    continue;
                for (int z = 0; z < s.size(esort); ++z) {
                    const int pair[2] = {t[p], z};
                    if (!s.holds(h.other, pair))
                        continue;
                    Tuple w = t;
                    w[p] = z;
                    if (!s.holds(h.rel, w))
                        return false;
                }
            }
        return true;
    }
    }
    return true;
}

int helper_points(const Helper& h, const Signature& sig)
{
    const int ar = sig.relation(h.rel).arity();
    switch (h.kind) {
    case HelperKind::symmetric: return ar;
    case HelperKind::reflexive:
    case HelperKind::irreflexive: return ar - 1;
    case HelperKind::transitive:
    case HelperKind::invariant: return ar + 1;
    }
    return ar;
}

bool helper_is_local(const Helper& h)
{
    return h.kind == HelperKind::symmetric || h.kind == HelperKind::reflexive || h.kind == HelperKind::irreflexive;
}

std::vector<Helper> flag_helpers(const Signature& sig)
{
    std::vector<Helper> out;
    for (int r = 0; r < sig.relation_count(); ++r) {
        const auto flags = sig.relation(r).flags;
        if (flags & kSymmetric)
            out.push_back({HelperKind::symmetric, r, 0, 1, -1});
        if (flags & kReflexive)
            out.push_back({HelperKind::reflexive, r, 0, 1, -1});
        if (flags & kIrreflexive)
            out.push_back({HelperKind::irreflexive, r, 0, 1, -1});
    }
    return out;
}

void for_each_tuple_using(const Signature& sig, int rel, const std::vector<Elem>& pool, const std::vector<Elem>& must,
                          const std::function<void(const Tuple&)>& visit)
{
    const auto& prof = sig.relation(rel).profile;
    const int ar = static_cast<int>(prof.size());
    std::vector<Elem> free_pool;
    for (const Elem& e : pool)
        if (std::find(must.begin(), must.end(), e) == must.end())
            free_pool.push_back(e);
    Tuple t(ar);
    std::vector<int> used(must.size(), 0);
    int unused = static_cast<int>(must.size());
    std::function<void(int)> rec = [&](int p) {
        if (p == ar) {
            if (unused == 0)
                visit(t);
            return;
        }
        if (unused > ar - p)
            return;
        for (std::size_t m = 0; m < must.size(); ++m) {
            if (must[m].sort != prof[p])
                continue;
            t[p] = must[m].id;
            if (used[m]++ == 0)
                --unused;
            rec(p + 1);
            if (--used[m] == 0)
                ++unused;
        }
        if (unused > ar - p - 1)
            return;
        for (const Elem& e : free_pool) {
            if (e.sort != prof[p])
                continue;
            t[p] = e.id;
            rec(p + 1);
        }
    };
    rec(0);
}

AtomSpace build_atom_space(const std::vector<Helper>& helpers, std::vector<Atom> candidates)
{
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    const std::size_t n = candidates.size();
    std::map<Atom, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i)
        index.emplace(candidates[i], i);

    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x)
            x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<int> forced(n, -1);
    AtomSpace space;
    for (std::size_t i = 0; i < n; ++i) {
        const Atom& a = candidates[i];
        for (const Helper& h : helpers) {
            if (h.rel != a.rel)
                continue;
            if (h.kind == HelperKind::symmetric) {
                Atom b = a;
                std::swap(b.tuple[h.i], b.tuple[h.j]);
                auto it = index.find(b);
                if (it != index.end())
                    parent[find(i)] = find(it->second);
            } else if ((h.kind == HelperKind::reflexive || h.kind == HelperKind::irreflexive) &&
                       a.tuple[h.i] == a.tuple[h.j]) {
                const int v = h.kind == HelperKind::reflexive ? 1 : 0;
                if (forced[i] >= 0 && forced[i] != v)
                    space.infeasible = true;
                forced[i] = v;
            }
        }
    }
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i)
        groups[find(i)].push_back(i);
    std::vector<std::vector<std::size_t>> ordered;
    for (auto& [root, members] : groups)
        ordered.push_back(members);
    std::sort(ordered.begin(), ordered.end(), [](const auto& x, const auto& y) { return x.front() < y.front(); });
    for (const auto& members : ordered) {
        int value = -1;
        for (std::size_t i : members) {
            if (forced[i] < 0)
                continue;
            if (value >= 0 && value != forced[i])
                space.infeasible = true;
            value = forced[i];
        }
        if (value == 1) {
            for (std::size_t i : members)
                space.forced_true.push_back(candidates[i]);
        } else if (value < 0) {
            AtomVariable var;
            for (std::size_t i : members)
                var.atoms.push_back(candidates[i]);
            space.vars.push_back(std::move(var));
        }
    }
    return space;
}

namespace {

// Adds one point of each sort to every type of size k, in every way allowed by
// the local helpers, keeping those accepted by `keep`.
template <class Keep>
std::vector<AgeEntry> grow_types(const std::shared_ptr<const Signature>& sig, const std::vector<Helper>& local, int n,
                                 std::size_t max_count, Keep&& keep)
{
    std::vector<AgeEntry> all;
    FinStructure empty(sig, std::vector<int>(sig->sort_count(), 0),
                       std::vector<std::vector<Tuple>>(sig->relation_count()));
    if (!keep(empty, Elem{-1, -1}))
        return all;
    all.push_back({canonical_form(empty), empty});
    std::vector<FinStructure> layer{empty};
    for (int size = 1; size <= n; ++size) {
        std::map<CanonicalCode, FinStructure> next;
        for (const auto& base : layer) {
            for (int s = 0; s < sig->sort_count(); ++s) {
                StructureBuilder b(base);
                const int x = b.add_element(s);
                const Elem ex{s, x};
                std::vector<Elem> pool;
                for (int t = 0; t < sig->sort_count(); ++t)
                    for (int id = 0; id < b.size(t); ++id)
                        pool.push_back({t, id});
                std::vector<Atom> cand;
                for (int r = 0; r < sig->relation_count(); ++r)
                    for_each_tuple_using(*sig, r, pool, {ex}, [&](const Tuple& t) { cand.push_back({r, t}); });
                const AtomSpace space = build_atom_space(local, cand);
                if (space.infeasible)
                    continue;
                if (space.vars.size() > 24)
                    throw BudgetExceeded("too many free atoms (" + std::to_string(space.vars.size()) +
                                         ") while enumerating structures of size " + std::to_string(size));
                for (const auto& a : space.forced_true)
                    b.set(a.rel, a.tuple, true);
                const std::uint64_t total = std::uint64_t{1} << space.vars.size();
                for (std::uint64_t mask = 0; mask < total; ++mask) {
                    budget::check();
                    for (std::size_t v = 0; v < space.vars.size(); ++v)
                        for (const auto& a : space.vars[v].atoms)
                            b.set(a.rel, a.tuple, ((mask >> v) & 1) != 0);
                    FinStructure cand_s = b.build();
                    if (!keep(cand_s, ex))
                        continue;
                    CanonicalCode code = canonical_form(cand_s);
                    if (!next.contains(code)) {
                        next.emplace(std::move(code), std::move(cand_s));
                        if (all.size() + next.size() > max_count)
                            throw BudgetExceeded("more than " + std::to_string(max_count) +
                                                 " isomorphism types up to size " + std::to_string(size));
                    }
                }
            }
        }
        layer.clear();
        for (auto& [code, st] : next) {
            all.push_back({code, st});
            layer.push_back(st);
        }
    }
    return all;
}

bool satisfies_all(const std::vector<Helper>& hs, const FinStructure& s)
{
    return std::all_of(hs.begin(), hs.end(), [&](const Helper& h) { return helper_holds(h, s); });
}

// Violators of some helper in `hs` all of whose one-point deletions satisfy every helper.
std::vector<FinStructure> minimal_violators(const std::shared_ptr<const Signature>& sig,
                                            const std::vector<Helper>& generation, const std::vector<Helper>& hs)
{
    int points = 0;
    for (const auto& h : hs)
        points = std::max(points, helper_points(h, *sig));
    std::vector<FinStructure> out;
    if (hs.empty())
        return out;
    const auto types = grow_types(sig, generation, points, 200000, [](const FinStructure&, Elem) { return true; });
    for (const auto& t : types) {
        if (satisfies_all(hs, t.structure))
            continue;
        bool minimal = true;
        const auto elems = t.structure.elements();
        for (std::size_t drop = 0; drop < elems.size() && minimal; ++drop) {
            std::vector<Elem> keep;
            for (std::size_t i = 0; i < elems.size(); ++i)
                if (i != drop)
                    keep.push_back(elems[i]);
            minimal = satisfies_all(hs, induced_substructure(t.structure, keep).structure);
        }
        if (minimal)
            out.push_back(t.structure);
    }
    return out;
}

} // namespace

std::vector<AgeEntry> enumerate_generated(const Signature& sig, const std::vector<Helper>& local, int n,
                                          std::size_t max_count)
{
    auto ptr = std::make_shared<const Signature>(sig);
    return grow_types(ptr, local, n, max_count, [](const FinStructure&, Elem) { return true; });
}

ClassPresentation::ClassPresentation(std::string name, Signature sig, std::vector<FinStructure> forbidden,
                                     std::vector<Helper> helpers)
    : name_(std::move(name)), sig_(std::make_shared<const Signature>(std::move(sig))), helpers_(std::move(helpers))
{
    for (const auto& h : helpers_)
        check_positions(h, *sig_);
    std::vector<Helper> local, global;
    for (const auto& h : helpers_)
        (helper_is_local(h) ? local : global).push_back(h);
    const std::vector<Helper> flags = flag_helpers(*sig_);
    generation_ = flags;
    for (const auto& h : local)
        if (std::find(generation_.begin(), generation_.end(), h) == generation_.end())
            generation_.push_back(h);
    for (const auto& h : global)
        generation_.push_back(h);

    std::vector<FinStructure> patterns;
    for (auto& f : forbidden) {
        if (!(f.sig() == *sig_))
            throw SignatureMismatch("forbidden pattern over a different signature in class " + name_);
        patterns.emplace_back(sig_, f.sizes(), [&] {
            std::vector<std::vector<Tuple>> tables;
            for (int r = 0; r < sig_->relation_count(); ++r)
                tables.push_back(f.table(r));
            return tables;
        }());
    }
    for (auto& v : minimal_violators(sig_, flags, local))
        patterns.push_back(std::move(v));
    std::vector<Helper> level1 = flags;
    level1.insert(level1.end(), local.begin(), local.end());
    for (auto& v : minimal_violators(sig_, level1, global))
        patterns.push_back(std::move(v));

    std::map<CanonicalCode, FinStructure> unique;
    for (auto& p : patterns)
        unique.emplace(canonical_form(p), std::move(p));
    std::vector<std::pair<CanonicalCode, FinStructure>> sorted(unique.begin(), unique.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        return a.second.total_size() < b.second.total_size();
    });
    for (auto& [code, st] : sorted) {
        bool redundant = false;
        for (const auto& kept : forbidden_)
            if (kept.structure.total_size() < st.total_size() && embeds(kept.structure, st)) {
                redundant = true;
                break;
            }
        if (redundant)
            continue;
        const bool excluded = !std::all_of(level1.begin(), level1.end(),
                                           [&](const Helper& h) { return helper_holds(h, st); });
        forbidden_.push_back({st, code, excluded});
    }
}

std::vector<std::string> ClassPresentation::helper_names() const
{
    std::vector<std::string> out;
    for (const auto& h : helpers_)
        out.push_back(helper_name(h, *sig_));
    return out;
}

std::vector<std::string> builtin_class_names()
{
    return {"pure_set", "random_graph", "triangle_free", "kn_free(n)", "degree_le_1", "equivalence_relation"};
}

ClassPresentation builtin_class(std::string_view name)
{
    const std::string n = trim(name);
    if (n == "pure_set")
        return ClassPresentation("pure_set", set_signature(), {});
    if (n == "random_graph" || n == "graphs")
        return ClassPresentation("random_graph", graph_signature(), {});
    if (n == "triangle_free")
        return ClassPresentation("triangle_free", graph_signature(), {complete_graph(3)});
    if (n == "degree_le_1")
        return ClassPresentation("degree_le_1", graph_signature(), {path_graph(3), complete_graph(3)});
    if (n == "equivalence_relation") {
        Signature sig({"V"}, {{"E", {"V", "V"}, {}}});
        return ClassPresentation("equivalence_relation", sig, {}, parse_helpers("equivalence(E)", sig));
    }
    if (n.rfind("kn_free(", 0) == 0 && n.back() == ')') {
        int k = 0;
        try {
            k = std::stoi(n.substr(8, n.size() - 9));
        } catch (const std::exception&) {
            throw Error("malformed builtin class '" + n + "'");
        }
        if (k < 1)
            throw Error("kn_free needs n >= 1");
        return ClassPresentation(n, graph_signature(), {complete_graph(k)});
    }
    throw Error("unknown builtin class '" + n + "'");
}

Json class_to_json(const ClassPresentation& k)
{
    Json forbidden = Json::array();
    for (const auto& f : k.forbidden())
        forbidden.push_back(structure_to_json(f.structure));
    return {{"name", k.name()},
            {"signature", signature_to_json(k.sig())},
            {"forbidden", std::move(forbidden)},
            {"helpers", k.helper_names()}};
}

ClassPresentation class_from_json(const Json& j)
{
    if (!j.is_object() || !j.contains("signature"))
        throw Error("class document needs a signature");
    const Signature sig = signature_from_json(j.at("signature"));
    std::vector<FinStructure> forbidden;
    if (j.contains("forbidden"))
        for (const auto& f : j.at("forbidden")) {
            FinStructure s = structure_from_json(f);
            if (!(s.sig() == sig))
                throw SignatureMismatch("forbidden structure does not use the class signature");
            forbidden.push_back(std::move(s));
        }
    std::vector<Helper> helpers;
    if (j.contains("helpers"))
        for (const auto& h : j.at("helpers"))
            for (auto& x : parse_helpers(h.get<std::string>(), sig))
                if (std::find(helpers.begin(), helpers.end(), x) == helpers.end())
                    helpers.push_back(x);
    return ClassPresentation(j.value("name", std::string("class")), sig, std::move(forbidden), std::move(helpers));
}

bool class_membership(const ClassPresentation& k, const FinStructure& s)
{
    if (!(k.sig() == s.sig()))
        throw SignatureMismatch("structure signature differs from class " + k.name());
    for (const auto& f : k.forbidden())
        if (embeds(f.structure, s))
            return false;
    return true;
}

template <class Target>
std::vector<Elem> anchored_violation(const ClassPresentation& k, const Target& d, const std::vector<Elem>& anchors,
                                     const std::vector<std::vector<char>>& allowed, bool skip_generation_excluded)
{
    std::vector<Elem> image;
    EmbeddingSearchOptions opts;
    opts.allowed = allowed;
    for (const auto& f : k.forbidden()) {
        if (skip_generation_excluded && f.excluded_by_generation)
            continue;
        const FinStructure& p = f.structure;
        if (p.total_size() < static_cast<int>(anchors.size()))
            continue;
        const auto src = p.elements();
        std::vector<char> taken(src.size(), 0);
        opts.pinned.clear();
        bool found = false;
        std::function<void(std::size_t)> rec = [&](std::size_t a) {
            if (found)
                return;
            if (a == anchors.size()) {
                for_each_embedding(p, d, [&](const Embedding& e) {
                    for (const Elem& x : src)
                        image.push_back(e(x));
                    found = true;
                    return false;
                }, opts);
                return;
            }
            for (std::size_t i = 0; i < src.size() && !found; ++i) {
                if (taken[i] || src[i].sort != anchors[a].sort)
                    continue;
                taken[i] = 1;
                opts.pinned.push_back({src[i], anchors[a]});
                rec(a + 1);
                opts.pinned.pop_back();
                taken[i] = 0;
            }
        };
        rec(0);
        if (found)
            return image;
    }
    return image;
}

template std::vector<Elem> anchored_violation<FinStructure>(const ClassPresentation&, const FinStructure&,
                                                            const std::vector<Elem>&,
                                                            const std::vector<std::vector<char>>&, bool);
template std::vector<Elem> anchored_violation<StructureBuilder>(const ClassPresentation&, const StructureBuilder&,
                                                                const std::vector<Elem>&,
                                                                const std::vector<std::vector<char>>&, bool);

std::vector<AgeEntry> enumerate_age(const ClassPresentation& k, int n, std::size_t max_count)
{
    if (n < 0)
        throw Error("enumerate_age needs n >= 0");
    std::vector<Helper> local;
    for (const auto& h : k.generation_helpers())
        if (helper_is_local(h))
            local.push_back(h);
    auto types = grow_types(k.sig_ptr(), local, n, max_count, [&](const FinStructure& s, Elem x) {
        if (x.sort < 0)
            return class_membership(k, s);
        return anchored_violation(k, s, {x}, {}, true).empty();
    });
    std::erase_if(types, [](const AgeEntry& t) { return t.structure.total_size() == 0; });
    return types;
}

} // namespace forge
