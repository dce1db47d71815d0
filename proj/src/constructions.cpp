#include "forge/constructions.hpp"

#include "forge/error.hpp"

#include <algorithm>

namespace forge {

Signature cover_signature(const Signature& sig, int sort)
{
    if (sig.find_relation(kCoverRelation) >= 0)
        throw Error(std::string("signature already has a relation named ") + kCoverRelation);
    if (sort < 0 || sort >= sig.sort_count())
        throw Error("cover sort out of range");
    auto decls = sig.decls();
    decls.push_back({kCoverRelation, {sig.sort_name(sort), sig.sort_name(sort)}, 0});
    return Signature(sig.sorts(), decls);
}

FinStructure imaginary_cover_structure(const FinStructure& s, int m, int sort)
{
    if (m < 1)
        throw Error("cover multiplicity must be at least 1");
    Signature sig = cover_signature(s.sig(), sort);
    std::vector<int> sizes = s.sizes();
    sizes[sort] *= m;
    std::vector<std::vector<Tuple>> tables(sig.relation_count());
    for (int r = 0; r < s.sig().relation_count(); ++r) {
        const auto& prof = s.sig().relation(r).profile;
        for (const auto& row : s.table(r)) {
            // every choice of copies at the positions of the covered sort
            std::vector<int> slots;
            for (std::size_t p = 0; p < prof.size(); ++p)
                if (prof[p] == sort)
                    slots.push_back(static_cast<int>(p));
            std::vector<int> pick(slots.size(), 0);
            while (true) {
                Tuple t = row;
                for (std::size_t q = 0; q < slots.size(); ++q)
                    t[slots[q]] = row[slots[q]] * m + pick[q];
                tables[r].push_back(t);
                std::size_t q = 0;
                while (q < pick.size() && ++pick[q] == m)
                    pick[q++] = 0;
                if (q == pick.size())
                    break;
            }
        }
    }
    const int e = sig.relation_count() - 1;
    for (int x = 0; x < s.size(sort); ++x)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                tables[e].push_back({x * m + i, x * m + j});
    return FinStructure(std::move(sig), std::move(sizes), std::move(tables));
}

ClassPresentation imaginary_cover_class(const ClassPresentation& k, int sort)
{
    Signature sig = cover_signature(k.sig(), sort);
    const int e = sig.relation_count() - 1;
    std::vector<Helper> helpers = k.helpers();
    for (const auto& h : parse_helpers(std::string("equivalence(") + kCoverRelation + ")", sig))
        helpers.push_back(h);
    for (int r = 0; r < k.sig().relation_count(); ++r) {
        const auto& prof = k.sig().relation(r).profile;
        if (std::find(prof.begin(), prof.end(), sort) != prof.end())
            helpers.push_back({HelperKind::invariant, r, 0, 1, e});
    }
    auto shared = std::make_shared<const Signature>(sig);
    std::vector<FinStructure> forbidden;
    for (const auto& f : k.forbidden()) {
        const FinStructure& d = f.structure;
        std::vector<std::vector<Tuple>> tables;
        for (int r = 0; r < d.sig().relation_count(); ++r)
            tables.push_back(d.table(r));
        std::vector<Tuple> diag;
        for (int x = 0; x < d.size(sort); ++x)
            diag.push_back({x, x});
        tables.push_back(diag);
        forbidden.emplace_back(shared, d.sizes(), std::move(tables));
    }
    return ClassPresentation("cover(" + k.name() + ")", sig, std::move(forbidden), std::move(helpers));
}

Signature pfc_signature(const Signature& base)
{
    if (base.sort_count() != 1)
        throw Error("pfc needs a single-sorted signature, got " + std::to_string(base.sort_count()) + " sorts");
    std::vector<RelationDecl> decls;
    for (const auto& r : base.relations()) {
        RelationDecl d{r.name, {"P"}, 0};
        for (int i = 0; i < r.arity(); ++i)
            d.profile.push_back("O");
        decls.push_back(d);
    }
    return Signature({"O", "P"}, decls);
}

FinStructure fiber_structure(const FinStructure& m, int b, const Signature& base)
{
    if (!(m.sig() == pfc_signature(base)))
        throw SignatureMismatch("fiber_structure needs a structure over the pfc signature of the given base");
    if (b < 0 || b >= m.size(1))
        throw Error("fiber point " + std::to_string(b) + " is not a P-element");
    std::vector<std::vector<Tuple>> tables(base.relation_count());
    for (int r = 0; r < base.relation_count(); ++r)
        for (const auto& row : m.table(r))
            if (row[0] == b)
                tables[r].emplace_back(row.begin() + 1, row.end());
    return FinStructure(base, {m.size(0)}, std::move(tables));
}

ClassPresentation pfc_class(const ClassPresentation& k)
{
    Signature sig = pfc_signature(k.sig());
    auto shared = std::make_shared<const Signature>(sig);
    std::vector<Helper> helpers;
    for (const auto& h : k.generation_helpers()) {
        if (h.kind == HelperKind::invariant)
            throw Error("pfc of a class with invariance helpers is not supported");
        helpers.push_back({h.kind, h.rel, h.i + 1, h.j + 1, -1});
    }
    std::vector<FinStructure> forbidden;
    for (const auto& f : k.forbidden()) {
        const FinStructure& d = f.structure;
        std::vector<std::vector<Tuple>> tables(sig.relation_count());
        for (int r = 0; r < d.sig().relation_count(); ++r)
            for (const auto& row : d.table(r)) {
                Tuple t{0};
                t.insert(t.end(), row.begin(), row.end());
                tables[r].push_back(t);
            }
        forbidden.emplace_back(shared, std::vector<int>{d.size(0), 1}, std::move(tables));
    }
    return ClassPresentation("pfc(" + k.name() + ")", sig, std::move(forbidden), std::move(helpers));
}

} // namespace forge

#include "forge/evaluate.hpp"

namespace forge {

std::string kind_name(GrowthVerdict::Kind k)
{
    switch (k) {
    case GrowthVerdict::Kind::algebraic: return "algebraic";
    case GrowthVerdict::Kind::growing: return "growing";
    case GrowthVerdict::Kind::inconclusive: return "inconclusive";
    }
    return "?";
}

GrowthVerdict classify_counts(std::vector<int> stages, std::vector<int> counts)
{
    GrowthVerdict v;
    v.stages = std::move(stages);
    v.counts = std::move(counts);
    if (v.counts.empty())
        return v;
    if (std::all_of(v.counts.begin(), v.counts.end(), [&](int c) { return c == v.counts.front(); })) {
        v.kind = GrowthVerdict::Kind::algebraic;
        v.bound = v.counts.front();
        return v;
    }
    int run = 1;
    int best = 1;
    for (std::size_t i = 1; i < v.counts.size(); ++i) {
        run = v.counts[i] > v.counts[i - 1] ? run + 1 : 1;
        best = std::max(best, run);
    }
    if (best >= 3)
        v.kind = GrowthVerdict::Kind::growing;
    return v;
}

namespace {

void check_stage_list(const StageChain& chain, int stage, const std::vector<int>& stages)
{
    (void)chain.stage(stage);
    if (stages.size() < 3)
        throw Error("growth estimates need at least three stages");
    for (std::size_t i = 0; i < stages.size(); ++i) {
        if (stages[i] < stage)
            throw Error("stage " + std::to_string(stages[i]) + " precedes the stage of the parameters");
        if (i > 0 && stages[i] <= stages[i - 1])
            throw Error("stage list must be strictly increasing");
        (void)chain.stage(stages[i]);
    }
}

} // namespace

GrowthVerdict acl_estimate(const StageChain& chain, int stage, Elem a, const std::vector<Elem>& base,
                           const std::vector<int>& stages)
{
    check_stage_list(chain, stage, stages);
    const FinStructure& s0 = chain.stage(stage);
    if (!s0.contains(a))
        throw Error("element " + to_string(a) + " is not in stage " + std::to_string(stage));
    for (const Elem& c : base)
        if (!s0.contains(c))
            throw Error("base element " + to_string(c) + " is not in stage " + std::to_string(stage));
    std::vector<int> counts;
    for (int t : stages) {
        const Embedding m = chain.map_forward(stage, t);
        std::vector<Elem> mapped;
        for (const Elem& c : base)
            mapped.push_back(m(c));
        counts.push_back(count_type_realizations(chain.stage(t), m(a), mapped));
    }
    return classify_counts(stages, std::move(counts));
}

GrowthVerdict formula_growth(const StageChain& chain, const PartitionedFormula& phi, const std::vector<Elem>& params,
                             int stage, const std::vector<int>& stages)
{
    check_stage_list(chain, stage, stages);
    if (params.size() != phi.params.size())
        throw Error("formula has " + std::to_string(phi.params.size()) + " parameters, got " +
                    std::to_string(params.size()));
    std::vector<int> counts;
    for (int t : stages) {
        const Embedding m = chain.map_forward(stage, t);
        Assignment a;
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (params[i].sort != phi.params[i].sort)
                throw Error("parameter " + phi.params[i].name + " has the wrong sort");
            a[phi.params[i].name] = m(params[i]).id;
        }
        counts.push_back(static_cast<int>(realizations(chain.stage(t), phi.body, phi.x, a).size()));
    }
    return classify_counts(stages, std::move(counts));
}

FormulaGrowthReport classify_formula_growth(const StageChain& chain, const PartitionedFormula& phi,
                                            const std::vector<int>& stages, int k_max, std::size_t keep_samples)
{
    if (stages.empty())
        throw Error("no stages listed");
    const int first = stages.front();
    const FinStructure& s0 = chain.stage(first);
    FormulaGrowthReport report;
    const std::size_t n = phi.params.size();
    std::vector<int> idx(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        if (s0.size(phi.params[i].sort) == 0)
            return report;
    int min_growing_final = -1;
    while (true) {
        std::vector<Elem> params;
        for (std::size_t i = 0; i < n; ++i)
            params.push_back({phi.params[i].sort, idx[i]});
        GrowthVerdict v = formula_growth(chain, phi, params, first, stages);
        ++report.instances;
        switch (v.kind) {
        case GrowthVerdict::Kind::algebraic:
            ++report.algebraic;
            report.max_algebraic_bound = std::max(report.max_algebraic_bound, v.bound);
            break;
        case GrowthVerdict::Kind::growing:
            ++report.growing;
            min_growing_final = min_growing_final < 0 ? v.counts.back() : std::min(min_growing_final, v.counts.back());
            break;
        case GrowthVerdict::Kind::inconclusive: ++report.inconclusive; break;
        }
        if (report.samples.size() < keep_samples)
            report.samples.push_back({params, std::move(v)});
        bool done = true;
        for (std::size_t i = n; i-- > 0;) {
            if (++idx[i] < s0.size(phi.params[i].sort)) {
                done = false;
                break;
            }
            idx[i] = 0;
        }
        if (done)
            break;
    }
    report.uniform_bound = report.max_algebraic_bound;
    report.uniform_bound_found = report.inconclusive == 0 && report.uniform_bound <= k_max &&
                                 (min_growing_final < 0 || min_growing_final > report.uniform_bound);
    return report;
}

} // namespace forge
