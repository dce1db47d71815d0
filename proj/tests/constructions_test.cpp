#include "forge/amalgamation.hpp"
#include "forge/builtins.hpp"
#include "forge/chain.hpp"
#include "forge/construct.hpp"
#include "forge/constructions.hpp"
#include "forge/embedding.hpp"
#include "forge/error.hpp"
#include "forge/syntax.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace forge;
using fixtures::all_structures;
using fixtures::brute_iso_key;

namespace {

// Realizations of qftp(a/C) by direct comparison: y is new, of a's sort, and every
// tuple over C ∪ {y} that uses y agrees with the same tuple with a in y's place.
int naive_type_count(const FinStructure& s, Elem a, const std::vector<Elem>& base)
{
    const Signature& sig = s.sig();
    int count = 0;
    for (int y = 0; y < s.size(a.sort); ++y) {
        const Elem cand{a.sort, y};
        if (std::find(base.begin(), base.end(), cand) != base.end())
            continue;
        if (std::find(base.begin(), base.end(), a) != base.end())
            return 1; // a itself is named
        bool same = true;
        for (int r = 0; r < sig.relation_count() && same; ++r) {
            const auto& prof = sig.relation(r).profile;
            std::vector<Elem> pool = base;
            pool.push_back(cand);
            // every tuple over pool; compare after swapping cand for a
            std::vector<std::size_t> idx(prof.size(), 0);
            while (same) {
                Tuple t(prof.size()), u(prof.size());
                bool fits = true, uses = false;
                for (std::size_t p = 0; p < prof.size(); ++p) {
                    const Elem& e = pool[idx[p]];
                    fits = fits && e.sort == prof[p];
                    uses = uses || e == cand;
                    t[p] = e.id;
                    u[p] = e == cand ? a.id : e.id;
                }
                if (fits && uses && s.holds(r, t) != s.holds(r, u))
                    same = false;
                std::size_t p = 0;
                while (p < idx.size() && ++idx[p] == pool.size())
                    idx[p++] = 0;
                if (p == idx.size())
                    break;
            }
        }
        count += same;
    }
    return count;
}

bool is_partition_relation(const FinStructure& s, int e)
{
    const int n = s.size(0);
    for (int a = 0; a < n; ++a) {
        if (!s.holds(e, Tuple{a, a}))
            return false;
        for (int b = 0; b < n; ++b) {
            if (s.holds(e, Tuple{a, b}) != s.holds(e, Tuple{b, a}))
                return false;
            for (int c = 0; c < n; ++c)
                if (s.holds(e, Tuple{a, b}) && s.holds(e, Tuple{b, c}) && !s.holds(e, Tuple{a, c}))
                    return false;
        }
    }
    return true;
}

// The cover-class oracle: E an equivalence, R invariant under E, and the graph on
// the classes is a graph (no R inside a class) in the base class.
bool cover_member_oracle(const FinStructure& s, bool triangle_free)
{
    const int r = s.sig().relation_index("R"), e = s.sig().relation_index("E");
    const int n = s.size(0);
    if (!is_partition_relation(s, e))
        return false;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int a2 = 0; a2 < n; ++a2)
                for (int b2 = 0; b2 < n; ++b2)
                    if (s.holds(e, Tuple{a, a2}) && s.holds(e, Tuple{b, b2}) &&
                        s.holds(r, Tuple{a, b}) != s.holds(r, Tuple{a2, b2}))
                        return false;
    std::vector<int> rep(n);
    for (int a = 0; a < n; ++a) {
        rep[a] = a;
        for (int b = 0; b < a; ++b)
            if (s.holds(e, Tuple{a, b})) {
                rep[a] = rep[b];
                break;
            }
    }
    for (int a = 0; a < n; ++a)
        if (s.holds(r, Tuple{a, a}) || (rep[a] != a && s.holds(r, Tuple{a, rep[a]})))
            return false;
    if (!triangle_free)
        return true;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                if (s.holds(r, Tuple{a, b}) && s.holds(r, Tuple{b, c}) && s.holds(r, Tuple{a, c}))
                    return false;
    return true;
}

// Cover-signature structures on n points whose E is an equivalence: every set
// partition combined with every graph.
std::vector<FinStructure> partitioned_graphs(const Signature& sig, int n)
{
    std::vector<std::vector<int>> partitions{{}};
    for (int i = 0; i < n; ++i) {
        std::vector<std::vector<int>> next;
        for (const auto& p : partitions) {
            const int blocks = p.empty() ? 0 : *std::max_element(p.begin(), p.end()) + 1;
            for (int b = 0; b <= blocks; ++b) {
                auto q = p;
                q.push_back(b);
                next.push_back(q);
            }
        }
        partitions = std::move(next);
    }
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            pairs.emplace_back(a, b);
    const int r = sig.relation_index("R"), e = sig.relation_index("E");
    std::vector<FinStructure> out;
    for (const auto& p : partitions)
        for (unsigned mask = 0; mask < (1u << pairs.size()); ++mask) {
            std::vector<std::vector<Tuple>> tables(sig.relation_count());
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    if (p[a] == p[b])
                        tables[e].push_back({a, b});
            for (std::size_t i = 0; i < pairs.size(); ++i)
                if (mask >> i & 1) {
                    tables[r].push_back({pairs[i].first, pairs[i].second});
                    tables[r].push_back({pairs[i].second, pairs[i].first});
                }
            out.emplace_back(sig, std::vector<int>{n}, std::move(tables));
        }
    return out;
}

// Fiber condition checked by hand on a pfc structure over the graph language.
bool fibers_are_graphs(const FinStructure& m, bool triangle_free)
{
    const int o = m.size(0), p = m.size(1);
    for (int b = 0; b < p; ++b)
        for (int x = 0; x < o; ++x) {
            if (m.holds(0, Tuple{b, x, x}))
                return false;
            for (int y = 0; y < o; ++y) {
                if (m.holds(0, Tuple{b, x, y}) != m.holds(0, Tuple{b, y, x}))
                    return false;
                for (int z = 0; triangle_free && z < o; ++z)
                    if (m.holds(0, Tuple{b, x, y}) && m.holds(0, Tuple{b, y, z}) && m.holds(0, Tuple{b, x, z}))
                        return false;
            }
        }
    return true;
}

StageChain grow(ClassPresentation k, std::uint64_t seed, int stages, int steps)
{
    StageChain c(std::move(k), seed, 3);
    for (int i = 0; i < stages; ++i)
        c = build_stage(c, steps);
    return c;
}

} // namespace

TEST(Cover, WorkedExamples)
{
    const FinStructure one(set_signature(), {1}, {});
    const FinStructure c1 = imaginary_cover_structure(one, 3);
    EXPECT_EQ(c1.size(0), 3);
    EXPECT_EQ(c1.table(c1.sig().relation_index("E")).size(), 9u);

    const FinStructure c2 = imaginary_cover_structure(complete_graph(2), 2);
    EXPECT_EQ(c2.size(0), 4);
    EXPECT_EQ(c2.table(c2.sig().relation_index("R")).size(), 8u); // 4 cross pairs, both ways
    EXPECT_EQ(quotient(c2, "E").structure.size(0), 2);

    EXPECT_THROW((void)imaginary_cover_structure(one, 0), Error);
    const FinStructure clash(Signature({"V"}, {{"E", {"V", "V"}, 0}}), {1}, {});
    EXPECT_THROW((void)imaginary_cover_structure(clash, 2), Error);
    EXPECT_THROW((void)imaginary_cover_class(builtin_class("equivalence_relation")), Error);
}

TEST(Cover, QuotientRoundTrip)
{
    std::mt19937_64 rng(17);
    const Signature two({"V"}, {{"R", {"V", "V"}, 0}, {"T", {"V", "V", "V"}, 0}});
    for (int i = 0; i < 100; ++i) {
        const int n = 1 + static_cast<int>(rng() % 6);
        const int m = 1 + static_cast<int>(rng() % 3);
        const FinStructure s = i % 2 ? fixtures::random_graph(n, rng) : fixtures::random_structure(two, n, rng, 0.3);
        const FinStructure cover = imaginary_cover_structure(s, m);
        EXPECT_TRUE(is_partition_relation(cover, cover.sig().relation_index("E")));
        const auto q = quotient(cover, "E");
        EXPECT_TRUE(isomorphic(q.structure, s)) << "n=" << n << " m=" << m;
        EXPECT_EQ(brute_iso_key(q.structure), brute_iso_key(s));
    }
}

TEST(Cover, CoverOfPureSetIsEquivalenceClass)
{
    const ClassPresentation cover = imaginary_cover_class(builtin_class("pure_set"));
    const ClassPresentation eq = builtin_class("equivalence_relation");
    std::set<CanonicalCode> a, b;
    for (const auto& f : cover.forbidden())
        a.insert(f.code);
    for (const auto& f : eq.forbidden())
        b.insert(f.code);
    EXPECT_EQ(a, b);
    for (int n = 0; n <= 4; ++n)
        for (const auto& s : all_structures(cover.sig(), {n}))
            EXPECT_EQ(class_membership(cover, s), is_partition_relation(s, 0));
    EXPECT_TRUE(check_amalgamation(cover, 4, true).pass);
}

TEST(Cover, MembershipMatchesQuotientOracle)
{
    std::mt19937_64 rng(29);
    for (const bool tf : {false, true}) {
        const ClassPresentation k = imaginary_cover_class(builtin_class(tf ? "triangle_free" : "random_graph"));
        int members = 0;
        for (int n = 0; n <= 4; ++n)
            for (const auto& s : partitioned_graphs(k.sig(), n)) {
                const bool want = cover_member_oracle(s, tf);
                ASSERT_EQ(class_membership(k, s), want);
                members += want;
                if (want) {
                    const auto q = quotient(s, "E").structure;
                    EXPECT_EQ(q.sig().relation_count(), 1);
                }
            }
        EXPECT_GT(members, 20);
        // arbitrary E relations, mostly not equivalences
        for (int i = 0; i < 2000; ++i) {
            const FinStructure s = fixtures::random_structure(k.sig(), 1 + static_cast<int>(rng() % 4), rng, 0.6);
            ASSERT_EQ(class_membership(k, s), cover_member_oracle(s, tf));
        }
    }
}

TEST(Cover, AmalgamationAtBound)
{
    EXPECT_TRUE(check_amalgamation(imaginary_cover_class(builtin_class("random_graph")), 4, true).pass);
}

TEST(Pfc, SignatureExamples)
{
    const Signature l = pfc_signature(graph_signature());
    EXPECT_EQ(l.sort_count(), 2);
    EXPECT_EQ(l.sort_name(0), "O");
    EXPECT_EQ(l.sort_name(1), "P");
    ASSERT_EQ(l.relation_count(), 1);
    EXPECT_EQ(l.relation(0).profile, (std::vector<int>{1, 0, 0}));
    EXPECT_EQ(pfc_signature(set_signature()).relation_count(), 0);
    const Signature ternary({"V"}, {{"T", {"V", "V", "V"}, 0}});
    EXPECT_EQ(pfc_signature(ternary).relation(0).arity(), 4);
    EXPECT_THROW((void)pfc_signature(l), Error);
}

TEST(Pfc, FiberExamples)
{
    const Signature l = pfc_signature(graph_signature());
    const FinStructure m(l, {2, 1}, {{{0, 0, 1}, {0, 1, 0}}});
    const FinStructure fiber = fiber_structure(m, 0, graph_signature());
    EXPECT_EQ(fiber, complete_graph(2));
    const FinStructure empty_o(l, {0, 1}, {{}});
    EXPECT_EQ(fiber_structure(empty_o, 0, graph_signature()).size(0), 0);
    EXPECT_THROW((void)fiber_structure(m, 1, graph_signature()), Error);
}

TEST(Pfc, MembershipExamples)
{
    const ClassPresentation graphs = pfc_class(builtin_class("random_graph"));
    const ClassPresentation tf = pfc_class(builtin_class("triangle_free"));
    const Signature& l = graphs.sig();
    std::vector<Tuple> k3;
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 3; ++y)
            if (x != y)
                k3.push_back({0, x, y});
    const FinStructure m(l, {3, 1}, {k3});
    EXPECT_TRUE(class_membership(graphs, m));
    EXPECT_FALSE(class_membership(tf, m));
    const FinStructure no_p(l, {4, 0}, {{}});
    EXPECT_TRUE(class_membership(tf, no_p));
    EXPECT_TRUE(check_amalgamation(graphs, 4, true).pass);
}

TEST(Pfc, FiberOracleAgreesExhaustively)
{
    for (const bool tf : {false, true}) {
        const ClassPresentation base = builtin_class(tf ? "triangle_free" : "random_graph");
        const ClassPresentation k = pfc_class(base);
        std::size_t members = 0, total = 0;
        for (int o = 0; o <= 4; ++o)
            for (int p = 0; o + p <= 4; ++p)
                for (const auto& m : all_structures(k.sig(), {o, p})) {
                    ++total;
                    const bool member = class_membership(k, m);
                    ASSERT_EQ(member, fibers_are_graphs(m, tf)) << "o=" << o << " p=" << p;
                    if (!member)
                        continue;
                    ++members;
                    for (int b = 0; b < p; ++b)
                        EXPECT_TRUE(class_membership(base, fiber_structure(m, b, base.sig())));
                }
        EXPECT_GT(members, 20u);
        EXPECT_GT(total, members);
    }
}

TEST(Growth, ClassifyCounts)
{
    EXPECT_EQ(classify_counts({1, 2, 3}, {2, 2, 2}).kind, GrowthVerdict::Kind::algebraic);
    EXPECT_EQ(classify_counts({1, 2, 3}, {2, 2, 2}).bound, 2);
    EXPECT_EQ(classify_counts({1, 2, 3}, {1, 2, 3}).kind, GrowthVerdict::Kind::growing);
    EXPECT_EQ(classify_counts({1, 2, 3, 4}, {1, 1, 2, 3}).kind, GrowthVerdict::Kind::growing);
    EXPECT_EQ(classify_counts({1, 2, 3, 4}, {1, 2, 2, 3}).kind, GrowthVerdict::Kind::inconclusive);
    EXPECT_EQ(classify_counts({1, 2, 3}, {3, 2, 1}).kind, GrowthVerdict::Kind::inconclusive);
    EXPECT_EQ(kind_name(GrowthVerdict::Kind::growing), "growing");
}

TEST(Growth, AclEstimateCountsMatchNaive)
{
    const StageChain c = grow(pfc_class(builtin_class("random_graph")), 3, 6, 15);
    std::mt19937_64 rng(2);
    const auto elems = c.stage(2).elements();
    for (int i = 0; i < 30; ++i) {
        const Elem a = elems[rng() % elems.size()];
        std::vector<Elem> base;
        for (int j = 0, n = static_cast<int>(rng() % 4); j < n; ++j)
            base.push_back(elems[rng() % elems.size()]);
        const auto v = acl_estimate(c, 2, a, base, {2, 4, 6});
        for (std::size_t t = 0; t < v.stages.size(); ++t)
            EXPECT_EQ(v.counts[t], naive_type_count(c.stage(v.stages[t]), a, base));
    }
    EXPECT_THROW((void)acl_estimate(c, 2, elems[0], {}, {2, 4}), Error);
    EXPECT_THROW((void)acl_estimate(c, 2, elems[0], {}, {2, 4, 9}), Error);
}

TEST(Growth, NamedPointIsAlgebraic)
{
    const StageChain c = grow(builtin_class("random_graph"), 1, 6, 10);
    const Elem a{0, 3};
    const auto v = acl_estimate(c, 2, a, {a, Elem{0, 1}}, {2, 4, 6});
    EXPECT_EQ(v.kind, GrowthVerdict::Kind::algebraic);
    EXPECT_EQ(v.bound, 1);
}

TEST(Growth, PfcPointsOverFiniteBasesGrow)
{
    const StageChain c = grow(pfc_class(builtin_class("random_graph")), 7, 16, 20);
    std::mt19937_64 rng(9);
    const FinStructure& s = c.stage(8);
    int growing = 0;
    for (int i = 0; i < 30; ++i) {
        const Elem b{1, static_cast<int>(rng() % s.size(1))};
        std::vector<Elem> base;
        for (int j = 0; j < 2; ++j)
            base.push_back({0, static_cast<int>(rng() % s.size(0))});
        const Elem other{1, static_cast<int>(rng() % s.size(1))};
        if (!(other == b))
            base.push_back(other);
        const auto v = acl_estimate(c, 8, b, base, {8, 12, 16});
        EXPECT_NE(v.kind, GrowthVerdict::Kind::algebraic);
        growing += v.kind == GrowthVerdict::Kind::growing;
    }
    EXPECT_GE(growing, 29);
}

TEST(Growth, CoverPointsOverBasesGrow)
{
    const StageChain c = grow(imaginary_cover_class(builtin_class("pure_set")), 4, 16, 20);
    std::mt19937_64 rng(4);
    const auto elems = c.stage(8).elements();
    for (int i = 0; i < 30; ++i) {
        const Elem a = elems[rng() % elems.size()];
        std::vector<Elem> base;
        for (int j = 0; j < 2; ++j)
            if (Elem e = elems[rng() % elems.size()]; !(e == a))
                base.push_back(e);
        EXPECT_EQ(acl_estimate(c, 8, a, base, {8, 12, 16}).kind, GrowthVerdict::Kind::growing);
    }
}

TEST(Growth, FormulaExamples)
{
    const StageChain g = grow(builtin_class("random_graph"), 2, 6, 8);
    const Signature& gs = g.presentation().sig();
    const auto eq = classify_formula_growth(g, PartitionedFormula::from(parse_formula("x = y", gs), "x"), {2, 4, 6}, 3);
    EXPECT_EQ(eq.instances, static_cast<std::size_t>(g.stage(2).size(0)));
    EXPECT_EQ(eq.algebraic, eq.instances);
    EXPECT_EQ(eq.max_algebraic_bound, 1);
    EXPECT_TRUE(eq.uniform_bound_found);
    EXPECT_EQ(eq.uniform_bound, 1);

    const StageChain cov = grow(imaginary_cover_class(builtin_class("pure_set")), 3, 12, 20);
    const auto e = classify_formula_growth(
        cov, PartitionedFormula::from(parse_formula("E(x, y)", cov.presentation().sig()), "x"), {4, 8, 12}, 3);
    EXPECT_GT(e.instances, 0u);
    EXPECT_EQ(e.growing, e.instances);

    const StageChain pfc = grow(pfc_class(builtin_class("random_graph")), 5, 12, 20);
    const auto r = classify_formula_growth(
        pfc, PartitionedFormula::from(parse_formula("R(z:P, x:O, y:O)", pfc.presentation().sig()), "x"), {4, 8, 12},
        3);
    EXPECT_GT(r.instances, 0u);
    EXPECT_EQ(r.algebraic, 0u);
    EXPECT_GE(r.growing, r.instances * 95 / 100);
}
