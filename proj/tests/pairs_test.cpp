#include "forge/builtins.hpp"
#include "forge/error.hpp"
#include "forge/pairs.hpp"
#include "forge/presentation.hpp"
#include "forge/syntax.hpp"
#include "pair_oracles.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace forge;
using namespace forge::oracles;

namespace {

PairExpansion closed_graph_pair(std::uint64_t seed)
{
    PairBuildOptions opt;
    opt.close = true;
    return build_pair_stage(builtin_class("random_graph"), seed, 60, 2, opt);
}

PairExpansion with_h(PairExpansion p, bool everything)
{
    p.h = PredicateSet(p.host.sizes());
    if (everything)
        for (const Elem& e : p.host.elements())
            p.h.insert(e);
    return p;
}

} // namespace

TEST(PairStage, PureSetBothSidesRealizeNewPoints)
{
    const auto p = build_pair_stage(builtin_class("pure_set"), 4, 12, 1);
    EXPECT_GT(p.h.count(), 0u);
    EXPECT_LT(p.h.count(), static_cast<std::size_t>(p.host.size(0)));
    for (int a = 0; a < p.host.size(0); ++a) {
        bool in = false, out = false;
        for (int y = 0; y < p.host.size(0); ++y)
            if (y != a) {
                in = in || p.h.contains({0, y});
                out = out || !p.h.contains({0, y});
            }
        EXPECT_TRUE(in && out) << a;
    }
    EXPECT_TRUE(check_density(p, 1).pass);
    EXPECT_TRUE(check_codensity(p, 1).pass);
}

TEST(PairStage, ClosedRandomGraphPassesBothAxioms)
{
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto p = closed_graph_pair(seed);
        EXPECT_TRUE(class_membership(builtin_class("random_graph"), p.host));
        const auto d = check_density(p, 2);
        const auto c = check_codensity(p, 2);
        EXPECT_TRUE(d.pass);
        EXPECT_TRUE(c.pass);
        EXPECT_DOUBLE_EQ(d.fraction(), 1.0);
        EXPECT_DOUBLE_EQ(c.fraction(), 1.0);
        const auto od = graph_axiom_counts(p.host, p.h, 2, true);
        const auto oc = graph_axiom_counts(p.host, p.h, 2, false);
        EXPECT_EQ(od.first, d.total);
        EXPECT_EQ(od.second, od.first);
        EXPECT_EQ(oc.second, oc.first);
    }
}

TEST(PairStage, ReplayIsIdentical)
{
    const auto a = closed_graph_pair(9);
    const auto b = closed_graph_pair(9);
    EXPECT_TRUE(a.host == b.host);
    EXPECT_EQ(a.h, b.h);
    ASSERT_EQ(a.log.size(), b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        EXPECT_EQ(a.log[i].stream, b.log[i].stream);
        EXPECT_EQ(a.log[i].point, b.log[i].point);
        EXPECT_EQ(a.log[i].fresh, b.log[i].fresh);
        EXPECT_EQ(a.log[i].task.base, b.log[i].task.base);
    }
    EXPECT_EQ(dump_canonical(pair_to_json(a)), dump_canonical(pair_to_json(b)));
    const auto c = closed_graph_pair(10);
    EXPECT_FALSE(c.host == a.host && c.h == a.h);
}

TEST(PairStage, SubstructureModeSchedulesInternalTasks)
{
    PairBuildOptions opt;
    opt.h_mode = HMode::substructure;
    const auto p = build_pair_stage(builtin_class("random_graph"), 3, 80, 2, opt);
    std::size_t internal = 0;
    for (const auto& r : p.log)
        if (r.stream == "h_internal") {
            ++internal;
            for (const Elem& e : r.task.base)
                EXPECT_TRUE(p.h.contains(e));
            EXPECT_TRUE(p.h.contains(r.point));
        }
    EXPECT_GT(internal, 0u);
    EXPECT_EQ(p.provenance.h_mode, HMode::substructure);
}

TEST(PairStage, NonConvergingClosureHitsThePointCap)
{
    PairBuildOptions opt;
    opt.close = true;
    opt.max_points = 120;
    EXPECT_THROW((void)build_pair_stage(builtin_class("triangle_free"), 1, 0, 2, opt), BudgetExceeded);
}

TEST(PairAxioms, Controls)
{
    const auto p = closed_graph_pair(1);
    const auto none = with_h(p, false);
    const auto d = check_density(none, 2);
    EXPECT_FALSE(d.pass);
    EXPECT_EQ(d.satisfied, 0u);
    EXPECT_TRUE(check_codensity(none, 2).pass);
    const auto all = with_h(p, true);
    const auto c = check_codensity(all, 2);
    EXPECT_FALSE(c.pass);
    EXPECT_EQ(c.satisfied, 0u);
    EXPECT_TRUE(check_density(all, 2).pass);
}

TEST(PairAxioms, AgreeWithNeighbourhoodOracle)
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        PairExpansion p;
        p.host = fixtures::random_graph(7 + static_cast<int>(rng() % 4), rng, 0.5);
        p.presentation = std::make_shared<const ClassPresentation>(builtin_class("random_graph"));
        p.h = PredicateSet(p.host.sizes());
        for (int v = 0; v < p.host.size(0); ++v)
            if (rng() % 2)
                p.h.insert({0, v});
        for (int k = 0; k <= 2; ++k) {
            const auto d = check_density(p, k);
            const auto c = check_codensity(p, k);
            const auto od = graph_axiom_counts(p.host, p.h, k, true);
            const auto oc = graph_axiom_counts(p.host, p.h, k, false);
            ASSERT_EQ(d.total, od.first);
            ASSERT_EQ(d.satisfied, od.second);
            ASSERT_EQ(c.satisfied, oc.second);
            EXPECT_EQ(d.pass, od.first == od.second);
        }
    }
}

TEST(PairExpansionJson, RoundTrip)
{
    const auto p = closed_graph_pair(2);
    const Json j = pair_to_json(p);
    EXPECT_TRUE(j.contains("universe"));
    EXPECT_EQ(j.at("provenance").at("k_cap"), 2);
    const auto back = pair_from_json(j);
    EXPECT_TRUE(back.host == p.host);
    EXPECT_EQ(back.h, p.h);
    EXPECT_EQ(back.provenance.seed, 2u);
    EXPECT_TRUE(back.provenance.closed);
    EXPECT_TRUE(check_density(back, 2).pass);
    Json bad = j;
    bad["H"]["V"].push_back(100000);
    EXPECT_THROW((void)pair_from_json(bad), Error);
}

TEST(SmallClosure, ExamplesAndClosureLaws)
{
    const auto p = closed_graph_pair(4);
    const auto h = p.h.elements();
    EXPECT_EQ(small_closure(p, {}), h);
    EXPECT_EQ(small_closure(p, {h[0], h[1]}), h);
    Elem outside{0, 0};
    while (p.h.contains(outside))
        ++outside.id;
    auto with = small_closure(p, {outside});
    EXPECT_EQ(with.size(), h.size() + 1);
    EXPECT_EQ(small_closure(p, with), with);

    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Elem> a, b;
        for (int v = 0; v < p.host.size(0); ++v) {
            const auto r = rng() % 4;
            if (r == 0)
                a.push_back({0, v});
            if (r <= 1)
                b.push_back({0, v}); // a ⊆ b
        }
        const auto ca = small_closure(p, a);
        const auto cb = small_closure(p, b);
        for (const Elem& e : a)
            EXPECT_TRUE(std::binary_search(ca.begin(), ca.end(), e));
        EXPECT_TRUE(std::includes(cb.begin(), cb.end(), ca.begin(), ca.end()));
        EXPECT_EQ(small_closure(p, ca), ca);
    }
    EXPECT_THROW((void)small_closure(p, {{0, 99999}}), Error);
}

TEST(HIndependent, DegenerateForm)
{
    const auto p = closed_graph_pair(4);
    EXPECT_TRUE(h_independent(p, {}));
    EXPECT_TRUE(h_independent(p, p.host.elements()));
    EXPECT_THROW((void)h_independent(p, {{0, 99999}}), Error);
}

TEST(HAgreement, WorkedExamples)
{
    const auto p = closed_graph_pair(5);
    const Signature& sig = p.host.sig();
    const Variable x{"x", 0};
    const Assignment params{{"a", 0}};

    const auto r1 = check_h_agreement(p, parse_formula("R(x,a) & H(x)", sig), parse_formula("R(x,a)", sig), x, params);
    EXPECT_TRUE(r1.h_restriction);

    int c = 0;
    while (p.h.contains({0, c}) || c == 0)
        ++c;
    const auto r2 = check_h_agreement(p, parse_formula("R(x,a) | x = c", sig), parse_formula("R(x,a)", sig), x,
                                      {{"a", 0}, {"c", c}});
    EXPECT_TRUE(r2.h_restriction);
    EXPECT_TRUE(r2.difference_small);

    const auto r3 = check_h_agreement(p, parse_formula("R(x,a)", sig), parse_formula("!R(x,a)", sig), x, params);
    EXPECT_FALSE(r3.h_restriction);
    EXPECT_FALSE(r3.difference_small);
    ASSERT_TRUE(r3.h_witness && r3.diff_witness);
    EXPECT_TRUE(p.h.contains(*r3.h_witness));
    EXPECT_FALSE(p.h.contains(*r3.diff_witness));
    EXPECT_NE(r3.diff_witness->id, 0);

    EXPECT_THROW((void)check_h_agreement(p, parse_formula("R(x,a)", sig), parse_formula("R(x,b)", sig), x, params),
                 Error);
    EXPECT_THROW((void)check_h_agreement(p, parse_formula("R(x,a)", sig), parse_formula("H(x)", sig), x, params),
                 Error);
}

TEST(HAgreement, SymmetricAndStableUnderEquivalents)
{
    const auto p = closed_graph_pair(6);
    const Signature& sig = p.host.sig();
    const Variable x{"x", 0};
    const std::vector<std::string> texts{"R(x,a)", "!R(x,a)", "R(x,a) & R(x,b)", "R(x,a) | x = b",
                                         "exists w. R(x,w) & R(w,a)"};
    for (const auto& s : texts)
        for (const auto& t : texts) {
            for (int a = 0; a < 3; ++a) {
                const Assignment params{{"a", a}, {"b", a + 5}};
                const auto f = parse_formula(s, sig);
                const auto g = parse_formula(t, sig);
                const bool fwd = check_h_agreement(p, f, g, x, params).h_restriction;
                EXPECT_EQ(fwd, check_h_agreement(p, g, f, x, params).h_restriction);
                const auto f2 = parse_formula("!!(" + s + ") & true", sig);
                EXPECT_EQ(fwd, check_h_agreement(p, f2, g, x, params).h_restriction);
            }
        }
}

TEST(BuildMu, ShapeAndUnfolding)
{
    const Signature sig = graph_signature();
    const Variable x{"x", 0}, z{"z", 0};
    const Formula theta = parse_formula("x = z", sig);
    const Formula phi = parse_formula("R(x,y)", sig);
    const Formula mu = build_mu(theta, phi, x, z);
    ASSERT_EQ(mu.op(), Op::conjunction);
    EXPECT_EQ(mu.children()[0].op(), Op::in_h);
    EXPECT_EQ(mu.children()[1].op(), Op::exists);
    std::set<std::string> fv;
    for (const auto& v : free_variables(mu))
        fv.insert(v.name);
    EXPECT_EQ(fv, (std::set<std::string>{"z", "y"}));

    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const FinStructure g = fixtures::random_graph(6 + static_cast<int>(rng() % 4), rng, 0.5);
        PredicateSet h(g.sizes());
        for (int v = 0; v < g.size(0); ++v)
            if (rng() % 2)
                h.insert({0, v});
        for (int zv = 0; zv < g.size(0); ++zv)
            for (int yv = 0; yv < g.size(0); ++yv) {
                const Assignment a{{"z", zv}, {"y", yv}};
                EXPECT_EQ(evaluate(g, mu, a, &h), h.contains({0, zv}) && adjacent(g, zv, yv));
            }
    }
}

TEST(BuildMu, ClosedLoopAgainstUnfolding)
{
    const Signature sig = graph_signature();
    const Variable x{"x", 0}, z{"z", 0};
    const std::vector<std::string> thetas{"R(x,z)", "R(x,c) & !R(x,z)", "!(x = z) & R(z,c)", "R(z,c)"};
    const std::vector<std::string> phis{"R(x,y)", "!R(x,y) & !(x = y)", "exists w. R(x,w) & R(w,y)"};
    std::mt19937_64 rng(13);
    for (const auto& ts : thetas)
        for (const auto& ps : phis) {
            const Formula theta = parse_formula(ts, sig);
            const Formula phi = parse_formula(ps, sig);
            const Formula mu = build_mu(theta, phi, x, z);
            const FinStructure g = fixtures::random_graph(7, rng, 0.4);
            PredicateSet h(g.sizes());
            for (int v = 0; v < 7; ++v)
                if (rng() % 2)
                    h.insert({0, v});
            for (int zv = 0; zv < 7; ++zv)
                for (int yv = 0; yv < 7; ++yv)
                    for (int cv = 0; cv < 7; cv += 3) {
                        Assignment a{{"z", zv}, {"y", yv}, {"c", cv}};
                        bool some = false;
                        for (int xv = 0; xv < 7 && !some; ++xv) {
                            Assignment b = a;
                            b["x"] = xv;
                            some = evaluate(g, theta, b, &h) && evaluate(g, phi, b, &h);
                        }
                        ASSERT_EQ(evaluate(g, mu, a, &h), h.contains({0, zv}) && some) << ts << " / " << ps;
                    }
        }
}

TEST(BuildMu, SortChecks)
{
    const Signature sig = graph_signature();
    const Formula phi = parse_formula("R(x,y)", sig);
    EXPECT_THROW((void)build_mu(phi, phi, Variable{"x", 1}, Variable{"z", 0}), Error);
    EXPECT_THROW((void)build_mu(parse_formula("R(z,y)", sig), phi, Variable{"x", 0}, Variable{"z", 2}), Error);
    EXPECT_THROW((void)build_mu(phi, phi, Variable{"x", 0}, Variable{"x", 0}), Error);
    EXPECT_NO_THROW((void)build_mu(parse_formula("R(z,y)", sig), phi, Variable{"x", 0}, Variable{"z", 0}));
}
