#include "forge/builtins.hpp"
#include "forge/embedding.hpp"
#include "forge/error.hpp"
#include "forge/evaluate.hpp"
#include "forge/syntax.hpp"
#include "logic_oracles.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>

using namespace forge;
using namespace forge::oracles;

TEST(Parser, WorkedExamples)
{
    const Signature sig({"O"}, {{"R", {"O", "O"}, {}}});
    const Formula f = parse_formula("exists x:O. R(x,y) & !R(y,x)", sig);
    ASSERT_EQ(f.op(), Op::exists);
    EXPECT_EQ(f.children()[0].op(), Op::conjunction);
    ASSERT_EQ(free_variables(f).size(), 1u);
    EXPECT_EQ(free_variables(f)[0].name, "y");

    const Formula g = parse_formula("R(x,y) | R(y,z) & R(z,x)", sig);
    ASSERT_EQ(g.op(), Op::disjunction);
    EXPECT_EQ(g.children()[0].op(), Op::atom);
    EXPECT_EQ(g.children()[1].op(), Op::conjunction);

    try {
        (void)parse_formula("R(x)", sig);
        FAIL() << "arity error expected";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("R(x)"), std::string::npos);
        EXPECT_EQ(e.position(), 0u);
    }
}

TEST(Parser, SyntaxErrorsCarryPositions)
{
    const Signature sig = graph_signature();
    try {
        (void)parse_formula("R(x,y) & ", sig);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 9u);
    }
    try {
        (void)parse_formula("R(x,y) $ R(y,x)", sig);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 7u);
    }
    EXPECT_THROW((void)parse_formula("Q(x,y)", sig), ParseError);
    EXPECT_THROW((void)parse_formula("exists x:W. R(x,x)", sig), ParseError);
}

TEST(Parser, PrecedenceAndScope)
{
    const Signature sig = graph_signature();
    const Formula f = parse_formula("R(x,y) -> R(y,z) -> R(x,z)", sig);
    ASSERT_EQ(f.op(), Op::implication);
    EXPECT_EQ(f.children()[1].op(), Op::implication);

    const Formula q = parse_formula("exists x. R(x,y) | x = y", sig);
    ASSERT_EQ(q.op(), Op::exists);
    EXPECT_EQ(q.children()[0].op(), Op::disjunction);

    const Formula n = parse_formula("!R(x,y) & R(y,x)", sig);
    EXPECT_EQ(n.op(), Op::conjunction);
}

TEST(Parser, SortInferenceAcrossSorts)
{
    const Signature sig = two_sorted();
    const Formula f = parse_formula("S(x,y,z) & y = w", sig);
    const auto fv = free_variables(f);
    ASSERT_EQ(fv.size(), 4u);
    EXPECT_EQ(fv[1].sort, 1);
    EXPECT_EQ(fv[3].sort, 1);
    EXPECT_THROW((void)parse_formula("x = y", sig), ParseError);
    EXPECT_THROW((void)parse_formula("S(x,y,z) & R(y,x)", sig), ParseError);
    EXPECT_THROW((void)parse_formula("exists v. U(v)", sig), ParseError);
    EXPECT_NO_THROW((void)parse_formula("x:A = y", sig));
}

TEST(Parser, RoundTripOnGeneratedFormulas)
{
    const Signature sig = two_sorted();
    std::mt19937_64 rng(11);
    const FinStructure host = fixtures::random_structure(sig, 3, rng);
    FormulaGen gen(rng, &host);
    for (int i = 0; i < 200; ++i) {
        const Formula f = gen.make(3, 12);
        const std::string text = print_formula(f, sig);
        Formula back;
        ASSERT_NO_THROW(back = parse_formula(text, sig)) << text;
        EXPECT_TRUE(back == f) << text << "\nreprinted " << print_formula(back, sig);
        EXPECT_EQ(print_formula(back, sig), text);
    }
}

TEST(Evaluate, WorkedExamples)
{
    const FinStructure k3 = complete_graph(3);
    const Signature& gs = k3.sig();
    EXPECT_TRUE(evaluate(k3, parse_formula("R(#V:0,#V:1)", gs), {}));

    const FinStructure set = pure_set(2);
    const PredicateSet h(set.sizes(), {{0, 0}});
    const Formula hx = parse_formula("H(x)", set.sig());
    EXPECT_FALSE(evaluate(set, hx, {{"x", 1}}, &h));
    EXPECT_TRUE(evaluate(set, hx, {{"x", 0}}, &h));
    EXPECT_THROW((void)evaluate(set, hx, {{"x", 0}}), Error);
    EXPECT_THROW((void)evaluate(k3, parse_formula("R(x,y)", gs), {{"x", 0}}), Error);
}

TEST(Evaluate, RealizationExamples)
{
    const FinStructure k3 = complete_graph(3);
    const Formula f = parse_formula("R(x,a)", k3.sig());
    const Variable x{"x", 0};
    EXPECT_EQ(realizations(k3, f, x, {{"a", 0}}), (std::vector<int>{1, 2}));
    const FinStructure e3 = edgeless_graph(3);
    EXPECT_TRUE(realizations(e3, f, x, {{"a", 0}}).empty());
}

TEST(Evaluate, AgreesWithNaiveEvaluator)
{
    const Signature sig = two_sorted();
    std::mt19937_64 rng(2024);
    int checked = 0;
    int quantified = 0;
    for (int i = 0; i < 1000; ++i) {
        const int n = 1 + static_cast<int>(rng() % 3);
        const FinStructure s = fixtures::random_structure(sig, n, rng, 0.4);
        PredicateSet h(s.sizes());
        for (const Elem& e : s.elements())
            if (rng() % 2)
                h.insert(e);
        FormulaGen gen(rng, &s);
        const Formula f = gen.make(3, 10);
        ASSERT_LE(quantifier_depth(f), 3);
        quantified += quantifier_depth(f) > 0 ? 1 : 0;
        Assignment a;
        std::map<std::string, int> env;
        for (const auto& v : free_variables(f)) {
            a[v.name] = static_cast<int>(rng() % static_cast<unsigned>(s.size(v.sort)));
            env[v.name] = a[v.name];
        }
        const bool fast = evaluate(s, f, a, &h);
        const bool slow = NaiveEval(s, &h).eval(f, env);
        EXPECT_EQ(fast, slow) << print_formula(f, sig);
        ++checked;
    }
    EXPECT_EQ(checked, 1000);
    EXPECT_GT(quantified, 300);
}

TEST(Evaluate, RealizationsMatchPointwiseEvaluation)
{
    const Signature sig = two_sorted();
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        const FinStructure s = fixtures::random_structure(sig, 3, rng, 0.5);
        PredicateSet h(s.sizes(), {{0, 1}, {1, 2}});
        FormulaGen gen(rng, &s);
        const Formula f = gen.make(2, 8);
        const Variable x{"a0", 0};
        Assignment a;
        for (const auto& v : free_variables(f))
            if (v.name != x.name)
                a[v.name] = static_cast<int>(rng() % 3);
        std::vector<int> expect;
        for (int e = 0; e < 3; ++e) {
            Assignment b = a;
            b[x.name] = e;
            if (evaluate(s, f, b, &h))
                expect.push_back(e);
        }
        EXPECT_EQ(realizations(s, f, x, a, &h), expect);
    }
}

TEST(TypeFingerprint, Examples)
{
    const FinStructure k3 = complete_graph(3);
    EXPECT_EQ(qftp(k3, {{0, 0}, {0, 1}}, {}), qftp(k3, {{0, 1}, {0, 2}}, {}));
    const FinStructure p3 = path_graph(3);
    EXPECT_NE(qftp(p3, {{0, 0}, {0, 1}}, {}), qftp(p3, {{0, 0}, {0, 2}}, {}));
    EXPECT_NE(qftp(p3, {{0, 0}}, {{0, 0}}), qftp(p3, {{0, 2}}, {{0, 0}}));
    EXPECT_THROW((void)qftp(p3, {{0, 7}}, {}), Error);
}

TEST(TypeFingerprint, InvariantUnderBaseFixingAutomorphisms)
{
    std::mt19937_64 rng(99);
    for (int round = 0; round < 60; ++round) {
        const int n = 2 + static_cast<int>(rng() % 5);
        const FinStructure g = fixtures::random_graph(n, rng, 0.5);
        const auto autos = automorphisms(g);
        const Elem b{0, static_cast<int>(rng() % static_cast<unsigned>(n))};
        for (const auto& sigma : autos) {
            if (sigma(b) != b)
                continue;
            for (int x = 0; x < n; ++x)
                for (int y = 0; y < n; ++y) {
                    const Elem ex{0, x}, ey{0, y};
                    EXPECT_EQ(qftp(g, {ex, ey}, {b}), qftp(g, {sigma(ex), sigma(ey)}, {b}));
                }
        }
    }
}

TEST(TypeFingerprint, EqualityMatchesPartialIsomorphismOracle)
{
    std::mt19937_64 rng(3);
    for (int round = 0; round < 200; ++round) {
        const FinStructure g = fixtures::random_graph(5, rng, 0.5);
        const std::vector<Elem> base{{0, 0}};
        const Elem u{0, 1 + static_cast<int>(rng() % 4)}, v{0, 1 + static_cast<int>(rng() % 4)};
        const Elem w{0, static_cast<int>(rng() % 5)}, z{0, static_cast<int>(rng() % 5)};
        // Oracle: same equality pattern and same edges among {u,v,base} vs {w,z,base}.
        const std::vector<Elem> lhs{u, v, base[0]}, rhs{w, z, base[0]};
        bool same = true;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                same = same && ((lhs[i] == lhs[j]) == (rhs[i] == rhs[j]));
                same = same && (g.holds(0, std::vector<int>{lhs[i].id, lhs[j].id}) ==
                                g.holds(0, std::vector<int>{rhs[i].id, rhs[j].id}));
            }
        EXPECT_EQ(qftp(g, {u, v}, base) == qftp(g, {w, z}, base), same);
    }
}
