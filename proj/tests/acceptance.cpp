// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "forge/amalgamation.hpp"
#include "forge/builtins.hpp"
#include "forge/chain.hpp"
#include "forge/construct.hpp"
#include "forge/constructions.hpp"
#include "forge/embedding.hpp"
#include "forge/pairs.hpp"
#include "forge/project.hpp"
#include "forge/syntax.hpp"
#include "forge/trees.hpp"
#include "logic_oracles.hpp"
#include "pair_oracles.hpp"
#include "test_support.hpp"
#include "tree_oracles.hpp"

#include <chrono>
#include <functional>
#include <iostream>
#include <sstream>

using namespace forge;
using namespace forge::oracles;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t)
{
    return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

StageChain grow(const ClassPresentation& k, std::uint64_t seed, int stages, int steps)
{
    StageChain c(k, seed, 3);
    for (int i = 0; i < stages; ++i)
        c = build_stage(c, steps);
    return c;
}

bool is_growing(const GrowthVerdict& v)
{
    return v.kind == GrowthVerdict::Kind::growing;
}

void strong_amalgamation(Outcome& o)
{
    const auto start = Clock::now();
    const std::vector<std::pair<ClassPresentation, int>> passing{
        {builtin_class("random_graph"), 5},
        {builtin_class("triangle_free"), 4},
        {builtin_class("pure_set"), 5},
        {imaginary_cover_class(builtin_class("pure_set")), 4},
        {imaginary_cover_class(builtin_class("random_graph")), 4},
        {pfc_class(builtin_class("random_graph")), 4},
    };
    for (const auto& [k, n] : passing) {
        const auto r = check_amalgamation(k, n, true);
        o.require(r.pass, k.name() + " at n=" + std::to_string(n));
        o.detail << " " << k.name() << "(n=" << n << ")=" << (r.pass ? "pass" : "fail");
    }
    const ClassPresentation matching = builtin_class("degree_le_1");
    const auto r = check_amalgamation(matching, 4, true);
    o.require(!r.pass && r.witness.has_value(), "degree_le_1 should fail");
    if (r.witness) {
        const auto& w = *r.witness;
        const bool sizes = w.a.total_size() == 1 && w.b.total_size() == 2 && w.c.total_size() == 2;
        o.require(sizes, "degree_le_1 witness sizes (1,2,2)");
        o.require(!brute_force_strong_amalgam_exists(matching, w), "witness re-check by exhaustive completion");
        o.detail << " degree_le_1 witness=(" << w.a.total_size() << "," << w.b.total_size() << ","
                 << w.c.total_size() << ")";
    }
    const double t = seconds_since(start);
    o.require(t < 120, "runtime under 120 s");
    o.detail << " time=" << t << "s";
}

void acl_both_directions(Outcome& o)
{
    for (const char* name : {"pure_set", "random_graph", "triangle_free", "kn_free(4)", "equivalence_relation"}) {
        const StageChain c = grow(builtin_class(name), 1, 16, 40);
        const auto elems = c.stage(4).elements();
        std::mt19937_64 rng(31);
        int growing = 0;
        for (int i = 0; i < 100; ++i) {
            const Elem a = elems[rng() % elems.size()];
            std::vector<Elem> base;
            const int size = static_cast<int>(rng() % 4);
            while (static_cast<int>(base.size()) < size) {
                const Elem e = elems[rng() % elems.size()];
                if (!(e == a) && std::find(base.begin(), base.end(), e) == base.end())
                    base.push_back(e);
            }
            growing += is_growing(acl_estimate(c, 4, a, base, {4, 8, 16})) ? 1 : 0;
        }
        o.require(growing == 100, std::string(name) + " growing in every sample");
        o.detail << " " << name << "=" << growing << "/100";
    }
    bool errored = false;
    try {
        StageChain c(builtin_class("degree_le_1"), 1, 3);
        for (int i = 0; i < 5; ++i)
            c = build_stage(c, 10);
    } catch (const Error& e) {
        const std::string msg = e.what();
        errored = msg.find("no strong amalgam") != std::string::npos && msg.find("R(x,") != std::string::npos;
    }
    o.require(errored, "degree_le_1 chain errors on the matched-edge task");
    o.detail << " degree_le_1 chain " << (errored ? "errors" : "did not error");
}

// A pfc(graphs) structure belongs to the class iff every fiber is a graph, read
// straight off the table: no loops and symmetric.
bool fibers_are_graphs(const FinStructure& s)
{
    const int r = s.sig().relation_index("R");
    for (int b = 0; b < s.size(1); ++b)
        for (int u = 0; u < s.size(0); ++u)
            for (int v = 0; v < s.size(0); ++v) {
                const int uv[3] = {b, u, v}, vu[3] = {b, v, u};
                if (s.holds(r, uv) && (u == v || !s.holds(r, vu)))
                    return false;
            }
    return true;
}

void pfc_coherence(Outcome& o)
{
    const ClassPresentation graphs = builtin_class("random_graph");
    const ClassPresentation pfc = pfc_class(graphs);
    const Signature sig = pfc_signature(graph_signature());
    std::size_t total = 0, agree = 0, members = 0, fibers_ok = 0, fibers = 0;
    for (int o_size = 0; o_size <= 4; ++o_size)
        for (int p_size = 0; o_size + p_size <= 4; ++p_size)
            for (const auto& s : fixtures::all_structures(sig, {o_size, p_size})) {
                ++total;
                const bool member = class_membership(pfc, s);
                agree += member == fibers_are_graphs(s) ? 1 : 0;
                if (!member)
                    continue;
                ++members;
                for (int b = 0; b < s.size(1); ++b) {
                    ++fibers;
                    fibers_ok += class_membership(graphs, fiber_structure(s, b, graph_signature())) ? 1 : 0;
                }
            }
    o.require(agree == total, "membership agrees with the fiber oracle");
    o.require(fibers_ok == fibers, "every fiber of a member is a graph");
    o.detail << " structures=" << total << " agree=" << agree << " members=" << members << " fibers=" << fibers_ok
             << "/" << fibers;
}

void pfc_growth(Outcome& o, const StageChain& c, double chain_seconds)
{
    const auto start = Clock::now();
    const FinStructure& s = c.stage(8);
    std::mt19937_64 rng(41);
    const int samples = 40;
    int growing = 0, algebraic = 0;
    for (int i = 0; i < samples; ++i) {
        const Elem b{1, static_cast<int>(rng() % s.size(1))};
        std::vector<Elem> base;
        const int a0 = static_cast<int>(rng() % 3), b0 = static_cast<int>(rng() % 3);
        while (static_cast<int>(base.size()) < a0) {
            const Elem e{0, static_cast<int>(rng() % s.size(0))};
            if (std::find(base.begin(), base.end(), e) == base.end())
                base.push_back(e);
        }
        while (static_cast<int>(base.size()) < a0 + b0) {
            const Elem e{1, static_cast<int>(rng() % s.size(1))};
            if (!(e == b) && std::find(base.begin(), base.end(), e) == base.end())
                base.push_back(e);
        }
        const auto v = acl_estimate(c, 8, b, base, {8, 12, 16});
        growing += is_growing(v) ? 1 : 0;
        algebraic += v.kind == GrowthVerdict::Kind::algebraic ? 1 : 0;
    }
    const double t = seconds_since(start) + chain_seconds;
    o.require(growing * 100 >= 95 * samples, "growing in at least 95%");
    o.require(algebraic == 0, "never algebraic");
    o.require(t < 300, "runtime under 300 s");
    o.detail << " growing=" << growing << "/" << samples << " algebraic=" << algebraic << " time=" << t << "s";
}

void pfc_conjunctions(Outcome& o, const StageChain& c)
{
    const FinStructure& s = c.stage(8);
    const Signature& sig = c.presentation().sig();
    std::mt19937_64 rng(43);
    const int samples = 24;
    int growing = 0, algebraic = 0;
    for (int i = 0; i < samples; ++i) {
        const int m = 1 + i % 3;
        std::vector<int> ps;
        while (static_cast<int>(ps.size()) < m) {
            const int p = static_cast<int>(rng() % s.size(1));
            if (std::find(ps.begin(), ps.end(), p) == ps.end())
                ps.push_back(p);
        }
        std::string text;
        std::vector<Elem> params;
        for (int j = 0; j < m; ++j) {
            if (j > 0)
                text += " & ";
            const bool negated = j > 0 && rng() % 2 == 0;
            text += std::string(negated ? "!" : "") + "R(p" + std::to_string(j) + ", x, o" + std::to_string(j) + ")";
            params.push_back({1, ps[j]});
            params.push_back({0, static_cast<int>(rng() % s.size(0))});
        }
        const auto phi = PartitionedFormula::from(parse_formula(text, sig), "x");
        const auto v = formula_growth(c, phi, params, 8, {8, 12, 16});
        growing += is_growing(v) ? 1 : 0;
        algebraic += v.kind == GrowthVerdict::Kind::algebraic ? 1 : 0;
    }
    o.require(growing * 100 >= 95 * samples, "growing in at least 95%");
    o.require(algebraic == 0, "never algebraic");
    o.detail << " conjunctions=" << samples << " growing=" << growing << " algebraic=" << algebraic;
}

void cover_round_trip(Outcome& o)
{
    std::mt19937_64 rng(17);
    const Signature mixed({"V"}, {{"R", {"V", "V"}, 0}, {"T", {"V", "V", "V"}, 0}});
    int ok = 0;
    for (int i = 0; i < 100; ++i) {
        const int n = 1 + static_cast<int>(rng() % 6);
        const int m = 1 + static_cast<int>(rng() % 3);
        const FinStructure s = i % 2 ? fixtures::random_graph(n, rng) : fixtures::random_structure(mixed, n, rng, 0.3);
        const auto q = quotient(imaginary_cover_structure(s, m), "E");
        ok += fixtures::brute_iso_key(q.structure) == fixtures::brute_iso_key(s) ? 1 : 0;
    }
    o.require(ok == 100, "every round trip isomorphic");
    o.detail << " round trips=" << ok << "/100";
}

void tree_oracles(Outcome& o)
{
    const Signature sig = graph_signature();
    auto formula = [&](const char* t) { return PartitionedFormula::from(parse_formula(t, sig), "x"); };
    const std::vector<PartitionedFormula> phis{formula("R(x,y)"), formula("!R(x,y)"), formula("R(x,y) & !R(x,z)"),
                                               formula("exists w. R(x,w) & R(w,y)"), formula("R(x,y) & R(x,z)")};
    std::mt19937_64 rng(7);
    int sop2_agree = 0, ktp1_agree = 0, sop2_pass = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto& phi = phis[static_cast<std::size_t>(trial) % phis.size()];
        const int depth = static_cast<int>(rng() % 4);
        LabeledTree t;
        if (trial % 3 == 0 && phi.params.size() == 1) {
            t = tree_code_witness(depth + 1);
            for (auto& [i, l] : t.labels)
                if (rng() % 6 == 0)
                    l = {static_cast<int>(rng() % static_cast<unsigned>(t.host.size(0)))};
        } else {
            const int n = 6 + static_cast<int>(rng() % 15);
            t = random_tree(fixtures::random_graph(n, rng, 0.3 + 0.1 * static_cast<double>(rng() % 3)), phi, depth, rng);
        }
        const FormulaSet q{phi.x, {}};
        const int th = 1 + static_cast<int>(rng() % 2);
        const bool sop2 = check_sop2_witness(t, phi, q, th).pass;
        sop2_agree += sop2 == brute_sop2(t, phi, q, th) ? 1 : 0;
        sop2_pass += sop2 ? 1 : 0;
        const int k = 2 + static_cast<int>(rng() % 3);
        ktp1_agree += check_ktp1_witness(t, phi, k, th).pass == brute_ktp1(t, phi, k, th) ? 1 : 0;
    }
    o.require(sop2_agree == 50 && ktp1_agree == 50, "both checkers agree on every tree");
    o.detail << " sop2 agree=" << sop2_agree << "/50 (passing " << sop2_pass << ") ktp1 agree=" << ktp1_agree << "/50";
}

void extraction_pipeline(Outcome& o)
{
    const auto phi = PartitionedFormula::from(parse_formula("R(x,y)", graph_signature()), "x");
    const FormulaSet none{phi.x, {}};

    const auto clean = extract_sop2(tree_code_witness(4), phi);
    o.require(clean.ok && clean.witness, "extraction on the tree code fixture");
    if (clean.ok) {
        o.require(clean.k == 1 && clean.k_prime == 0 && clean.n == 0, "K=1, K'=0, n=0");
        o.require(check_sop2_witness(clean.witness->tree, clean.witness->phi, none).pass &&
                      brute_sop2(clean.witness->tree, clean.witness->phi, none, 1),
                  "clean witness verified");
    }
    o.detail << " clean K=" << clean.k << " K'=" << clean.k_prime << " n=" << clean.n;

    const auto junk = extract_sop2(junk_tree_code_witness(4, 2), phi);
    o.require(junk.ok && junk.witness && junk.k_prime > 0, "junk fixture needs K' > 0");
    if (junk.ok) {
        const FormulaSet jn{junk.witness->phi.x, {}};
        o.require(junk.verification.pass && brute_sop2(junk.witness->tree, junk.witness->phi, jn, 1),
                  "junk witness verified");
    }
    o.detail << " junk K'=" << junk.k_prime;

    const auto start = Clock::now();
    SearchOptions opt;
    opt.depth = 2;
    const auto found = search_sop2(tree_code_structure(3), {phi}, opt);
    const double t = seconds_since(start);
    o.require(found && found->tree.labels == tree_code_witness(3).labels, "search finds the canonical witness");
    o.require(found && brute_sop2(found->tree, found->phi, none, 1), "search witness verified");
    o.require(t < 60, "search under 60 s");
    o.detail << " search=" << (found ? "found" : "none") << " in " << t << "s";

    StageChain set_chain(builtin_class("pure_set"), 1, 2);
    for (int i = 0; i < 2; ++i)
        set_chain = build_stage(set_chain, 4);
    const Signature& ss = set_chain.presentation().sig();
    SearchOptions set_opt;
    set_opt.max_conjuncts = 2;
    const auto none_found = search_sop2(
        set_chain.last(),
        {PartitionedFormula::from(parse_formula("x = y", ss), "x"),
         PartitionedFormula::from(parse_formula("!(x = y)", ss), "x")},
        set_opt);
    o.require(!none_found, "no witness on a pure-set stage");
    o.detail << " pure set (" << set_chain.last().size(0) << " points)=" << (none_found ? "found" : "none");
}

void pair_axioms(Outcome& o)
{
    const auto start = Clock::now();
    PairBuildOptions opt;
    opt.close = true;
    const PairExpansion p = build_pair_stage(builtin_class("random_graph"), 1, 60, 2, opt);
    const auto d = check_density(p, 2);
    const auto c = check_codensity(p, 2);
    o.require(d.pass && d.fraction() == 1.0 && c.pass && c.fraction() == 1.0, "density and codensity 1.0");
    const auto od = graph_axiom_counts(p.host, p.h, 2, true);
    const auto oc = graph_axiom_counts(p.host, p.h, 2, false);
    o.require(od.first == od.second && oc.first == oc.second && od.first == d.total,
              "neighbourhood oracle agrees");

    PairExpansion empty = p;
    empty.h = PredicateSet(p.host.sizes());
    PairExpansion all = p;
    for (const auto& e : p.host.elements())
        all.h.insert(e);
    const auto de = check_density(empty, 2);
    const auto ca = check_codensity(all, 2);
    o.require(!de.pass && de.satisfied == 0, "H empty fails density");
    o.require(!ca.pass && ca.satisfied == 0, "H everything fails codensity");
    const double t = seconds_since(start);
    o.require(t < 60, "runtime under 60 s");
    o.detail << " points=" << p.host.size(0) << " |H|=" << p.h.count() << " density=" << d.fraction()
             << " codensity=" << c.fraction() << " H=empty density=" << de.fraction()
             << " H=all codensity=" << ca.fraction() << " time=" << t << "s";
}

void logic_soundness(Outcome& o)
{
    const Signature sig = two_sorted();
    std::mt19937_64 rng(2025);
    int agree = 0;
    for (int i = 0; i < 1000; ++i) {
        const int n = 1 + static_cast<int>(rng() % 3);
        const FinStructure s = fixtures::random_structure(sig, n, rng, 0.4);
        PredicateSet h(s.sizes());
        for (const Elem& e : s.elements())
            if (rng() % 2)
                h.insert(e);
        FormulaGen gen(rng, &s);
        const Formula f = gen.make(3, 10);
        Assignment a;
        std::map<std::string, int> env;
        for (const auto& v : free_variables(f)) {
            a[v.name] = static_cast<int>(rng() % static_cast<unsigned>(s.size(v.sort)));
            env[v.name] = a[v.name];
        }
        agree += evaluate(s, f, a, &h) == NaiveEval(s, &h).eval(f, env) ? 1 : 0;
    }
    std::mt19937_64 prng(12);
    const FinStructure host = fixtures::random_structure(sig, 3, prng);
    FormulaGen gen(prng, &host);
    int round_trips = 0;
    for (int i = 0; i < 200; ++i) {
        const Formula f = gen.make(3, 12);
        try {
            round_trips += parse_formula(print_formula(f, sig), sig) == f ? 1 : 0;
        } catch (const Error&) {
        }
    }
    o.require(agree == 1000, "evaluator agrees on every triple");
    o.require(round_trips == 200, "every round trip");
    o.detail << " evaluator=" << agree << "/1000 parser=" << round_trips << "/200";
}

void replay(Outcome& o)
{
    const ProjectSpec spec = load_project(FORGE_SOURCE_DIR "/projects/acceptance.json");
    auto run = [&] {
        const auto reports = run_project(spec);
        std::string bytes;
        for (const auto& r : reports) {
            bytes += dump_canonical(r.payload());
            for (const auto& [name, text] : r.files)
                bytes += name + "\n" + text;
        }
        return std::make_pair(bytes, exit_status(reports));
    };
    const auto first = run();
    const auto second = run();
    o.require(first.first == second.first, "payloads byte-identical");
    o.require(first.second == 0 && second.second == 0, "every bundled task meets its verdict");
    o.detail << " tasks=" << spec.tasks.size() << " bytes=" << first.first.size()
             << (first.first == second.first ? " identical" : " differ") << " exit=" << first.second;
}

} // namespace

int main()
{
    std::cout.setf(std::ios::fixed);
    std::cout.precision(2);
    std::optional<StageChain> pfc_chain;
    double pfc_seconds = 0;
    auto pfc = [&]() -> const StageChain& {
        if (!pfc_chain) {
            const auto start = Clock::now();
            pfc_chain = grow(pfc_class(builtin_class("random_graph")), 1, 16, 20);
            pfc_seconds = seconds_since(start);
        }
        return *pfc_chain;
    };

    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"strong amalgamation", strong_amalgamation},
        {"acl growth and the matched-edge error", acl_both_directions},
        {"pfc fiber coherence", pfc_coherence},
        {"pfc points grow",
         [&](Outcome& o) {
             const StageChain& c = pfc();
             pfc_growth(o, c, pfc_seconds);
         }},
        {"pfc conjunctions grow", [&](Outcome& o) { pfc_conjunctions(o, pfc()); }},
        {"cover round trips", cover_round_trip},
        {"tree checkers match brute force", tree_oracles},
        {"sop2 extraction and search", extraction_pipeline},
        {"pair axioms", pair_axioms},
        {"logic soundness", logic_soundness},
        {"replay determinism", replay},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto start = Clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        failures += o.pass ? 0 : 1;
        std::cout << "criterion " << (i + 1) << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << " ("
                  << seconds_since(start) << "s):" << o.detail.str() << std::endl;
    }
    std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
}
