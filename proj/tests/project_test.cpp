#include "forge/error.hpp"
#include "forge/project.hpp"
#include "forge/syntax.hpp"
#include "forge/trees.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace forge;

namespace {

Json minimal()
{
    return Json::parse(R"J({
      "seed": 3,
      "classes": {"g": {"builtin": "random_graph"}},
      "tasks": [{"id": "sap", "op": "check-amalgamation", "args": {"class": "g", "n": 4}}]
    })J");
}

std::string error_of(const Json& j)
{
    try {
        (void)project_from_json(j);
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

std::filesystem::path temp_dir(const std::string& name)
{
    auto d = std::filesystem::temp_directory_path() / ("forge_project_test_" + name);
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

} // namespace

TEST(Fnv1a, KnownVectors)
{
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
    EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ull);
    EXPECT_EQ(task_seed(7, "a"), 0xaf63dc4c8601ec8cull ^ 7u);
}

TEST(LoadProject, MinimalProjectLoads)
{
    const auto spec = project_from_json(minimal());
    EXPECT_EQ(spec.seed, 3u);
    ASSERT_EQ(spec.tasks.size(), 1u);
    EXPECT_EQ(spec.tasks[0].op, "check-amalgamation");
}

TEST(LoadProject, Errors)
{
    Json dangling = minimal();
    dangling["tasks"] = Json::parse(R"J([{"id": "b", "op": "build-stage", "args": {"chain": "missing"}}])J");
    EXPECT_NE(error_of(dangling).find("dangling reference: chain 'missing'"), std::string::npos);

    Json chain_class = minimal();
    chain_class["chains"] = Json::parse(R"J({"c": {"class": "nowhere"}})J");
    chain_class["tasks"] = Json::parse(R"J([{"id": "b", "op": "build-stage", "args": {"chain": "c"}}])J");
    EXPECT_NE(error_of(chain_class).find("dangling reference: class 'nowhere'"), std::string::npos);

    Json bad_formula = minimal();
    bad_formula["trees"] = Json::parse(R"J({"t": {"fixture": "tree_code_witness", "h": 3}})J");
    bad_formula["tasks"] =
        Json::parse(R"J([{"id": "s", "op": "check-sop2", "args": {"tree": "t", "formula": "R(x,,y)"}}])J");
    const std::string msg = error_of(bad_formula);
    EXPECT_NE(msg.find("R(x,,y)"), std::string::npos) << msg;
    EXPECT_NE(msg.find("task 's'"), std::string::npos) << msg;

    Json unknown_op = minimal();
    unknown_op["tasks"][0]["op"] = "frobnicate";
    EXPECT_NE(error_of(unknown_op).find("unknown operation"), std::string::npos);

    Json missing_arg = minimal();
    missing_arg["tasks"][0]["args"].erase("class");
    EXPECT_NE(error_of(missing_arg).find("missing argument 'class'"), std::string::npos);

    Json dup = minimal();
    dup["tasks"].push_back(dup["tasks"][0]);
    EXPECT_NE(error_of(dup).find("duplicate task id"), std::string::npos);

    const auto dir = temp_dir("parse");
    std::ofstream(dir / "p.json") << "{\n  \"seed\": 1,\n  \"tasks\": [\n}";
    try {
        (void)load_project(dir / "p.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("parse error"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
    }
    EXPECT_THROW((void)load_project(dir / "absent.json"), Error);
}

TEST(RunProject, CheckAmalgamationPassesAndUnknownIdThrows)
{
    const auto spec = project_from_json(minimal());
    const auto reports = run_project(spec);
    ASSERT_EQ(reports.size(), 1u);
    EXPECT_EQ(reports[0].verdict, "pass");
    EXPECT_EQ(reports[0].seed, task_seed(3, "sap"));
    EXPECT_EQ(exit_status(reports), 0);
    RunOptions only;
    only.only = {"nope"};
    EXPECT_THROW((void)run_project(spec, only), Error);
}

TEST(RunProject, ExpectationsAndExitStatus)
{
    const Json j = Json::parse(R"J({
      "tasks": [
        {"id": "fails", "op": "check-amalgamation", "args": {"class": "degree_le_1", "n": 3}},
        {"id": "expected", "op": "check-amalgamation", "args": {"class": "degree_le_1", "n": 3}, "expect": "fail"},
        {"id": "chain", "op": "build-stage",
         "args": {"chain": {"class": "degree_le_1", "size_cap": 3, "stages": 5, "steps": 10}}, "expect": "error"},
        {"id": "budget", "op": "check-amalgamation", "args": {"class": "random_graph", "n": 6}}
      ]})J");
    const auto spec = project_from_json(j);
    RunOptions opt;
    opt.only = {"fails", "expected", "chain"};
    auto r = run_project(spec, opt);
    EXPECT_EQ(r[0].verdict, "fail");
    EXPECT_EQ(r[0].result["witness_sizes"], Json::parse("[1,2,2]"));
    EXPECT_EQ(r[1].outcome, "fail");
    EXPECT_EQ(r[1].verdict, "pass");
    EXPECT_EQ(r[2].outcome, "error");
    EXPECT_NE(r[2].result["message"].get<std::string>().find("no strong amalgam"), std::string::npos);
    EXPECT_EQ(r[2].verdict, "pass");
    EXPECT_EQ(exit_status(r), 1);
    EXPECT_EQ(exit_status({r[1], r[2]}), 0);

    opt.only = {"budget"};
    opt.budget_ms = 20;
    r = run_project(spec, opt);
    EXPECT_EQ(r[0].verdict, "error");
    EXPECT_EQ(r[0].result["error"], "budget");
    EXPECT_EQ(exit_status(r), 2);
}

TEST(RunProject, ExtractWritesAVerifiedWitness)
{
    const Json j = Json::parse(R"J({
      "trees": {"junk": {"fixture": "junk_tree_code_witness", "h": 4, "junk": 2}},
      "tasks": [{"id": "x", "op": "extract-sop2", "args": {"tree": "junk", "formula": "R(x,y)"}}]
    })J");
    const auto reports = run_project(project_from_json(j));
    ASSERT_EQ(reports[0].verdict, "pass");
    EXPECT_GT(reports[0].result["K_prime"].get<int>(), 0);

    const auto dir = temp_dir("extract");
    write_reports(dir, reports);
    ASSERT_TRUE(std::filesystem::exists(dir / "x.json"));
    ASSERT_TRUE(std::filesystem::exists(dir / "summary.json"));
    const Json w = read_json_file(dir / "x" / "witness.json");
    const LabeledTree t = labeled_tree_from_json(w.at("tree"));
    const auto phi = PartitionedFormula::from(parse_formula(w.at("formula").get<std::string>(), t.host.sig()),
                                              w.at("x").get<std::string>());
    EXPECT_EQ(phi.params.size(), w.at("params").size());
    EXPECT_TRUE(check_sop2_witness(t, phi, FormulaSet{phi.x, {}}).pass);
}

TEST(RunProject, FilesRelativeToTheProject)
{
    const auto dir = temp_dir("files");
    const Json cls = Json::parse(R"J({"name": "g", "signature": {"sorts": ["V"], "relations": [{"name": "R",
        "profile": ["V", "V"], "flags": ["symmetric", "irreflexive"]}]}, "forbidden": [], "helpers": []})J");
    std::ofstream(dir / "g.json") << cls.dump();
    std::ofstream(dir / "p.json") << R"J({"tasks": [{"id": "a", "op": "check-amalgamation",
        "args": {"class": "g.json", "n": 3}}]})J";
    const auto spec = load_project(dir / "p.json");
    EXPECT_EQ(run_project(spec)[0].verdict, "pass");
}

TEST(RunProject, ReplayAndParallelPayloadsMatch)
{
    const Json j = Json::parse(R"J({
      "seed": 11,
      "chains": {"c": {"class": "random_graph", "size_cap": 3, "stages": 8, "steps": 20}},
      "pairs": {"p": {"class": "random_graph", "steps": 40, "k_cap": 2, "close": true}},
      "tasks": [
        {"id": "acl", "op": "acl-estimate", "args": {"chain": "c", "stage": 2, "stages": [2, 4, 8], "samples": 20}},
        {"id": "stage", "op": "build-stage", "args": {"chain": "c", "stage": 3}},
        {"id": "pair", "op": "pair-build", "args": {"pair": "p"}},
        {"id": "axioms", "op": "pair-check", "args": {"pair": "p", "k": 2}},
        {"id": "mu", "op": "pair-mu", "args": {"class": "random_graph", "theta": "x = z", "phi": "R(x,y)"}}
      ]})J");
    const auto spec = project_from_json(j);
    auto dump = [](const std::vector<TaskReport>& rs) {
        std::string out;
        for (const auto& r : rs)
            out += dump_canonical(r.payload());
        for (const auto& r : rs)
            for (const auto& [name, text] : r.files)
                out += name + text;
        return out;
    };
    const std::string a = dump(run_project(spec));
    EXPECT_EQ(a, dump(run_project(spec)));
    RunOptions par;
    par.parallel = true;
    EXPECT_EQ(a, dump(run_project(spec, par)));
    RunOptions reseeded;
    reseeded.seed = 12;
    EXPECT_NE(a, dump(run_project(spec, reseeded)));
    EXPECT_EQ(a.find("wall"), std::string::npos);
}

TEST(Operations, PrimaryArguments)
{
    EXPECT_EQ(primary_argument("check-amalgamation"), "class");
    EXPECT_EQ(primary_argument("search-sop2"), "structure");
    EXPECT_EQ(primary_argument("pair-check"), "pair");
    EXPECT_THROW((void)primary_argument("nope"), Error);
    EXPECT_EQ(operation_names().size(), 19u);
}
