// Command-line front end: `forge run project.json` or one flat verb per operation.
#include "forge/error.hpp"
#include "forge/project.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace {

struct Verb {
    CLI::App* cmd = nullptr;
    std::string op;
    std::vector<std::string> words;
};

// Bare words fill the operation's primary reference; key=value pairs become arguments,
// with values read as JSON when they parse and as text otherwise.
forge::Json flat_args(const std::string& op, const std::vector<std::string>& words)
{
    forge::Json args = forge::Json::object();
    const std::string primary = forge::primary_argument(op);
    bool primary_set = false;
    for (const auto& w : words) {
        const auto eq = w.find('=');
        if (eq == std::string::npos || eq == 0) {
            if (primary_set || primary.empty())
                throw forge::Error("unexpected argument '" + w + "' (use key=value)");
            const forge::Json inline_entity = forge::Json::parse(w, nullptr, false);
            args[primary] = inline_entity.is_object() ? inline_entity : forge::Json(w);
            primary_set = true;
            continue;
        }
        const std::string key = w.substr(0, eq);
        const std::string value = w.substr(eq + 1);
        forge::Json v = forge::Json::parse(value, nullptr, false);
        args[key] = v.is_discarded() ? forge::Json(value) : v;
    }
    return args;
}

std::int64_t budget_from_env()
{
    const char* env = std::getenv("FORGE_BUDGET_MS");
    if (!env || !*env)
        return 0;
    try {
        return std::stoll(env);
    } catch (const std::exception&) {
        throw forge::Error(std::string("FORGE_BUDGET_MS is not a number: ") + env);
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"forge: finite amalgamation classes, tree witnesses and pair expansions"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string out_dir;
    std::uint64_t seed = 0;
    std::int64_t budget_ms = -1;
    bool parallel = false;
    auto* seed_opt = app.add_option("--seed", seed, "Project seed (overrides the project file)");
    app.add_option("--out", out_dir, "Directory for JSON and text reports");
    app.add_option("--budget-ms", budget_ms, "Wall-clock budget per task; FORGE_BUDGET_MS is the fallback");
    app.add_flag("--parallel", parallel, "Run tasks concurrently; reports keep task-list order");

    auto* run = app.add_subcommand("run", "Run the tasks of a project file");
    std::string project_path;
    std::vector<std::string> only;
    run->add_option("project", project_path, "Project file")->required();
    run->add_option("--task", only, "Run only these task ids");

    std::vector<Verb> verbs;
    auto add_verb = [&](CLI::App* parent, const std::string& word, const std::string& op, const std::string& help) {
        Verb v;
        v.cmd = parent->add_subcommand(word, help);
        v.op = op;
        verbs.push_back(std::move(v));
    };
    add_verb(&app, "check-class", "check-class", "Membership of a structure in a class");
    add_verb(&app, "check-amalgamation", "check-amalgamation", "Exhaustive amalgamation check up to n");
    add_verb(&app, "enumerate-age", "enumerate-age", "Isomorphism types of the age up to size n");
    add_verb(&app, "build-stage", "build-stage", "Build a chain and write a stage");
    add_verb(&app, "check-extension", "check-extension", "Extension axioms on a stage or structure");
    add_verb(&app, "acl-estimate", "acl-estimate", "Growth of type realizations along a chain");
    add_verb(&app, "classify-growth", "classify-growth", "Growth of formula instances along a chain");
    auto* apply = app.add_subcommand("apply", "Class constructions");
    apply->require_subcommand(1);
    add_verb(apply, "cover", "apply-cover", "Imaginary cover of a class or structure");
    add_verb(apply, "pfc", "apply-pfc", "Parametrized class of a class");
    auto* tree = app.add_subcommand("tree", "Labeled tree witnesses");
    tree->require_subcommand(1);
    for (const char* op : {"check-indisc", "check-sop2", "check-ktp1", "extract-sop2", "search-sop2", "based-on"})
        add_verb(tree, op, op, std::string("tree ") + op);
    auto* pair = app.add_subcommand("pair", "Pair expansions");
    pair->require_subcommand(1);
    for (const char* op : {"build", "check", "agreement", "mu"})
        add_verb(pair, op, std::string("pair-") + op, std::string("pair ") + op);
    for (auto& v : verbs)
        v.cmd->add_option("args", v.words, "Primary reference and key=value arguments");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        forge::RunOptions opts;
        opts.budget_ms = budget_ms >= 0 ? budget_ms : budget_from_env();
        opts.parallel = parallel;
        if (*seed_opt)
            opts.seed = seed;

        forge::ProjectSpec spec;
        if (run->parsed()) {
            spec = forge::load_project(project_path);
            opts.only = only;
        } else {
            const Verb* chosen = nullptr;
            for (const auto& v : verbs)
                if (v.cmd->parsed())
                    chosen = &v;
            if (!chosen)
                throw forge::Error("no command given");
            forge::Json task{{"id", chosen->op}, {"op", chosen->op}, {"args", flat_args(chosen->op, chosen->words)}};
            spec = forge::project_from_json({{"tasks", forge::Json::array({task})}}, std::filesystem::current_path());
        }

        const auto reports = forge::run_project(spec, opts);
        std::size_t counts[3] = {0, 0, 0};
        for (const auto& r : reports) {
            std::cout << r.text();
            ++counts[r.verdict == "fail" ? 1 : r.verdict == "error" ? 2 : 0];
        }
        if (reports.size() > 1)
            std::cout << reports.size() << " tasks: " << counts[0] << " passed, " << counts[1] << " failed, "
                      << counts[2] << " errors\n";
        if (!out_dir.empty())
            forge::write_reports(out_dir, reports);
        return forge::exit_status(reports);
    } catch (const std::exception& e) {
        std::cerr << "forge: " << e.what() << "\n";
        return 2;
    }
}
