#pragma once

#include "forge/json_io.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace forge {

// Project file layout:
//   {"seed": N,
//    "classes":    {name: {"builtin": b} | {"file": f} | {"cover": ref, "sort": s} | {"pfc": ref}},
//    "chains":     {name: {"class": ref, "size_cap": c, "stages": n, "steps": s, "seed"?: n,
//                          "allow_identification"?: bool, "verify_sap"?: bool}},
//    "structures": {name: {"file": f} | {"chain": ref, "stage": i} | {"fixture": f, "h"|"n"|"junk": …}},
//    "trees":      {name: {"file": f} | {"fixture": f, "h": h, "junk"?: j}},
//    "pairs":      {name: {"file": f} | {"class": ref, "steps": s, "k_cap": k, "close"?, "h_mode"?, "seed"?}},
//    "tasks":      [{"id": id, "op": op, "args": {…}, "expect"?: "pass"|"fail"|"error"}]}
// A reference is a name from the matching section, a builtin class name, a file path
// relative to the project file, or an inline entity object.
struct ProjectTask {
    std::string id;
    std::string op;
    Json args = Json::object();
    std::optional<std::string> expect;
};

struct ProjectSpec {
    std::filesystem::path dir = ".";
    std::uint64_t seed = 0;
    Json classes = Json::object();
    Json chains = Json::object();
    Json structures = Json::object();
    Json trees = Json::object();
    Json pairs = Json::object();
    std::vector<ProjectTask> tasks;
};

// Parses and cross-validates: operations exist, required arguments are present,
// references resolve and formula strings parse. Throws forge::Error.
[[nodiscard]] ProjectSpec project_from_json(const Json& j, const std::filesystem::path& dir = ".");
[[nodiscard]] ProjectSpec load_project(const std::filesystem::path& path);

[[nodiscard]] std::vector<std::string> operation_names();
// Argument key filled by a bare positional value on the command line.
[[nodiscard]] std::string primary_argument(const std::string& op);

struct TaskReport {
    std::string id;
    std::string op;
    Json args;
    std::optional<std::string> expect;
    std::string outcome; // "pass", "fail", "result" or "error"
    std::string verdict; // outcome, or pass/fail against `expect`
    Json result = Json::object();
    std::uint64_t seed = 0;
    double wall_ms = 0;
    std::map<std::string, std::string> files; // artifact name -> contents

    // Everything except the wall time.
    [[nodiscard]] Json payload() const;
    [[nodiscard]] std::string text() const;
};

struct RunOptions {
    std::optional<std::uint64_t> seed; // overrides the project seed
    std::int64_t budget_ms = 0;         // per task, 0 = none
    bool parallel = false;
    std::vector<std::string> only; // task ids; empty = all
};

[[nodiscard]] std::uint64_t fnv1a(std::string_view text);
[[nodiscard]] std::uint64_t task_seed(std::uint64_t project_seed, std::string_view task_id);

// Reports come back in task-list order. Throws forge::Error for an unknown id in `only`.
[[nodiscard]] std::vector<TaskReport> run_project(const ProjectSpec& spec, const RunOptions& options = {});

// 0 when every verdict passes or is a result, else 2 if any errored, else 1.
[[nodiscard]] int exit_status(const std::vector<TaskReport>& reports);

// <dir>/<id>.json (payload), <dir>/<id>.txt, artifacts under <dir>/<id>/, plus
// summary.json (verdicts only) and timing.json.
void write_reports(const std::filesystem::path& dir, const std::vector<TaskReport>& reports);

} // namespace forge
