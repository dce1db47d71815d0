#pragma once

#include "forge/presentation.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <memory>
#include <random>

namespace forge {

// A one-point extension over a base set U of an existing stage: a new point of
// `sort` together with every true atom among U ∪ {new point} that mentions it.
// The new point is written as id -1 inside `atoms`.
struct ExtensionTask {
    std::vector<Elem> base;
    int sort = 0;
    std::vector<Atom> atoms;
    CanonicalCode code; // isomorphism type of U ∪ {new point}
};

struct TaskRecord {
    std::size_t step = 0;
    int stage = 0;   // index of the stage this step contributes to
    ExtensionTask task;
    Elem point;      // the realizing point
    bool fresh = true;            // false when an existing point was used instead
    bool already_realized = false; // some existing point realized it before the step
    Elem copied_from{-1, -1};      // point whose relations the new point copied, if any
};

struct ChainOptions {
    // Run check_amalgamation(strong) up to size_cap before the first step.
    bool verify_sap = false;
    // When no strong amalgam exists, let an existing realizer stand in.
    bool allow_identification = false;
};

// Seeded chain M0 ⊆ M1 ⊆ ... of class members. Every stage extends the previous
// one by appending ids, so each connecting embedding is an inclusion.
class StageChain {
public:
    StageChain(ClassPresentation k, std::uint64_t seed, int size_cap, ChainOptions options = {});

    [[nodiscard]] const ClassPresentation& presentation() const { return *k_; }
    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    [[nodiscard]] int size_cap() const { return size_cap_; }
    [[nodiscard]] const ChainOptions& options() const { return options_; }
    [[nodiscard]] int stage_count() const { return static_cast<int>(stages_.size()); }
    [[nodiscard]] const FinStructure& stage(int i) const;
    [[nodiscard]] const FinStructure& last() const { return stage(stage_count() - 1); }
    // Inclusion of stage i into stage i + 1.
    [[nodiscard]] Embedding embedding(int i) const;
    // Composite of the connecting embeddings from stage `from` to stage `to`.
    [[nodiscard]] Embedding map_forward(int from, int to) const;
    [[nodiscard]] const std::vector<TaskRecord>& log() const { return log_; }
    [[nodiscard]] std::size_t pending_tasks() const { return queue_.size(); }

private:
    friend StageChain build_stage(const StageChain& chain, int steps);

    std::shared_ptr<const ClassPresentation> k_;
    std::uint64_t seed_;
    int size_cap_;
    ChainOptions options_;
    std::vector<std::shared_ptr<const FinStructure>> stages_;
    std::vector<TaskRecord> log_;
    std::deque<ExtensionTask> queue_;
    std::mt19937_64 rng_;
    std::size_t steps_ = 0;
    bool sap_checked_ = false;
};

// Runs `steps` extension tasks and appends the result as a new stage. When the
// task queue is empty a new batch is scheduled over the current structure: every
// base U with |U| <= size_cap - 1 and every one-point extension of U in the class,
// round-robin over extension types ordered by (size, canonical code) with seeded
// tie-breaks. Each task adds a fresh point whose remaining atoms come from a
// seeded completion search. On odd steps, when the task is already realized, the
// new point first copies a randomly chosen realizer and only its atoms with that
// realizer are searched. Throws when no strong amalgam exists for a task.
[[nodiscard]] StageChain build_stage(const StageChain& chain, int steps);

// Extensions depend only on the labelled structure induced on the base, so callers
// scanning many bases share one cache (valid for a single class).
class ExtensionCache {
public:
    struct Local {
        int sort;
        std::vector<Atom> atoms; // local ids, new point = -1
        CanonicalCode code;
    };
    std::map<std::string, std::vector<Local>> entries;
};

// Every one-point extension of U inside K, as task values with the new point
// written as -1; ordered by enumeration.
[[nodiscard]] std::vector<ExtensionTask> one_point_extensions(const ClassPresentation& k, const FinStructure& s,
                                                              const std::vector<Elem>& base,
                                                              ExtensionCache* cache = nullptr);

// Whether y (outside the base) realizes the task in s.
[[nodiscard]] bool realizes(const FinStructure& s, const ExtensionTask& task, Elem y);
[[nodiscard]] bool realizes(const StructureBuilder& s, const ExtensionTask& task, Elem y);

struct ExtensionReport {
    bool pass = true;
    int k = 0;
    std::size_t total = 0;
    std::size_t satisfied = 0;
    [[nodiscard]] double fraction() const { return total == 0 ? 1.0 : static_cast<double>(satisfied) / total; }
    std::vector<ExtensionTask> unmet;
};

// For every U ⊆ S with |U| <= k and every one-point extension of U in K, checks for
// a realizing point of S outside U. `unmet` is capped at max_unmet entries.
// With `bases_within` (per-sort sizes) only bases among the first ids of each sort
// are checked, e.g. an earlier stage of a chain inside a later one.
[[nodiscard]] ExtensionReport check_extension_axioms(const FinStructure& s, const ClassPresentation& k, int k_size,
                                                     std::size_t max_unmet = 50,
                                                     const std::optional<std::vector<int>>& bases_within = {});

// Calls visit(U) for every subset of the elements of s with size <= k, by size then
// lexicographically.
void for_each_subset(const FinStructure& s, int k, const std::function<void(const std::vector<Elem>&)>& visit);

[[nodiscard]] std::string describe_task(const ExtensionTask& t, const Signature& sig);

} // namespace forge
