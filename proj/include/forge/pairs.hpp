#pragma once

#include "forge/chain.hpp"
#include "forge/evaluate.hpp"
#include "forge/json_io.hpp"

#include <memory>
#include <optional>
#include <string>

namespace forge {

// The classes handled here have trivial algebraic closure (acl(A) = A). Under that
// assumption every extension realized by a fresh point is non-algebraic, the small
// closure of B is B ∪ H, and independence over H holds for every set.

enum class HMode { independent, substructure };

[[nodiscard]] std::string h_mode_name(HMode m);
[[nodiscard]] HMode h_mode_from_name(const std::string& name);

struct PairProvenance {
    std::uint64_t seed = 0;
    int steps = 0;
    int k_cap = 0;
    HMode h_mode = HMode::independent;
    bool closed = false;
};

struct PairTaskRecord {
    std::size_t step = 0;
    std::string stream; // "generic", "density", "codensity" or "h_internal"
    ExtensionTask task;
    Elem point;
    bool fresh = true; // false when an existing point already met the task
};

struct PairExpansion {
    FinStructure host;
    PredicateSet h;
    std::shared_ptr<const ClassPresentation> presentation;
    PairProvenance provenance;
    std::vector<PairTaskRecord> log;
};

// Structure document plus "H": {sort: [ids]}, "provenance" and "class".
[[nodiscard]] Json pair_to_json(const PairExpansion& p);
[[nodiscard]] PairExpansion pair_from_json(const Json& j);

struct PairBuildOptions {
    HMode h_mode = HMode::independent;
    // After the steps, keep realizing unmet density and codensity tasks until a full
    // scan at the k-cap finds none. This settles quickly for the random graph; for
    // classes like triangle_free each new point opens more tasks than it meets and
    // the build stops at max_points.
    bool close = false;
    int max_points = 400;
};

// Starts from the empty structure and runs `steps` tasks, taking the streams in turn:
// generic extensions (fresh point, H membership by coin flip), density (realized in H)
// and codensity (realized outside H), plus H-internal extensions over bases inside H
// in substructure mode. Bases have at most k_cap points. Density and codensity tasks
// already met by an existing point add nothing. Throws when a task has no strong
// amalgam and BudgetExceeded past max_points.
[[nodiscard]] PairExpansion build_pair_stage(const ClassPresentation& k, std::uint64_t seed, int steps, int k_cap,
                                             const PairBuildOptions& options = {});

struct PairAxiomReport {
    bool pass = true;
    int k = 0;
    std::size_t total = 0;
    std::size_t satisfied = 0;
    std::vector<ExtensionTask> unmet;
    [[nodiscard]] double fraction() const { return total == 0 ? 1.0 : static_cast<double>(satisfied) / total; }
};

// Every base A with |A| <= k and every one-point extension of A in the class has a
// realization in H ∖ A.
[[nodiscard]] PairAxiomReport check_density(const PairExpansion& p, int k, std::size_t max_unmet = 50);
// ... and one outside A ∪ H, which is the complement of the small closure of A.
[[nodiscard]] PairAxiomReport check_codensity(const PairExpansion& p, int k, std::size_t max_unmet = 50);

// B ∪ H, sorted. Throws on elements outside the universe.
[[nodiscard]] std::vector<Elem> small_closure(const PairExpansion& p, const std::vector<Elem>& b);

// Always true once the elements are checked: H(A) is A ∩ H.
[[nodiscard]] bool h_independent(const PairExpansion& p, const std::vector<Elem>& a);

struct HAgreementReport {
    bool h_restriction = true;
    std::optional<Elem> h_witness;   // in H, satisfies exactly one of φ and ψ
    bool difference_small = true;
    std::optional<Elem> diff_witness; // in φ △ ψ outside the small closure of the parameters
    [[nodiscard]] bool pass() const { return h_restriction && difference_small; }
};

// φ may mention H and ψ may not. Both have free variables among x and the assigned
// parameters.
[[nodiscard]] HAgreementReport check_h_agreement(const PairExpansion& p, const Formula& phi, const Formula& psi,
                                                 const Variable& x, const Assignment& params);

// H(z) ∧ ∃x (θ ∧ φ). Throws when x or z occur with another sort or z is x.
[[nodiscard]] Formula build_mu(const Formula& theta, const Formula& phi, const Variable& x, const Variable& z);

} // namespace forge
