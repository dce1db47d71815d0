#pragma once

#include "forge/presentation.hpp"

#include <string>

namespace forge {

inline constexpr const char* kCoverRelation = "E";

// Each element of `sort` becomes m copies forming one E-class; every relation holds
// of copies iff it held of the originals. Copy j of element x gets id x*m + j.
[[nodiscard]] FinStructure imaginary_cover_structure(const FinStructure& s, int m, int sort = 0);
[[nodiscard]] Signature cover_signature(const Signature& sig, int sort = 0);

// E is an equivalence, every relation is E-invariant, and no forbidden structure of
// K appears among pairwise E-inequivalent points.
[[nodiscard]] ClassPresentation imaginary_cover_class(const ClassPresentation& k, int sort = 0);

// Sorts O (index 0) and P (index 1); each relation R of arity n becomes R of profile
// (P, O, ..., O) with n + 1 places. Flags are dropped.
[[nodiscard]] Signature pfc_signature(const Signature& base);

// The structure on sort O carrying { ȳ : R(b, ȳ) } for each R, over `base`.
[[nodiscard]] FinStructure fiber_structure(const FinStructure& m, int b, const Signature& base);

// Every fiber lies in K: K's forbidden structures become one-P-point patterns and
// K's helpers and flags apply inside each fiber.
[[nodiscard]] ClassPresentation pfc_class(const ClassPresentation& k);

} // namespace forge

#include "forge/chain.hpp"
#include "forge/formula.hpp"

namespace forge {

struct GrowthVerdict {
    enum class Kind { algebraic, growing, inconclusive };
    Kind kind = Kind::inconclusive;
    int bound = 0; // the constant count when algebraic
    std::vector<int> stages;
    std::vector<int> counts;
};

[[nodiscard]] std::string kind_name(GrowthVerdict::Kind k);

// algebraic(k): the same count k at every stage; growing: strictly increasing on at
// least three consecutive stages; anything else is inconclusive.
[[nodiscard]] GrowthVerdict classify_counts(std::vector<int> stages, std::vector<int> counts);

// Realizations of qftp(a/C) at each listed stage, with a and C carried forward
// along the chain's embeddings. Needs at least three stages, all >= stage.
[[nodiscard]] GrowthVerdict acl_estimate(const StageChain& chain, int stage, Elem a, const std::vector<Elem>& base,
                                         const std::vector<int>& stages);

// Realizations of φ(x; params) at each listed stage, the parameters given at `stage`.
[[nodiscard]] GrowthVerdict formula_growth(const StageChain& chain, const PartitionedFormula& phi,
                                           const std::vector<Elem>& params, int stage, const std::vector<int>& stages);

struct FormulaGrowthReport {
    std::size_t instances = 0;
    std::size_t algebraic = 0;
    std::size_t growing = 0;
    std::size_t inconclusive = 0;
    int max_algebraic_bound = 0;
    // A bound k <= k_max with every algebraic instance <= k and every growing
    // instance above k at the last stage, and no inconclusive instance.
    bool uniform_bound_found = false;
    int uniform_bound = 0;
    std::vector<std::pair<std::vector<Elem>, GrowthVerdict>> samples; // first few instances
};

// Every parameter tuple of the earliest listed stage.
[[nodiscard]] FormulaGrowthReport classify_formula_growth(const StageChain& chain, const PartitionedFormula& phi,
                                                          const std::vector<int>& stages, int k_max,
                                                          std::size_t keep_samples = 10);

} // namespace forge
