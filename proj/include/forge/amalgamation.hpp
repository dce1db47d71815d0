#pragma once

#include "forge/construct.hpp"
#include "forge/presentation.hpp"

#include <optional>
#include <random>

namespace forge {

// Points of a partially built structure D: `shared` lies in both pieces, `left`
// only in the first and `right` only in the second. Atoms inside each piece are
// already set; atoms meeting both left and right are undecided.
struct CompletionProblem {
    std::vector<Elem> shared;
    std::vector<Elem> left;
    std::vector<Elem> right;
};

struct CompletionPolicy {
    // nullptr: try false before true, in the given point order. Otherwise the
    // value tried first is drawn per variable.
    std::mt19937_64* rng = nullptr;
};

// Decides the undecided atoms of `d` so that d is in K, assuming both pieces are.
// Checkpoints run over (right point, left point) pairs; a failed checkpoint jumps
// back to the latest checkpoint involved in the violations it saw. Returns false
// (with the undecided atoms reset to false) when no completion exists.
bool complete_cross_atoms(const ClassPresentation& k, StructureBuilder& d, const CompletionProblem& problem,
                          const CompletionPolicy& policy = {});

struct AmalgamationConfig {
    FinStructure a, b, c;
    Embedding e, f; // A -> B, A -> C
};

struct AmalgamationReport {
    bool pass = true;
    bool strong = true;
    int bound = 0;
    std::size_t configurations = 0;
    std::optional<AmalgamationConfig> witness;
};

// Some D in K with embeddings g, h satisfying g∘e = h∘f. Strong: the universe of
// D is exactly B ⊔_A C. Otherwise points of B∖A and C∖A may also be identified.
[[nodiscard]] std::optional<Amalgam> find_amalgam(const ClassPresentation& k, const AmalgamationConfig& cfg,
                                                  bool strong);

// Exhaustive over A, B, C in the age up to size n (|B|, |C| <= n) and over
// embeddings up to automorphisms of B and C. Configurations are visited by
// (max(|B|,|C|), |B|+|C|, |A|), so a failure witness is minimal in that order.
[[nodiscard]] AmalgamationReport check_amalgamation(const ClassPresentation& k, int n, bool strong);

// Independent re-check: tries every assignment of the cross atoms of B ⊔_A C
// without pruning. Only suitable for small configurations.
[[nodiscard]] bool brute_force_strong_amalgam_exists(const ClassPresentation& k, const AmalgamationConfig& cfg);

} // namespace forge
