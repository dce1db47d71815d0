#pragma once

#include "forge/evaluate.hpp"
#include "forge/formula.hpp"
#include "forge/json_io.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace forge {

// A node of the index tree b^{<ω}: a finite sequence of digits 0..b-1.
using TreeIndex = std::vector<int>;

// Digits written out, e.g. "010"; the root is "". Branching above 10 is written with
// '.' between digits.
[[nodiscard]] std::string index_to_string(const TreeIndex& i, int branching = 2);
[[nodiscard]] TreeIndex index_from_string(std::string_view text, int branching = 2);

[[nodiscard]] bool is_initial_segment(const TreeIndex& a, const TreeIndex& b); // a ⊴ b
[[nodiscard]] bool comparable(const TreeIndex& a, const TreeIndex& b);
[[nodiscard]] TreeIndex meet(const TreeIndex& a, const TreeIndex& b);
// Initial segments first, otherwise the first differing digit decides.
[[nodiscard]] bool lex_less(const TreeIndex& a, const TreeIndex& b);
// Every index of length 0..depth, by length and then digit order.
[[nodiscard]] std::vector<TreeIndex> all_indices(int branching, int depth);

// Quantifier-free type of an index tuple in the language {⊲, <_lex, ∧}. The meet
// closure is listed in <_lex order; the code stores the ⊲ relation and the meet table
// over that list, then the list position of each tuple entry. Lengths do not enter.
struct L0TypeCode {
    std::vector<int> data;
    auto operator<=>(const L0TypeCode&) const = default;
    [[nodiscard]] std::string hex() const;
};

[[nodiscard]] L0TypeCode tree_qftp(const std::vector<TreeIndex>& indices);

// Labels over every index of length 0..depth. All labels are id tuples of the sorts in
// `profile`. `h` is present when the host is a pair expansion.
struct LabeledTree {
    FinStructure host;
    std::optional<PredicateSet> h;
    int branching = 2;
    int depth = 0;
    std::vector<int> profile;
    std::map<TreeIndex, std::vector<int>> labels;
    std::vector<Elem> base;

    // Throws forge::Error on a missing or malformed label.
    void validate() const;
    [[nodiscard]] const std::vector<int>& label(const TreeIndex& i) const;
    [[nodiscard]] std::vector<Elem> label_elements(const TreeIndex& i) const;
    [[nodiscard]] std::vector<TreeIndex> domain() const { return all_indices(branching, depth); }
};

// {"branching", "depth", "profile": [sort], "labels": {"010": [ids]},
//  "base": [[sort, id]], "host": structure, optional "h": [[sort, id]]}
[[nodiscard]] Json labeled_tree_to_json(const LabeledTree& t);
[[nodiscard]] LabeledTree labeled_tree_from_json(const Json& j);

struct WitnessReport {
    bool pass = true;
    // Which condition failed: "path", "incomparable", "type" or "based_on".
    std::string condition;
    std::vector<TreeIndex> indices;
    std::vector<TreeIndex> other; // the second tuple of a type mismatch
    int count = 0;
    int t = 1;
    int k = 2;
    int width = 0;

    [[nodiscard]] Json to_json(int branching = 2) const;
};

// Labels with the same tree_qftp have the same qftp over `base` (with H membership
// when present), for every index tuple of length 1..w.
[[nodiscard]] WitnessReport check_strong_indiscernibility(const LabeledTree& t, int w);

// (i) every root-to-leaf path has at least t realizations of q ∧ ⋀ φ(x, a_{ξ|n});
// (ii) every ⊲-incomparable pair has none of q ∧ φ(x, a_η) ∧ φ(x, a_ν).
[[nodiscard]] WitnessReport check_sop2_witness(const LabeledTree& t, const PartitionedFormula& phi,
                                               const FormulaSet& q, int threshold = 1);

// Paths as above; every k pairwise incomparable indices are jointly unrealized.
[[nodiscard]] WitnessReport check_ktp1_witness(const LabeledTree& t, const PartitionedFormula& psi, int k,
                                               int threshold = 1);

struct TreeWitness {
    LabeledTree tree;
    PartitionedFormula phi;
};

// ⋀_{i<K} φ(x, ȳ_i) with every copy's parameters renamed apart, in copy order.
[[nodiscard]] PartitionedFormula conjunction_power(const PartitionedFormula& phi, int copies);

// The new label at ε₀…ε_{m-1} joins the old labels at ε₀^K…ε_{m-2}^K ε_{m-1}^j for
// j = 1..K. The root repeats the old root label K times. Depth becomes depth / K.
[[nodiscard]] TreeWitness power_reindex(const LabeledTree& t, const PartitionedFormula& phi, int k);

// φ ∧ ¬⋀_{i<K} φ(x, ȳ_i); the label at η is the old one at 0^K⌢η followed by the
// labels at 1, 01, …, 0^{K-1}1. Depth drops by K. K = 0 returns the input.
[[nodiscard]] TreeWitness prune_exceptional(const LabeledTree& t, const PartitionedFormula& phi, int k);

struct ExtractOptions {
    int threshold = 1;
    // The pair 0, 1 must have fewer joint realizations than this.
    int pair_bound = 8;
};

struct ExtractResult {
    bool ok = false;
    std::string stage;      // failing stage when !ok
    std::string diagnostic;
    int k = 0;              // block length of the reindexing
    int k_prime = 0;        // side labels removed
    int n = 0;              // final shift along 0^n
    std::optional<TreeWitness> witness;
    WitnessReport verification;
};

// Normalizes a tree with consistent paths and a finite 0,1 pair into an SOP₂ witness.
[[nodiscard]] ExtractResult extract_sop2(const LabeledTree& t, const PartitionedFormula& phi,
                                         const ExtractOptions& options = {});

struct SearchOptions {
    int depth = 2;
    int branching = 2;
    int threshold = 1;
    int max_conjuncts = 1;
    std::size_t max_candidates = 200000;
    std::size_t max_nodes = 50000000;
};

// Backtracking over labels in index order and, for each index, candidate tuples in
// lexicographic id order. Conjunct counts run outermost, then the templates.
// Throws BudgetExceeded past the candidate or node caps.
[[nodiscard]] std::optional<TreeWitness> search_sop2(const FinStructure& s,
                                                     const std::vector<PartitionedFormula>& templates,
                                                     const SearchOptions& options = {});

// Every index tuple of `tb` up to length w matches some tuple of `ta` in tree_qftp and
// in the qftp of labels over ta.base.
[[nodiscard]] WitnessReport check_based_on(const LabeledTree& tb, const LabeledTree& ta, int w);

// A graph over the nodes of 2^{≤h}, ids in all_indices order, with an edge between a
// leaf (length h) and each of its proper initial segments.
[[nodiscard]] FinStructure tree_code_structure(int h);
// Labels every index of length ≤ h-1 by its own element, over the empty base.
[[nodiscard]] LabeledTree tree_code_witness(int h);

// tree_code_structure(h) plus `junk` extra points joined to every node of length < h.
[[nodiscard]] FinStructure junk_tree_code_structure(int h, int junk);
[[nodiscard]] LabeledTree junk_tree_code_witness(int h, int junk);

// Sorts "point" and "node", R(point, node). Nodes are 2^{≤h}. One point per leaf is
// joined to the nodes on its path and one point per incomparable pair to both nodes.
// The labeled tree puts each node on its own index.
[[nodiscard]] FinStructure pairwise_consistent_triple_empty(int h);
[[nodiscard]] LabeledTree pairwise_consistent_triple_empty_witness(int h);

} // namespace forge
