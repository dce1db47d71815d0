#pragma once

#include "forge/canonical.hpp"
#include "forge/json_io.hpp"
#include "forge/structure.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace forge {

// Universal axioms that are compiled into forbidden patterns. Positions i, j index
// the relation's argument list; `other` is the equivalence used by `invariant`.
enum class HelperKind { symmetric, reflexive, irreflexive, transitive, invariant };

struct Helper {
    HelperKind kind = HelperKind::symmetric;
    int rel = 0;
    int i = 0;
    int j = 1;
    int other = -1;
    bool operator==(const Helper&) const = default;
};

// Names look like "symmetric(R)", "irreflexive(R,1,2)", "invariant(R,E)", "equivalence(E)".
[[nodiscard]] std::string helper_name(const Helper& h, const Signature& sig);
// "equivalence(E)" expands to reflexive, symmetric and transitive.
[[nodiscard]] std::vector<Helper> parse_helpers(std::string_view name, const Signature& sig);
[[nodiscard]] bool helper_holds(const Helper& h, const FinStructure& s);
// At most this many points are needed to witness a violation.
[[nodiscard]] int helper_points(const Helper& h, const Signature& sig);
// Symmetric, reflexive and irreflexive helpers can be imposed while generating atoms.
[[nodiscard]] bool helper_is_local(const Helper& h);
// Helpers implied by the signature's relation flags.
[[nodiscard]] std::vector<Helper> flag_helpers(const Signature& sig);

struct Atom {
    int rel = 0;
    Tuple tuple;
    auto operator<=>(const Atom&) const = default;
};

struct ForbiddenPattern {
    FinStructure structure;
    CanonicalCode code;
    // Violates a local helper, so it never appears in atom sets generated under
    // those helpers; skipped in anchored checks on generated structures.
    bool excluded_by_generation = false;
};

// A class of finite structures given by forbidden induced substructures.
class ClassPresentation {
public:
    ClassPresentation() = default;
    // Compiles the helpers into minimal violating patterns, merges them with
    // `forbidden`, drops duplicates and patterns containing another pattern.
    ClassPresentation(std::string name, Signature sig, std::vector<FinStructure> forbidden,
                      std::vector<Helper> helpers = {});

    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] const Signature& sig() const { return *sig_; }
    [[nodiscard]] const std::shared_ptr<const Signature>& sig_ptr() const { return sig_; }
    [[nodiscard]] const std::vector<ForbiddenPattern>& forbidden() const { return forbidden_; }
    [[nodiscard]] const std::vector<Helper>& helpers() const { return helpers_; }
    // Helpers plus signature flags; local ones constrain atom generation.
    [[nodiscard]] const std::vector<Helper>& generation_helpers() const { return generation_; }
    [[nodiscard]] std::vector<std::string> helper_names() const;

private:
    std::string name_;
    std::shared_ptr<const Signature> sig_ = std::make_shared<Signature>();
    std::vector<ForbiddenPattern> forbidden_;
    std::vector<Helper> helpers_;
    std::vector<Helper> generation_;
};

// pure_set, random_graph, triangle_free, kn_free(n), degree_le_1, equivalence_relation.
[[nodiscard]] ClassPresentation builtin_class(std::string_view name);
[[nodiscard]] std::vector<std::string> builtin_class_names();

// Class file: {"name", "signature", "forbidden": [structures], "helpers": [names]}.
// The forbidden list written out is the compiled one, so reading it back gives an
// equal presentation.
[[nodiscard]] Json class_to_json(const ClassPresentation& k);
[[nodiscard]] ClassPresentation class_from_json(const Json& j);

[[nodiscard]] bool class_membership(const ClassPresentation& k, const FinStructure& s);

// Looks for a forbidden pattern embedding whose image contains all anchors and stays
// inside `allowed` (per-sort masks, empty = all). Returns the image points, or an
// empty vector when there is none. Target is FinStructure or StructureBuilder.
template <class Target>
[[nodiscard]] std::vector<Elem> anchored_violation(const ClassPresentation& k, const Target& d,
                                                   const std::vector<Elem>& anchors,
                                                   const std::vector<std::vector<char>>& allowed,
                                                   bool skip_generation_excluded);

// Candidate atoms grouped into variables under the local helpers: tied atoms share
// one value; forced atoms are fixed.
struct AtomVariable {
    std::vector<Atom> atoms;
};

struct AtomSpace {
    std::vector<AtomVariable> vars;
    std::vector<Atom> forced_true;
    bool infeasible = false; // some atom is forced both ways
};

[[nodiscard]] AtomSpace build_atom_space(const std::vector<Helper>& helpers, std::vector<Atom> candidates);

// All tuples over `pool` matching the relation profile that use every element of
// `must` at least once (elements of `must` need not be in `pool`).
void for_each_tuple_using(const Signature& sig, int rel, const std::vector<Elem>& pool, const std::vector<Elem>& must,
                          const std::function<void(const Tuple&)>& visit);

struct AgeEntry {
    CanonicalCode code;
    FinStructure structure;
};

// Isomorphism types in the class with total size 1..n, ordered by size then code.
// Throws BudgetExceeded when more than max_count types are produced.
[[nodiscard]] std::vector<AgeEntry> enumerate_age(const ClassPresentation& k, int n, std::size_t max_count = 200000);

// Isomorphism types of structures with total size <= n satisfying the local helpers
// (no membership filter).
[[nodiscard]] std::vector<AgeEntry> enumerate_generated(const Signature& sig, const std::vector<Helper>& local, int n,
                                                        std::size_t max_count = 200000);

} // namespace forge
