#pragma once

#include "forge/structure.hpp"

#include <string_view>
#include <vector>

namespace forge {

struct Substructure {
    FinStructure structure;
    Embedding inclusion; // substructure -> original
};

// Restriction to `subset`; new ids follow increasing original ids per sort.
[[nodiscard]] Substructure induced_substructure(const FinStructure& s, const std::vector<Elem>& subset);

struct Amalgam {
    FinStructure d;
    Embedding g; // B -> D
    Embedding h; // C -> D
};

// Disjoint union of B and C glued along the images of A; no relation tuple meets
// both B∖A and C∖A. D's ids: B keeps its ids, C∖A is appended after them.
[[nodiscard]] Amalgam free_amalgam(const FinStructure& b, const FinStructure& c, const FinStructure& a,
                                   const Embedding& e, const Embedding& f);

// SAP image condition: g∘e = h∘f and im(g) ∩ im(h) = im(g∘e).
[[nodiscard]] bool satisfies_sap_condition(const FinStructure& a, const Amalgam& am, const Embedding& e,
                                           const Embedding& f);

struct Quotient {
    FinStructure structure;                     // E removed from the signature
    std::vector<std::vector<int>> projection;   // per sort: element -> class id
};

// Collapse the E-classes of E's sort. Class ids follow the least member.
[[nodiscard]] Quotient quotient(const FinStructure& s, std::string_view equivalence);

} // namespace forge
