#pragma once

#include "forge/structure.hpp"

#include <compare>
#include <string>

namespace forge {

// Opaque isomorphism-invariant code. Two structures over the same signature have
// equal codes iff they are isomorphic.
class CanonicalCode {
public:
    CanonicalCode() = default;
    explicit CanonicalCode(std::string bytes) : bytes_(std::move(bytes)) {}

    [[nodiscard]] const std::string& bytes() const { return bytes_; }
    [[nodiscard]] std::string hex() const;

    auto operator<=>(const CanonicalCode&) const = default;

private:
    std::string bytes_;
};

// Ordered-partition refinement plus individualization search; the code is the
// lexicographically least relabelled table encoding over all search-tree leaves.
// Sibling branches related by an automorphic transposition are pruned.
[[nodiscard]] CanonicalCode canonical_form(const FinStructure& s);

// The relabelled copy whose table encoding produced the canonical code.
[[nodiscard]] FinStructure canonical_representative(const FinStructure& s);

} // namespace forge
