#pragma once

#include "forge/formula.hpp"

#include <string>
#include <string_view>

namespace forge {

// Concrete syntax:
//   variables  name or name:sort       parameters  #sort:id
//   atoms      R(t1,…,tn)  t1 = t2  H(t)  true  false
//   connectives ! > & > | > -> (right associative)
//   quantifiers exists v:s. φ / forall v:s. φ, extending as far right as possible
// Free variables without an annotation take the sort of their first atom position,
// of an equated term, or the only sort of a single-sorted signature.
[[nodiscard]] Formula parse_formula(std::string_view text, const Signature& sig);

// Prints free variables with their sort and bound ones bare; parse(print(f)) == f.
[[nodiscard]] std::string print_formula(const Formula& f, const Signature& sig);

} // namespace forge
