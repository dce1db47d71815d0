#pragma once

#include "forge/structure.hpp"

#include <utility>
#include <vector>

namespace forge {

// Sort "V"; R binary, symmetric and irreflexive.
[[nodiscard]] Signature graph_signature();
// Sort "V" with no relations.
[[nodiscard]] Signature set_signature();

[[nodiscard]] FinStructure make_graph(int n, const std::vector<std::pair<int, int>>& edges);
[[nodiscard]] FinStructure complete_graph(int n);
[[nodiscard]] FinStructure path_graph(int n);
[[nodiscard]] FinStructure edgeless_graph(int n);
[[nodiscard]] FinStructure pure_set(int n);

} // namespace forge
