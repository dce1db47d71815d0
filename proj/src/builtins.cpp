#include "forge/builtins.hpp"

namespace forge {

Signature graph_signature() { return Signature({"V"}, {{"R", {"V", "V"}, kSymmetric | kIrreflexive}}); }

Signature set_signature() { return Signature({"V"}, {}); }

FinStructure make_graph(int n, const std::vector<std::pair<int, int>>& edges)
{
    std::vector<Tuple> rows;
    for (auto [a, b] : edges) {
        rows.push_back({a, b});
        rows.push_back({b, a});
    }
    return FinStructure(graph_signature(), {n}, {rows});
}

FinStructure complete_graph(int n)
{
    std::vector<std::pair<int, int>> edges;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            edges.emplace_back(a, b);
    return make_graph(n, edges);
}

FinStructure path_graph(int n)
{
    std::vector<std::pair<int, int>> edges;
    for (int a = 0; a + 1 < n; ++a)
        edges.emplace_back(a, a + 1);
    return make_graph(n, edges);
}

FinStructure edgeless_graph(int n) { return make_graph(n, {}); }

FinStructure pure_set(int n) { return FinStructure(set_signature(), {n}, {}); }

} // namespace forge
