#pragma once

// Density and codensity for graphs counted from neighbourhood patterns, without the
// extension enumerator. Shared by the unit tests and the acceptance binary.

#include "forge/evaluate.hpp"
#include "forge/structure.hpp"

#include <algorithm>
#include <utility>
#include <vector>

namespace forge::oracles {

inline bool adjacent(const FinStructure& g, int a, int b)
{
    const int t[2] = {a, b};
    return g.holds(0, t);
}

// Graph density by neighbourhood patterns: for every A with |A| <= k and every
// S ⊆ A, some y outside A on the wanted side of H has N(y) ∩ A = S.
inline std::pair<std::size_t, std::size_t> graph_axiom_counts(const FinStructure& g, const PredicateSet& h, int k, bool in_h)
{
    const int n = g.size(0);
    std::size_t total = 0, met = 0;
    std::vector<int> a;
    auto rec = [&](auto&& self, int from) -> void {
        for (unsigned mask = 0; mask < (1u << a.size()); ++mask) {
            ++total;
            for (int y = 0; y < n; ++y) {
                if (std::find(a.begin(), a.end(), y) != a.end() || h.contains({0, y}) != in_h)
                    continue;
                bool ok = true;
                for (std::size_t i = 0; i < a.size() && ok; ++i)
                    ok = adjacent(g, y, a[i]) == (((mask >> i) & 1u) != 0);
                if (ok) {
                    ++met;
                    break;
                }
            }
        }
        if (static_cast<int>(a.size()) == k)
            return;
        for (int v = from; v < n; ++v) {
            a.push_back(v);
            self(self, v + 1);
            a.pop_back();
        }
    };
    rec(rec, 0);
    return {total, met};
}

} // namespace forge::oracles
