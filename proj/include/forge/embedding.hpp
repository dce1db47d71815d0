#pragma once

#include "forge/budget.hpp"
#include "forge/error.hpp"
#include "forge/structure.hpp"

#include <algorithm>
#include <vector>

namespace forge {

struct EmbeddingSearchOptions {
    // Optional per-sort mask of admissible targets (empty = everything admissible).
    std::vector<std::vector<char>> allowed;
    // Targets that must all occur in the image.
    std::vector<Elem> required;
    // Fixed (source, target) pairs; pinned sources are placed first in the search.
    std::vector<std::pair<Elem, Elem>> pinned;
};

namespace detail {

// Backtracking search for induced embeddings src -> dst. Target must provide
// size(sort) and holds(rel, span<const int>). Embeddings are produced in
// lexicographic order of the target assignment along src.elements().
template <class Target>
class EmbeddingSearch {
public:
    EmbeddingSearch(const FinStructure& src, const Target& dst, const EmbeddingSearchOptions& opts)
        : src_(src), dst_(dst), opts_(opts), order_(src.elements())
    {
        const int n = static_cast<int>(order_.size());
        pin_.assign(src.sizes().size(), {});
        for (int s = 0; s < static_cast<int>(src.sizes().size()); ++s)
            pin_[s].assign(src.size(s), -1);
        for (const auto& [from, to] : opts.pinned)
            if (src.contains(from))
                pin_[from.sort][from.id] = to.id;
        std::stable_partition(order_.begin(), order_.end(), [&](const Elem& e) { return pin_[e.sort][e.id] >= 0; });
        pos_.assign(src.sizes().size(), {});
        for (int s = 0; s < static_cast<int>(src.sizes().size()); ++s)
            pos_[s].assign(src.size(s), 0);
        for (int i = 0; i < n; ++i)
            pos_[order_[i].sort][order_[i].id] = i;
        checks_.assign(n, {});
        for (int r = 0; r < src.sig().relation_count(); ++r) {
            const auto& prof = src.sig().relation(r).profile;
            for_each_tuple(prof, src.sizes(), [&](const Tuple& t) {
                int last = 0;
                for (std::size_t k = 0; k < t.size(); ++k)
                    last = std::max(last, pos_[prof[k]][t[k]]);
                checks_[last].push_back({r, t, src.holds(r, t)});
            });
        }
        image_.assign(src.sizes().size(), {});
        for (int s = 0; s < static_cast<int>(src.sizes().size()); ++s)
            image_[s].assign(src.size(s), -1);
        used_.assign(src.sizes().size(), {});
        for (int s = 0; s < static_cast<int>(src.sizes().size()); ++s)
            used_[s].assign(dst.size(s), 0);
        required_.assign(src.sizes().size(), {});
        for (const auto& e : opts.required)
            if (e.sort < static_cast<int>(required_.size()))
                required_[e.sort].push_back(e.id);
        for (int s = 0; s < static_cast<int>(src.sizes().size()); ++s) {
            remaining_.push_back(src.size(s));
            missing_.push_back(static_cast<int>(required_[s].size()));
        }
    }

    template <class Visit>
    void run(Visit&& visit)
    {
        for (int s = 0; s < static_cast<int>(src_.sizes().size()); ++s)
            if (src_.size(s) > dst_.size(s) || missing_[s] > src_.size(s))
                return;
        stop_ = false;
        step(0, visit);
    }

private:
    struct Check {
        int rel;
        Tuple tuple;
        bool value;
    };

    bool is_required(int sort, int id) const
    {
        for (int r : required_[sort])
            if (r == id)
                return true;
        return false;
    }

    template <class Visit>
    void step(int i, Visit& visit)
    {
        if (stop_)
            return;
        if (i == static_cast<int>(order_.size())) {
            Embedding e{image_};
            if (!visit(static_cast<const Embedding&>(e)))
                stop_ = true;
            return;
        }
        budget::check();
        const Elem x = order_[i];
        const int s = x.sort;
        const int pinned = pin_[s][x.id];
        const int lo = pinned >= 0 ? pinned : 0;
        const int hi = pinned >= 0 ? std::min(pinned + 1, dst_.size(s)) : dst_.size(s);
        for (int t = lo; t < hi && !stop_; ++t) {
            if (used_[s][t])
                continue;
            if (!opts_.allowed.empty() && !opts_.allowed[s].empty() && !opts_.allowed[s][t])
                continue;
            const bool req = is_required(s, t);
            // every still-missing required target needs a free source slot
            if (missing_[s] - (req ? 1 : 0) > remaining_[s] - 1)
                continue;
            image_[s][x.id] = t;
            if (consistent(i)) {
                used_[s][t] = 1;
                --remaining_[s];
                if (req)
                    --missing_[s];
                step(i + 1, visit);
                if (req)
                    ++missing_[s];
                ++remaining_[s];
                used_[s][t] = 0;
            }
            image_[s][x.id] = -1;
        }
    }

    bool consistent(int i)
    {
        int buf[kMaxArity];
        for (const auto& c : checks_[i]) {
            const auto& prof = src_.sig().relation(c.rel).profile;
            for (std::size_t k = 0; k < c.tuple.size(); ++k)
                buf[k] = image_[prof[k]][c.tuple[k]];
            if (dst_.holds(c.rel, std::span<const int>(buf, c.tuple.size())) != c.value)
                return false;
        }
        return true;
    }

    const FinStructure& src_;
    const Target& dst_;
    const EmbeddingSearchOptions& opts_;
    std::vector<Elem> order_;
    std::vector<std::vector<int>> pos_;
    std::vector<std::vector<int>> pin_;
    std::vector<std::vector<Check>> checks_;
    std::vector<std::vector<int>> image_;
    std::vector<std::vector<char>> used_;
    std::vector<std::vector<int>> required_;
    std::vector<int> remaining_;
    std::vector<int> missing_;
    bool stop_ = false;
};

} // namespace detail

// Visits every induced embedding src -> dst; visit returns false to stop early.
template <class Target, class Visit>
void for_each_embedding(const FinStructure& src, const Target& dst, Visit&& visit,
                        const EmbeddingSearchOptions& opts = {})
{
    if (!(src.sig() == dst.sig()))
        throw SignatureMismatch("embedding search across different signatures");
    detail::EmbeddingSearch<Target> search(src, dst, opts);
    search.run(visit);
}

template <class Target>
[[nodiscard]] bool embeds(const FinStructure& src, const Target& dst, const EmbeddingSearchOptions& opts = {})
{
    bool found = false;
    for_each_embedding(src, dst, [&](const Embedding&) {
        found = true;
        return false;
    }, opts);
    return found;
}

// All induced embeddings A -> B in deterministic order.
[[nodiscard]] std::vector<Embedding> enumerate_embeddings(const FinStructure& a, const FinStructure& b);
[[nodiscard]] std::size_t count_embeddings(const FinStructure& a, const FinStructure& b);
[[nodiscard]] bool isomorphic(const FinStructure& a, const FinStructure& b);
[[nodiscard]] std::vector<Embedding> automorphisms(const FinStructure& s);

} // namespace forge
