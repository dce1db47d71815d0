#include "forge/canonical.hpp"

#include "forge/budget.hpp"

#include <algorithm>
#include <map>
#include <optional>

namespace forge {

std::string CanonicalCode::hex() const
{
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes_.size() * 2);
    for (unsigned char c : bytes_) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 15]);
    }
    return out;
}

namespace {

struct Occurrence {
    int rel;
    int tuple;
    int position;
};

class Canonizer {
public:
    explicit Canonizer(const FinStructure& s) : s_(s)
    {
        const int sorts = static_cast<int>(s.sizes().size());
        offset_.assign(sorts + 1, 0);
        for (int k = 0; k < sorts; ++k)
            offset_[k + 1] = offset_[k] + s.size(k);
        n_ = offset_[sorts];
        sort_of_.resize(n_);
        for (int k = 0; k < sorts; ++k)
            for (int i = 0; i < s.size(k); ++i)
                sort_of_[offset_[k] + i] = k;
        occ_.assign(n_, {});
        for (int r = 0; r < s.sig().relation_count(); ++r) {
            const auto& prof = s.sig().relation(r).profile;
            const auto& table = s.table(r);
            for (int t = 0; t < static_cast<int>(table.size()); ++t)
                for (int p = 0; p < static_cast<int>(prof.size()); ++p)
                    occ_[offset_[prof[p]] + table[t][p]].push_back({r, t, p});
        }
    }

    std::vector<int> run()
    {
        std::vector<int> colors(n_);
        for (int v = 0; v < n_; ++v)
            colors[v] = sort_of_[v];
        refine(colors);
        search(colors);
        return best_labels_;
    }

    const std::vector<int>& best() const { return best_; }

private:
    int global(int sort, int id) const { return offset_[sort] + id; }

    // Iterated colour refinement; colours end up as dense ranks of canonical signatures.
    void refine(std::vector<int>& colors) const
    {
        int classes = count_classes(colors);
        while (true) {
            std::vector<std::vector<int>> sigs(n_);
            for (int v = 0; v < n_; ++v) {
                std::vector<std::vector<int>> items;
                for (const auto& o : occ_[v]) {
                    const auto& prof = s_.sig().relation(o.rel).profile;
                    const auto& t = s_.table(o.rel)[o.tuple];
                    std::vector<int> item{o.rel, o.position};
                    for (std::size_t k = 0; k < t.size(); ++k)
                        item.push_back(colors[global(prof[k], t[k])]);
                    items.push_back(std::move(item));
                }
                std::sort(items.begin(), items.end());
                auto& sig = sigs[v];
                sig.push_back(colors[v]);
                for (const auto& it : items) {
                    sig.push_back(static_cast<int>(it.size()));
                    sig.insert(sig.end(), it.begin(), it.end());
                }
            }
            std::vector<std::vector<int>> distinct = sigs;
            std::sort(distinct.begin(), distinct.end());
            distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
            for (int v = 0; v < n_; ++v)
                colors[v] = static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), sigs[v]) -
                                             distinct.begin());
            const int now = static_cast<int>(distinct.size());
            if (now == classes)
                return;
            classes = now;
        }
    }

    static int count_classes(const std::vector<int>& colors)
    {
        std::vector<int> c = colors;
        std::sort(c.begin(), c.end());
        return static_cast<int>(std::unique(c.begin(), c.end()) - c.begin());
    }

    // True when swapping u and v (same sort) is an automorphism.
    bool twins(int u, int v) const
    {
        const int sort = sort_of_[u];
        const int iu = u - offset_[sort];
        const int iv = v - offset_[sort];
        auto swapped = [&](int rel, const Tuple& t) {
            const auto& prof = s_.sig().relation(rel).profile;
            Tuple out = t;
            for (std::size_t k = 0; k < t.size(); ++k) {
                if (prof[k] != sort)
                    continue;
                if (t[k] == iu)
                    out[k] = iv;
                else if (t[k] == iv)
                    out[k] = iu;
            }
            return out;
        };
        for (const auto* list : {&occ_[u], &occ_[v]})
            for (const auto& o : *list)
                if (!s_.holds(o.rel, swapped(o.rel, s_.table(o.rel)[o.tuple])))
                    return false;
        return true;
    }

    void search(const std::vector<int>& colors)
    {
        budget::check();
        // first non-singleton cell (smallest colour)
        std::vector<int> cell_size(n_ + 1, 0);
        for (int c : colors)
            ++cell_size[c];
        int target = -1;
        for (int c = 0; c <= n_; ++c)
            if (cell_size[c] > 1) {
                target = c;
                break;
            }
        if (target < 0) {
            leaf(colors);
            return;
        }
        std::vector<int> reps;
        for (int v = 0; v < n_; ++v) {
            if (colors[v] != target)
                continue;
            bool pruned = false;
            for (int r : reps)
                if (twins(r, v)) {
                    pruned = true;
                    break;
                }
            if (pruned)
                continue;
            reps.push_back(v);
            std::vector<int> next(n_);
            for (int w = 0; w < n_; ++w)
                next[w] = 2 * colors[w] + 1;
            next[v] = 2 * colors[v];
            refine(next);
            search(next);
        }
    }

    void leaf(const std::vector<int>& colors)
    {
        // colours are a permutation of 0..n-1 with sorts occupying consecutive ranges
        std::vector<int> label(n_);
        for (int v = 0; v < n_; ++v)
            label[v] = colors[v] - offset_[sort_of_[v]];
        std::vector<int> code;
        for (int k = 0; k + 1 < static_cast<int>(offset_.size()); ++k)
            code.push_back(s_.size(k));
        for (int r = 0; r < s_.sig().relation_count(); ++r) {
            const auto& prof = s_.sig().relation(r).profile;
            std::vector<Tuple> rows;
            for (const auto& t : s_.table(r)) {
                Tuple row(t.size());
                for (std::size_t k = 0; k < t.size(); ++k)
                    row[k] = label[global(prof[k], t[k])];
                rows.push_back(std::move(row));
            }
            std::sort(rows.begin(), rows.end());
            code.push_back(-1 - static_cast<int>(rows.size()));
            for (const auto& row : rows)
                code.insert(code.end(), row.begin(), row.end());
        }
        if (!have_best_ || code < best_) {
            best_ = std::move(code);
            best_labels_ = label;
            have_best_ = true;
        }
    }

    const FinStructure& s_;
    int n_ = 0;
    std::vector<int> offset_;
    std::vector<int> sort_of_;
    std::vector<std::vector<Occurrence>> occ_;
    bool have_best_ = false;
    std::vector<int> best_;
    std::vector<int> best_labels_;
};

} // namespace

CanonicalCode canonical_form(const FinStructure& s)
{
    Canonizer c(s);
    c.run();
    std::string bytes;
    for (int x : c.best()) {
        const auto u = static_cast<std::uint32_t>(x);
        for (int k = 0; k < 4; ++k)
            bytes.push_back(static_cast<char>((u >> (8 * (3 - k))) & 0xff));
    }
    return CanonicalCode(std::move(bytes));
}

FinStructure canonical_representative(const FinStructure& s)
{
    Canonizer c(s);
    const std::vector<int> labels = c.run();
    std::vector<int> offset{0};
    for (int k = 0; k < static_cast<int>(s.sizes().size()); ++k)
        offset.push_back(offset.back() + s.size(k));
    std::vector<std::vector<Tuple>> tables(s.sig().relation_count());
    for (int r = 0; r < s.sig().relation_count(); ++r) {
        const auto& prof = s.sig().relation(r).profile;
        for (const auto& t : s.table(r)) {
            Tuple row(t.size());
            for (std::size_t k = 0; k < t.size(); ++k)
                row[k] = labels[offset[prof[k]] + t[k]];
            tables[r].push_back(std::move(row));
        }
    }
    return FinStructure(s.sig_ptr(), s.sizes(), std::move(tables));
}

} // namespace forge
