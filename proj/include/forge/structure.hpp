#pragma once

#include "forge/signature.hpp"

#include <compare>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace forge {

using Tuple = std::vector<int>;

// An element reference: sort index plus dense per-sort id.
struct Elem {
    int sort = 0;
    int id = 0;
    auto operator<=>(const Elem&) const = default;
};

[[nodiscard]] std::string to_string(const Elem& e);

// Packs a tuple of ids (< 2^16, arity <= kMaxArity) into one lookup key.
[[nodiscard]] inline std::uint64_t pack_tuple(std::span<const int> t)
{
    std::uint64_t k = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
        k |= static_cast<std::uint64_t>(static_cast<std::uint16_t>(t[i])) << (16 * i);
    return k;
}

inline constexpr int kMaxElementsPerSort = 65535;

// A finite many-sorted relational structure. Element ids of sort s are 0..size(s)-1.
// Immutable after construction; copies share the signature.
class FinStructure {
public:
    FinStructure() : FinStructure(Signature{}) {}
    explicit FinStructure(Signature sig); // empty universe
    FinStructure(Signature sig, std::vector<int> sizes, std::vector<std::vector<Tuple>> tables);
    FinStructure(std::shared_ptr<const Signature> sig, std::vector<int> sizes,
                 std::vector<std::vector<Tuple>> tables);

    [[nodiscard]] const Signature& sig() const { return *sig_; }
    [[nodiscard]] const std::shared_ptr<const Signature>& sig_ptr() const { return sig_; }
    [[nodiscard]] int size(int sort) const { return sizes_.at(sort); }
    [[nodiscard]] const std::vector<int>& sizes() const { return sizes_; }
    [[nodiscard]] int total_size() const;
    [[nodiscard]] const std::vector<Tuple>& table(int rel) const { return tables_.at(rel); }
    [[nodiscard]] bool holds(int rel, std::span<const int> t) const;
    [[nodiscard]] bool contains(const Elem& e) const
    {
        return e.sort >= 0 && e.sort < static_cast<int>(sizes_.size()) && e.id >= 0 && e.id < sizes_[e.sort];
    }
    // All elements ordered by (sort, id).
    [[nodiscard]] std::vector<Elem> elements() const;

    bool operator==(const FinStructure& o) const
    {
        return *sig_ == *o.sig_ && sizes_ == o.sizes_ && tables_ == o.tables_;
    }

private:
    void normalize_and_validate();

    std::shared_ptr<const Signature> sig_;
    std::vector<int> sizes_;
    std::vector<std::vector<Tuple>> tables_;       // sorted, unique
    std::vector<std::vector<std::uint64_t>> keys_; // sorted packed tables
};

// Mutable counterpart used while growing structures during searches.
class StructureBuilder {
public:
    explicit StructureBuilder(std::shared_ptr<const Signature> sig);
    explicit StructureBuilder(const FinStructure& base);

    [[nodiscard]] const Signature& sig() const { return *sig_; }
    [[nodiscard]] int size(int sort) const { return sizes_.at(sort); }
    int add_element(int sort);
    // Drops the newest element of `sort` and every tuple mentioning it.
    void remove_last(int sort);
    [[nodiscard]] const std::vector<int>& sizes() const { return sizes_; }
    void set(int rel, std::span<const int> t, bool value);
    void add(int rel, const Tuple& t) { set(rel, t, true); }
    [[nodiscard]] bool holds(int rel, std::span<const int> t) const
    {
        return tables_[rel].count(pack_tuple(t)) != 0;
    }
    [[nodiscard]] FinStructure build() const;

private:
    std::shared_ptr<const Signature> sig_;
    std::vector<int> sizes_;
    std::vector<std::unordered_set<std::uint64_t>> tables_;
};

// Per-sort map from source ids to target ids.
struct Embedding {
    std::vector<std::vector<int>> map;

    [[nodiscard]] int operator()(int sort, int id) const { return map.at(sort).at(id); }
    [[nodiscard]] Elem operator()(const Elem& e) const { return {e.sort, map.at(e.sort).at(e.id)}; }
    bool operator==(const Embedding&) const = default;
    auto operator<=>(const Embedding&) const = default;

    [[nodiscard]] static Embedding identity(const std::vector<int>& sizes);
    // (this ∘ inner): first inner, then this.
    [[nodiscard]] Embedding compose(const Embedding& inner) const;
};

// True iff `f` is an injective, relation-preserving-and-reflecting map src -> dst.
[[nodiscard]] bool is_embedding(const FinStructure& src, const FinStructure& dst, const Embedding& f);

// Calls visit(tuple) for every tuple of ids matching `profile` over the given sizes.
template <class Visit>
void for_each_tuple(const std::vector<int>& profile, const std::vector<int>& sizes, Visit&& visit)
{
    const std::size_t n = profile.size();
    Tuple t(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        if (sizes[profile[i]] == 0)
            return;
    while (true) {
        visit(static_cast<const Tuple&>(t));
        std::size_t i = n;
        while (i > 0) {
            --i;
            if (++t[i] < sizes[profile[i]])
                break;
            t[i] = 0;
            if (i == 0)
                return;
        }
        if (n == 0)
            return;
    }
}

} // namespace forge
