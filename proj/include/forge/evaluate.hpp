#pragma once

#include "forge/formula.hpp"
#include "forge/structure.hpp"

#include <map>
#include <string>
#include <vector>

namespace forge {

// A unary predicate over a structure, one membership mask per sort.
class PredicateSet {
public:
    PredicateSet() = default;
    explicit PredicateSet(const std::vector<int>& sizes);
    PredicateSet(const std::vector<int>& sizes, const std::vector<Elem>& members);

    [[nodiscard]] bool contains(Elem e) const;
    void insert(Elem e);
    void erase(Elem e);
    [[nodiscard]] std::vector<int> ids(int sort) const;
    [[nodiscard]] std::vector<Elem> elements() const;
    [[nodiscard]] std::size_t count() const;
    [[nodiscard]] int sort_count() const { return static_cast<int>(mask_.size()); }
    // Grows the masks to new sizes; fresh elements start outside.
    void resize(const std::vector<int>& sizes);
    bool operator==(const PredicateSet&) const = default;

private:
    std::vector<std::vector<char>> mask_;
};

// Free variable name -> element id (the sort comes from the variable).
using Assignment = std::map<std::string, int>;

[[nodiscard]] bool evaluate(const FinStructure& s, const Formula& f, const Assignment& assignment,
                            const PredicateSet* h = nullptr);

// Ids e of x's sort with evaluate(f, assignment + {x -> e}) true, ascending.
[[nodiscard]] std::vector<int> realizations(const FinStructure& s, const Formula& f, const Variable& x,
                                            const Assignment& assignment, const PredicateSet* h = nullptr);

struct TypeFingerprint {
    std::vector<unsigned char> bytes;
    auto operator<=>(const TypeFingerprint&) const = default;
    [[nodiscard]] std::string hex() const;
};

// Atomic diagram of `tuple` over `base`: every relation and equality fact among
// tuple ∪ base that mentions at least one tuple position, with base elements named
// by id and tuple entries by position.
[[nodiscard]] TypeFingerprint qftp(const FinStructure& s, const std::vector<Elem>& tuple,
                                   const std::vector<Elem>& base);

// Number of single elements x of `a`'s sort with qftp(x/base) = qftp(a/base).
[[nodiscard]] int count_type_realizations(const FinStructure& s, Elem a, const std::vector<Elem>& base);

} // namespace forge
