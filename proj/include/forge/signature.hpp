#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace forge {

inline constexpr int kMaxArity = 4;

enum RelationFlag : unsigned {
    kSymmetric = 1u << 0,
    kReflexive = 1u << 1,
    kIrreflexive = 1u << 2,
};

// Relation declaration by sort name, as read from files or written by hand.
struct RelationDecl {
    std::string name;
    std::vector<std::string> profile;
    unsigned flags = 0;
};

struct RelationSymbol {
    std::string name;
    std::vector<int> profile; // sort indices
    unsigned flags = 0;

    [[nodiscard]] int arity() const { return static_cast<int>(profile.size()); }
    [[nodiscard]] bool has(RelationFlag f) const { return (flags & f) != 0; }
    bool operator==(const RelationSymbol&) const = default;
};

// Ordered sorts and relation symbols. Validated on construction; immutable afterwards.
class Signature {
public:
    Signature() = default;
    Signature(std::vector<std::string> sorts, const std::vector<RelationDecl>& relations);

    // Single sort named "U".
    static Signature single_sorted(const std::vector<RelationDecl>& relations);

    [[nodiscard]] int sort_count() const { return static_cast<int>(sorts_.size()); }
    [[nodiscard]] int relation_count() const { return static_cast<int>(relations_.size()); }
    [[nodiscard]] const std::string& sort_name(int s) const { return sorts_.at(s); }
    [[nodiscard]] const std::vector<std::string>& sorts() const { return sorts_; }
    [[nodiscard]] const RelationSymbol& relation(int r) const { return relations_.at(r); }
    [[nodiscard]] const std::vector<RelationSymbol>& relations() const { return relations_; }

    // -1 when absent.
    [[nodiscard]] int find_sort(std::string_view name) const;
    [[nodiscard]] int find_relation(std::string_view name) const;
    // Throw forge::Error when absent.
    [[nodiscard]] int sort_index(std::string_view name) const;
    [[nodiscard]] int relation_index(std::string_view name) const;

    [[nodiscard]] RelationDecl decl(int r) const;
    [[nodiscard]] std::vector<RelationDecl> decls() const;

    bool operator==(const Signature&) const = default;

private:
    std::vector<std::string> sorts_;
    std::vector<RelationSymbol> relations_;
};

[[nodiscard]] std::string flag_name(RelationFlag f);
[[nodiscard]] unsigned parse_flag(std::string_view name);

} // namespace forge
