#include "forge/signature.hpp"

#include "forge/error.hpp"

#include <set>

namespace forge {

Signature::Signature(std::vector<std::string> sorts, const std::vector<RelationDecl>& relations)
    : sorts_(std::move(sorts))
{
    std::set<std::string> seen;
    for (const auto& s : sorts_) {
        if (s.empty())
            throw Error("empty sort name");
        if (!seen.insert(s).second)
            throw Error("duplicate sort name '" + s + "'");
    }
    seen.clear();
    for (const auto& d : relations) {
        if (d.name.empty())
            throw Error("empty relation name");
        if (!seen.insert(d.name).second)
            throw Error("duplicate relation name '" + d.name + "'");
        if (d.profile.empty() || d.profile.size() > static_cast<std::size_t>(kMaxArity))
            throw Error("relation '" + d.name + "' must have arity 1.." + std::to_string(kMaxArity));
        RelationSymbol sym{d.name, {}, d.flags};
        for (const auto& p : d.profile) {
            const int s = find_sort(p);
            if (s < 0)
                throw Error("relation '" + d.name + "' uses undeclared sort '" + p + "'");
            sym.profile.push_back(s);
        }
        if (d.flags != 0 && (sym.arity() != 2 || sym.profile[0] != sym.profile[1]))
            throw Error("flags on relation '" + d.name + "' need a binary relation on one sort");
        if ((d.flags & kReflexive) && (d.flags & kIrreflexive))
            throw Error("relation '" + d.name + "' cannot be both reflexive and irreflexive");
        relations_.push_back(std::move(sym));
    }
}

Signature Signature::single_sorted(const std::vector<RelationDecl>& relations)
{
    return Signature({"U"}, relations);
}

int Signature::find_sort(std::string_view name) const
{
    for (int i = 0; i < sort_count(); ++i)
        if (sorts_[i] == name)
            return i;
    return -1;
}

int Signature::find_relation(std::string_view name) const
{
    for (int i = 0; i < relation_count(); ++i)
        if (relations_[i].name == name)
            return i;
    return -1;
}

int Signature::sort_index(std::string_view name) const
{
    const int s = find_sort(name);
    if (s < 0)
        throw Error("unknown sort '" + std::string(name) + "'");
    return s;
}

int Signature::relation_index(std::string_view name) const
{
    const int r = find_relation(name);
    if (r < 0)
        throw Error("unknown relation '" + std::string(name) + "'");
    return r;
}

RelationDecl Signature::decl(int r) const
{
    const auto& sym = relation(r);
    RelationDecl d{sym.name, {}, sym.flags};
    for (int s : sym.profile)
        d.profile.push_back(sorts_[s]);
    return d;
}

std::vector<RelationDecl> Signature::decls() const
{
    std::vector<RelationDecl> out;
    for (int r = 0; r < relation_count(); ++r)
        out.push_back(decl(r));
    return out;
}

std::string flag_name(RelationFlag f)
{
    switch (f) {
    case kSymmetric: return "symmetric";
    case kReflexive: return "reflexive";
    case kIrreflexive: return "irreflexive";
    }
    return "?";
}

unsigned parse_flag(std::string_view name)
{
    if (name == "symmetric")
        return kSymmetric;
    if (name == "reflexive")
        return kReflexive;
    if (name == "irreflexive")
        return kIrreflexive;
    throw Error("unknown relation flag '" + std::string(name) + "'");
}

} // namespace forge
