#include "forge/structure.hpp"

#include "forge/error.hpp"

#include <algorithm>

namespace forge {

std::string to_string(const Elem& e) { return std::to_string(e.sort) + ":" + std::to_string(e.id); }

FinStructure::FinStructure(Signature sig)
    : FinStructure(std::make_shared<const Signature>(std::move(sig)), {}, {})
{
}

FinStructure::FinStructure(Signature sig, std::vector<int> sizes, std::vector<std::vector<Tuple>> tables)
    : FinStructure(std::make_shared<const Signature>(std::move(sig)), std::move(sizes), std::move(tables))
{
}

FinStructure::FinStructure(std::shared_ptr<const Signature> sig, std::vector<int> sizes,
                           std::vector<std::vector<Tuple>> tables)
    : sig_(std::move(sig)), sizes_(std::move(sizes)), tables_(std::move(tables))
{
    if (sizes_.empty())
        sizes_.assign(sig_->sort_count(), 0);
    if (tables_.empty())
        tables_.assign(sig_->relation_count(), {});
    normalize_and_validate();
}

void FinStructure::normalize_and_validate()
{
    const auto& sig = *sig_;
    if (static_cast<int>(sizes_.size()) != sig.sort_count())
        throw Error("universe has " + std::to_string(sizes_.size()) + " sorts, signature has " +
                    std::to_string(sig.sort_count()));
    for (int s : sizes_)
        if (s < 0 || s > kMaxElementsPerSort)
            throw Error("sort size out of range");
    if (static_cast<int>(tables_.size()) != sig.relation_count())
        throw Error("table count does not match signature");
    keys_.assign(tables_.size(), {});
    for (int r = 0; r < sig.relation_count(); ++r) {
        const auto& sym = sig.relation(r);
        auto& table = tables_[r];
        for (const auto& t : table) {
            if (static_cast<int>(t.size()) != sym.arity())
                throw Error("tuple of wrong arity in relation '" + sym.name + "'");
            for (int i = 0; i < sym.arity(); ++i)
                if (t[i] < 0 || t[i] >= sizes_[sym.profile[i]])
                    throw Error("tuple in relation '" + sym.name + "' references a missing element");
        }
        std::sort(table.begin(), table.end());
        table.erase(std::unique(table.begin(), table.end()), table.end());
        auto& keys = keys_[r];
        keys.reserve(table.size());
        for (const auto& t : table)
            keys.push_back(pack_tuple(t));
        std::sort(keys.begin(), keys.end());
    }
    for (int r = 0; r < sig.relation_count(); ++r) {
        const auto& sym = sig.relation(r);
        if (sym.has(kSymmetric))
            for (const auto& t : tables_[r])
                if (!holds(r, Tuple{t[1], t[0]}))
                    throw Error("relation '" + sym.name + "' is flagged symmetric but is not");
        if (sym.has(kIrreflexive))
            for (const auto& t : tables_[r])
                if (t[0] == t[1])
                    throw Error("relation '" + sym.name + "' is flagged irreflexive but is not");
        if (sym.has(kReflexive))
            for (int a = 0; a < sizes_[sym.profile[0]]; ++a)
                if (!holds(r, Tuple{a, a}))
                    throw Error("relation '" + sym.name + "' is flagged reflexive but is not");
    }
}

int FinStructure::total_size() const
{
    int n = 0;
    for (int s : sizes_)
        n += s;
    return n;
}

bool FinStructure::holds(int rel, std::span<const int> t) const
{
    const auto& keys = keys_[rel];
    return std::binary_search(keys.begin(), keys.end(), pack_tuple(t));
}

std::vector<Elem> FinStructure::elements() const
{
    std::vector<Elem> out;
    for (int s = 0; s < static_cast<int>(sizes_.size()); ++s)
        for (int i = 0; i < sizes_[s]; ++i)
            out.push_back({s, i});
    return out;
}

StructureBuilder::StructureBuilder(std::shared_ptr<const Signature> sig)
    : sig_(std::move(sig)), sizes_(sig_->sort_count(), 0), tables_(sig_->relation_count())
{
}

StructureBuilder::StructureBuilder(const FinStructure& base)
    : sig_(base.sig_ptr()), sizes_(base.sizes()), tables_(base.sig().relation_count())
{
    for (int r = 0; r < sig_->relation_count(); ++r)
        for (const auto& t : base.table(r))
            tables_[r].insert(pack_tuple(t));
}

int StructureBuilder::add_element(int sort)
{
    if (sizes_.at(sort) >= kMaxElementsPerSort)
        throw Error("too many elements in sort");
    return sizes_[sort]++;
}

void StructureBuilder::remove_last(int sort)
{
    const int last = sizes_.at(sort) - 1;
    if (last < 0)
        throw Error("remove_last on an empty sort");
    for (std::size_t r = 0; r < tables_.size(); ++r) {
        const auto& prof = sig_->relation(static_cast<int>(r)).profile;
        for (auto it = tables_[r].begin(); it != tables_[r].end();) {
            bool hit = false;
            for (std::size_t i = 0; i < prof.size(); ++i)
                hit = hit || (prof[i] == sort && static_cast<int>((*it >> (16 * i)) & 0xffff) == last);
            it = hit ? tables_[r].erase(it) : std::next(it);
        }
    }
    --sizes_[sort];
}

void StructureBuilder::set(int rel, std::span<const int> t, bool value)
{
    if (value)
        tables_.at(rel).insert(pack_tuple(t));
    else
        tables_.at(rel).erase(pack_tuple(t));
}

FinStructure StructureBuilder::build() const
{
    std::vector<std::vector<Tuple>> tables(tables_.size());
    for (std::size_t r = 0; r < tables_.size(); ++r) {
        const int arity = sig_->relation(static_cast<int>(r)).arity();
        for (std::uint64_t k : tables_[r]) {
            Tuple t(arity);
            for (int i = 0; i < arity; ++i)
                t[i] = static_cast<int>((k >> (16 * i)) & 0xffff);
            tables[r].push_back(std::move(t));
        }
    }
    return FinStructure(sig_, sizes_, std::move(tables));
}

Embedding Embedding::identity(const std::vector<int>& sizes)
{
    Embedding e;
    for (int n : sizes) {
        std::vector<int> m(n);
        for (int i = 0; i < n; ++i)
            m[i] = i;
        e.map.push_back(std::move(m));
    }
    return e;
}

Embedding Embedding::compose(const Embedding& inner) const
{
    Embedding out;
    out.map.resize(inner.map.size());
    for (std::size_t s = 0; s < inner.map.size(); ++s)
        for (int x : inner.map[s])
            out.map[s].push_back(map.at(s).at(x));
    return out;
}

bool is_embedding(const FinStructure& src, const FinStructure& dst, const Embedding& f)
{
    if (!(src.sig() == dst.sig()))
        return false;
    if (f.map.size() != src.sizes().size())
        return false;
    for (std::size_t s = 0; s < f.map.size(); ++s) {
        if (static_cast<int>(f.map[s].size()) != src.size(static_cast<int>(s)))
            return false;
        std::vector<char> used(dst.size(static_cast<int>(s)), 0);
        for (int x : f.map[s]) {
            if (x < 0 || x >= dst.size(static_cast<int>(s)) || used[x])
                return false;
            used[x] = 1;
        }
    }
    for (int r = 0; r < src.sig().relation_count(); ++r) {
        const auto& prof = src.sig().relation(r).profile;
        bool ok = true;
        for_each_tuple(prof, src.sizes(), [&](const Tuple& t) {
            if (!ok)
                return;
            Tuple img(t.size());
            for (std::size_t i = 0; i < t.size(); ++i)
                img[i] = f.map[prof[i]][t[i]];
            if (src.holds(r, t) != dst.holds(r, img))
                ok = false;
        });
        if (!ok)
            return false;
    }
    return true;
}

} // namespace forge
