#include "forge/construct.hpp"

#include "forge/error.hpp"

#include <algorithm>
#include <set>

namespace forge {

Substructure induced_substructure(const FinStructure& s, const std::vector<Elem>& subset)
{
    const int sorts = static_cast<int>(s.sizes().size());
    std::vector<std::vector<int>> chosen(sorts);
    for (const auto& e : subset) {
        if (!s.contains(e))
            throw Error("induced_substructure: unknown element " + to_string(e));
        chosen[e.sort].push_back(e.id);
    }
    std::vector<std::vector<int>> newid(sorts);
    std::vector<int> sizes(sorts);
    Embedding inc;
    inc.map.resize(sorts);
    for (int k = 0; k < sorts; ++k) {
        auto& c = chosen[k];
        std::sort(c.begin(), c.end());
        c.erase(std::unique(c.begin(), c.end()), c.end());
        newid[k].assign(s.size(k), -1);
        for (int i = 0; i < static_cast<int>(c.size()); ++i)
            newid[k][c[i]] = i;
        sizes[k] = static_cast<int>(c.size());
        inc.map[k] = c;
    }
    std::vector<std::vector<Tuple>> tables(s.sig().relation_count());
    for (int r = 0; r < s.sig().relation_count(); ++r) {
        const auto& prof = s.sig().relation(r).profile;
        std::size_t candidates = 1;
        for (int p : prof)
            candidates *= chosen[p].size();
        if (candidates < s.table(r).size()) {
            Tuple t(prof.size());
            Tuple row(prof.size(), 0);
            for (std::size_t n = 0; n < candidates; ++n) {
                for (std::size_t i = 0; i < prof.size(); ++i)
                    t[i] = chosen[prof[i]][row[i]];
                if (s.holds(r, t))
                    tables[r].push_back(row);
                for (std::size_t i = prof.size(); i-- > 0;) {
                    if (++row[i] < static_cast<int>(chosen[prof[i]].size()))
                        break;
                    row[i] = 0;
                }
            }
            continue;
        }
        for (const auto& t : s.table(r)) {
            Tuple row(t.size());
            bool inside = true;
            for (std::size_t i = 0; i < t.size() && inside; ++i) {
                row[i] = newid[prof[i]][t[i]];
                inside = row[i] >= 0;
            }
            if (inside)
                tables[r].push_back(std::move(row));
        }
    }
    return {FinStructure(s.sig_ptr(), sizes, std::move(tables)), std::move(inc)};
}

Amalgam free_amalgam(const FinStructure& b, const FinStructure& c, const FinStructure& a, const Embedding& e,
                     const Embedding& f)
{
    if (!is_embedding(a, b, e) || !is_embedding(a, c, f))
        throw Error("free_amalgam: invalid embeddings");
    const int sorts = static_cast<int>(b.sizes().size());
    Amalgam out;
    out.g = Embedding::identity(b.sizes());
    out.h.map.resize(sorts);
    std::vector<int> sizes = b.sizes();
    for (int k = 0; k < sorts; ++k) {
        std::vector<int> preimage(c.size(k), -1);
        for (int x = 0; x < a.size(k); ++x)
            preimage[f.map[k][x]] = x;
        for (int y = 0; y < c.size(k); ++y)
            out.h.map[k].push_back(preimage[y] >= 0 ? e.map[k][preimage[y]] : sizes[k]++);
    }
    std::vector<std::vector<Tuple>> tables(b.sig().relation_count());
    for (int r = 0; r < b.sig().relation_count(); ++r) {
        const auto& prof = b.sig().relation(r).profile;
        tables[r] = b.table(r);
        for (const auto& t : c.table(r)) {
            Tuple row(t.size());
            for (std::size_t i = 0; i < t.size(); ++i)
                row[i] = out.h.map[prof[i]][t[i]];
            tables[r].push_back(std::move(row));
        }
    }
    out.d = FinStructure(b.sig_ptr(), sizes, std::move(tables));
    return out;
}

bool satisfies_sap_condition(const FinStructure& a, const Amalgam& am, const Embedding& e, const Embedding& f)
{
    if (am.g.compose(e) != am.h.compose(f))
        return false;
    for (std::size_t k = 0; k < am.g.map.size(); ++k) {
        std::set<int> gi(am.g.map[k].begin(), am.g.map[k].end());
        std::set<int> ge;
        for (int x = 0; x < a.size(static_cast<int>(k)); ++x)
            ge.insert(am.g.map[k][e.map[k][x]]);
        for (int y : am.h.map[k])
            if (gi.count(y) && !ge.count(y))
                return false;
    }
    return true;
}

Quotient quotient(const FinStructure& s, std::string_view equivalence)
{
    const auto& sig = s.sig();
    const int er = sig.relation_index(equivalence);
    const auto& esym = sig.relation(er);
    if (esym.arity() != 2 || esym.profile[0] != esym.profile[1])
        throw Error("quotient: '" + esym.name + "' is not a binary relation on one sort");
    const int sort = esym.profile[0];
    const int n = s.size(sort);
    auto related = [&](int x, int y) { return s.holds(er, Tuple{x, y}); };
    for (int x = 0; x < n; ++x) {
        if (!related(x, x))
            throw Error("quotient: '" + esym.name + "' is not reflexive at " + std::to_string(x));
        for (int y = 0; y < n; ++y) {
            if (related(x, y) && !related(y, x))
                throw Error("quotient: '" + esym.name + "' is not symmetric at (" + std::to_string(x) + "," +
                            std::to_string(y) + ")");
            if (!related(x, y))
                continue;
            for (int z = 0; z < n; ++z)
                if (related(y, z) && !related(x, z))
                    throw Error("quotient: '" + esym.name + "' is not transitive at (" + std::to_string(x) + "," +
                                std::to_string(y) + "," + std::to_string(z) + ")");
        }
    }
    std::vector<int> cls(n, -1);
    int classes = 0;
    for (int x = 0; x < n; ++x) {
        if (cls[x] >= 0)
            continue;
        for (int y = x; y < n; ++y)
            if (related(x, y))
                cls[y] = classes;
        ++classes;
    }
    auto show = [](const Tuple& t) {
        std::string out = "(";
        for (std::size_t i = 0; i < t.size(); ++i)
            out += (i ? "," : "") + std::to_string(t[i]);
        return out + ")";
    };
    for (int r = 0; r < sig.relation_count(); ++r) {
        if (r == er)
            continue;
        const auto& prof = sig.relation(r).profile;
        for (const auto& t : s.table(r))
            for (std::size_t i = 0; i < t.size(); ++i) {
                if (prof[i] != sort)
                    continue;
                for (int y = 0; y < n; ++y) {
                    if (y == t[i] || cls[y] != cls[t[i]])
                        continue;
                    Tuple moved = t;
                    moved[i] = y;
                    if (!s.holds(r, moved))
                        throw Error("quotient: relation '" + sig.relation(r).name + "' is not " + esym.name +
                                    "-invariant: " + show(t) + " holds but " + show(moved) + " does not");
                }
            }
    }
    std::vector<RelationDecl> decls;
    for (int r = 0; r < sig.relation_count(); ++r)
        if (r != er)
            decls.push_back(sig.decl(r));
    Signature qsig(sig.sorts(), decls);
    std::vector<int> sizes = s.sizes();
    sizes[sort] = classes;
    Quotient out;
    out.projection.resize(sizes.size());
    for (int k = 0; k < static_cast<int>(sizes.size()); ++k) {
        if (k == sort)
            out.projection[k] = cls;
        else
            for (int x = 0; x < s.size(k); ++x)
                out.projection[k].push_back(x);
    }
    std::vector<std::vector<Tuple>> tables;
    for (int r = 0; r < sig.relation_count(); ++r) {
        if (r == er)
            continue;
        const auto& prof = sig.relation(r).profile;
        std::vector<Tuple> rows;
        for (const auto& t : s.table(r)) {
            Tuple row(t.size());
            for (std::size_t i = 0; i < t.size(); ++i)
                row[i] = out.projection[prof[i]][t[i]];
            rows.push_back(std::move(row));
        }
        tables.push_back(std::move(rows));
    }
    out.structure = FinStructure(std::move(qsig), sizes, std::move(tables));
    return out;
}

} // namespace forge
