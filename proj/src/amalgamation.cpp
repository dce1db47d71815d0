#include "forge/amalgamation.hpp"

#include "forge/budget.hpp"
#include "forge/embedding.hpp"
#include "forge/error.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace forge {

namespace {

struct Checkpoint {
    bool built = false;
    AtomSpace space;
    bool started = false;
    std::vector<char> bits;
    std::vector<char> flips;
    std::set<int> conflicts;
};

class CompletionSearch {
public:
    CompletionSearch(const ClassPresentation& k, StructureBuilder& d, const CompletionProblem& p,
                     const CompletionPolicy& policy)
        : k_(k), d_(d), p_(p), policy_(policy), L_(static_cast<int>(p.left.size())),
          R_(static_cast<int>(p.right.size()))
    {
        const int sorts = d.sig().sort_count();
        role_.assign(sorts, {});
        for (int s = 0; s < sorts; ++s)
            role_[s].assign(d.size(s), kOutside);
        for (const Elem& e : p.shared)
            role_[e.sort][e.id] = kShared;
        for (int i = 0; i < L_; ++i)
            role_[p.left[i].sort][p.left[i].id] = i;
        for (int k2 = 0; k2 < R_; ++k2)
            role_[p.right[k2].sort][p.right[k2].id] = kRightBase - k2;
        for (const auto& h : k.generation_helpers())
            if (helper_is_local(h))
                local_.push_back(h);
    }

    bool run()
    {
        const int n = L_ * R_;
        if (n == 0)
            return true;
        cps_.assign(n, {});
        int at = 0;
        while (at >= 0 && at < n) {
            Checkpoint& cp = cps_[at];
            if (!cp.built)
                build(at);
            if (advance(at)) {
                const std::vector<Elem> viol = check(at);
                if (viol.empty()) {
                    ++at;
                    if (at < n) {
                        cps_[at].started = false;
                        cps_[at].conflicts.clear();
                    }
                } else {
                    for (int c : conflict_set(viol))
                        if (c < at)
                            cp.conflicts.insert(c);
                }
                continue;
            }
            // exhausted: jump back to the latest culprit
            clear(at);
            if (cp.conflicts.empty()) {
                for (int j = at - 1; j >= 0; --j)
                    clear(j);
                return false;
            }
            const int back = *cp.conflicts.rbegin();
            std::set<int> carry = cp.conflicts;
            carry.erase(back);
            for (int j = back + 1; j <= at; ++j) {
                clear(j);
                cps_[j].started = false;
                cps_[j].conflicts.clear();
            }
            cps_[back].conflicts.insert(carry.begin(), carry.end());
            at = back;
        }
        return true;
    }

private:
    static constexpr int kOutside = -1000000000;
    static constexpr int kShared = -1;
    static constexpr int kRightBase = -2;

    int left_index(const Elem& e) const
    {
        const int r = role_[e.sort][e.id];
        return r >= 0 ? r : -1;
    }
    int right_index(const Elem& e) const
    {
        const int r = role_[e.sort][e.id];
        return (r <= kRightBase && r != kOutside) ? kRightBase - r : -1;
    }

    void build(int at)
    {
        const int kk = at / L_;
        const int ii = at % L_;
        std::vector<Elem> pool = p_.shared;
        pool.insert(pool.end(), p_.left.begin(), p_.left.begin() + ii + 1);
        pool.insert(pool.end(), p_.right.begin(), p_.right.begin() + kk + 1);
        const std::vector<Elem> must{p_.right[kk], p_.left[ii]};
        std::vector<Atom> cand;
        for (int r = 0; r < d_.sig().relation_count(); ++r)
            for_each_tuple_using(d_.sig(), r, pool, must, [&](const Tuple& t) { cand.push_back({r, t}); });
        cps_[at].space = build_atom_space(local_, std::move(cand));
        cps_[at].built = true;
    }

    void set_var(const AtomVariable& v, bool value)
    {
        for (const auto& a : v.atoms)
            d_.set(a.rel, a.tuple, value);
    }

    // Moves to the next assignment of the checkpoint's variables and applies it.
    bool advance(int at)
    {
        Checkpoint& cp = cps_[at];
        const std::size_t m = cp.space.vars.size();
        if (cp.space.infeasible)
            return false;
        if (!cp.started) {
            cp.started = true;
            cp.bits.assign(m, 0);
            cp.flips.assign(m, 0);
            if (policy_.rng)
                for (std::size_t v = 0; v < m; ++v)
                    cp.flips[v] = static_cast<char>((*policy_.rng)() & 1);
            for (const auto& a : cp.space.forced_true)
                d_.set(a.rel, a.tuple, true);
        } else {
            std::size_t v = m;
            while (v > 0) {
                --v;
                if (cp.bits[v] == 0) {
                    cp.bits[v] = 1;
                    break;
                }
                cp.bits[v] = 0;
                if (v == 0)
                    return false;
            }
            if (m == 0)
                return false;
        }
        budget::check();
        for (std::size_t v = 0; v < m; ++v)
            set_var(cp.space.vars[v], (cp.bits[v] ^ cp.flips[v]) != 0);
        return true;
    }

    void clear(int at)
    {
        Checkpoint& cp = cps_[at];
        if (!cp.built)
            return;
        for (const auto& v : cp.space.vars)
            set_var(v, false);
        for (const auto& a : cp.space.forced_true)
            d_.set(a.rel, a.tuple, false);
    }

    std::vector<Elem> check(int at)
    {
        const int kk = at / L_;
        const int ii = at % L_;
        std::vector<std::vector<char>> allowed(role_.size());
        for (std::size_t s = 0; s < role_.size(); ++s) {
            allowed[s].assign(role_[s].size(), 0);
            for (std::size_t id = 0; id < role_[s].size(); ++id) {
                const int r = role_[s][id];
                if (r == kShared || (r >= 0 && r <= ii) || (r <= kRightBase && r != kOutside && kRightBase - r <= kk))
                    allowed[s][id] = 1;
            }
        }
        return anchored_violation(k_, d_, {p_.right[kk], p_.left[ii]}, allowed, true);
    }

    std::vector<int> conflict_set(const std::vector<Elem>& image) const
    {
        std::vector<int> ls, rs, out;
        for (const Elem& e : image) {
            if (const int l = left_index(e); l >= 0)
                ls.push_back(l);
            if (const int r = right_index(e); r >= 0)
                rs.push_back(r);
        }
        for (int r : rs)
            for (int l : ls)
                out.push_back(r * L_ + l);
        return out;
    }

    const ClassPresentation& k_;
    StructureBuilder& d_;
    const CompletionProblem& p_;
    CompletionPolicy policy_;
    int L_;
    int R_;
    std::vector<std::vector<int>> role_;
    std::vector<Helper> local_;
    std::vector<Checkpoint> cps_;
};

std::vector<std::vector<int>> image_sets(const Embedding& e, const std::vector<int>& target_sizes)
{
    std::vector<std::vector<int>> used(target_sizes.size());
    for (std::size_t s = 0; s < target_sizes.size(); ++s)
        used[s].assign(target_sizes[s], 0);
    for (std::size_t s = 0; s < e.map.size(); ++s)
        for (int t : e.map[s])
            used[s][t] = 1;
    return used;
}

void validate(const AmalgamationConfig& cfg)
{
    if (!is_embedding(cfg.a, cfg.b, cfg.e) || !is_embedding(cfg.a, cfg.c, cfg.f))
        throw Error("amalgamation configuration with invalid embeddings");
}

// Builds the skeleton of B ⊔ C glued along A and along `glue` (C point -> B point).
// Returns false when the glued atoms disagree.
bool skeleton(const AmalgamationConfig& cfg, const std::map<Elem, Elem>& glue, StructureBuilder& d, Embedding& h,
              CompletionProblem& prob)
{
    const auto in_a = image_sets(cfg.f, cfg.c.sizes());
    const auto b_in_a = image_sets(cfg.e, cfg.b.sizes());
    const int sorts = cfg.b.sig().sort_count();
    h.map.assign(sorts, {});
    for (int s = 0; s < sorts; ++s)
        h.map[s].assign(cfg.c.size(s), -1);
    // A points map through e∘f⁻¹
    for (int s = 0; s < sorts; ++s)
        for (int id = 0; id < cfg.a.size(s); ++id)
            h.map[s][cfg.f(s, id)] = cfg.e(s, id);
    std::vector<std::vector<char>> glued_b(sorts);
    for (int s = 0; s < sorts; ++s)
        glued_b[s].assign(cfg.b.size(s), 0);
    for (const auto& [from, to] : glue) {
        h.map[from.sort][from.id] = to.id;
        glued_b[to.sort][to.id] = 1;
    }
    for (int s = 0; s < sorts; ++s)
        for (int id = 0; id < cfg.c.size(s); ++id)
            if (h.map[s][id] < 0) {
                h.map[s][id] = d.add_element(s);
                prob.right.push_back({s, id});
            }
    for (auto& e : prob.right)
        e = {e.sort, h.map[e.sort][e.id]};
    for (int s = 0; s < sorts; ++s)
        for (int id = 0; id < cfg.b.size(s); ++id) {
            if (b_in_a[s][id] || glued_b[s][id])
                prob.shared.push_back({s, id});
            else
                prob.left.push_back({s, id});
        }
    // C's atoms; those inside the B part must agree with B.
    const Signature& sig = cfg.c.sig();
    for (int r = 0; r < sig.relation_count(); ++r) {
        const auto& prof = sig.relation(r).profile;
        bool ok = true;
        for_each_tuple(prof, cfg.c.sizes(), [&](const Tuple& t) {
            if (!ok)
                return;
            Tuple u(t.size());
            bool inside_b = true;
            for (std::size_t p = 0; p < t.size(); ++p) {
                u[p] = h.map[prof[p]][t[p]];
                inside_b = inside_b && u[p] < cfg.b.size(prof[p]);
            }
            const bool v = cfg.c.holds(r, t);
            if (inside_b) {
                ok = cfg.b.holds(r, u) == v;
            } else if (v) {
                d.set(r, u, true);
            }
        });
        if (!ok)
            return false;
    }
    (void)in_a;
    return true;
}

// Representatives of Emb(A, B) modulo post-composition with Aut(B).
std::vector<Embedding> orbit_representatives(const FinStructure& a, const FinStructure& b,
                                             const std::vector<Embedding>& aut_b)
{
    std::vector<Embedding> out;
    for (const auto& e : enumerate_embeddings(a, b)) {
        bool least = true;
        for (const auto& sigma : aut_b) {
            if (sigma.compose(e) < e) {
                least = false;
                break;
            }
        }
        if (least)
            out.push_back(e);
    }
    return out;
}

} // namespace

bool complete_cross_atoms(const ClassPresentation& k, StructureBuilder& d, const CompletionProblem& problem,
                          const CompletionPolicy& policy)
{
    return CompletionSearch(k, d, problem, policy).run();
}

std::optional<Amalgam> find_amalgam(const ClassPresentation& k, const AmalgamationConfig& cfg, bool strong)
{
    validate(cfg);
    auto attempt = [&](const std::map<Elem, Elem>& glue) -> std::optional<Amalgam> {
        StructureBuilder d(cfg.b);
        Embedding h;
        CompletionProblem prob;
        if (!skeleton(cfg, glue, d, h, prob))
            return std::nullopt;
        if (!complete_cross_atoms(k, d, prob))
            return std::nullopt;
        Amalgam am{d.build(), Embedding::identity(cfg.b.sizes()), h};
        return am;
    };
    if (auto am = attempt({}))
        return am;
    if (strong)
        return std::nullopt;

    const auto in_a_c = image_sets(cfg.f, cfg.c.sizes());
    const auto in_a_b = image_sets(cfg.e, cfg.b.sizes());
    std::vector<Elem> c_only, b_only;
    for (const Elem& x : cfg.c.elements())
        if (!in_a_c[x.sort][x.id])
            c_only.push_back(x);
    for (const Elem& x : cfg.b.elements())
        if (!in_a_b[x.sort][x.id])
            b_only.push_back(x);
    std::map<Elem, Elem> glue;
    std::vector<char> b_used(b_only.size(), 0);
    std::optional<Amalgam> found;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (found)
            return;
        if (i == c_only.size()) {
            if (!glue.empty())
                found = attempt(glue);
            return;
        }
        rec(i + 1);
        for (std::size_t j = 0; j < b_only.size() && !found; ++j) {
            if (b_used[j] || b_only[j].sort != c_only[i].sort)
                continue;
            b_used[j] = 1;
            glue[c_only[i]] = b_only[j];
            rec(i + 1);
            glue.erase(c_only[i]);
            b_used[j] = 0;
        }
    };
    rec(0);
    return found;
}

bool brute_force_strong_amalgam_exists(const ClassPresentation& k, const AmalgamationConfig& cfg)
{
    validate(cfg);
    StructureBuilder d(cfg.b);
    Embedding h;
    CompletionProblem prob;
    if (!skeleton(cfg, {}, d, h, prob))
        return false;
    std::vector<Elem> pool = prob.shared;
    pool.insert(pool.end(), prob.left.begin(), prob.left.end());
    pool.insert(pool.end(), prob.right.begin(), prob.right.end());
    std::vector<Atom> cross;
    const Signature& sig = cfg.b.sig();
    for (int r = 0; r < sig.relation_count(); ++r) {
        const auto& prof = sig.relation(r).profile;
        std::vector<int> sizes;
        for (int s = 0; s < sig.sort_count(); ++s)
            sizes.push_back(d.size(s));
        for_each_tuple(prof, sizes, [&](const Tuple& t) {
            bool has_left = false, has_right = false;
            for (std::size_t p = 0; p < t.size(); ++p) {
                const Elem e{prof[p], t[p]};
                has_left = has_left || std::find(prob.left.begin(), prob.left.end(), e) != prob.left.end();
                has_right = has_right || std::find(prob.right.begin(), prob.right.end(), e) != prob.right.end();
            }
            if (has_left && has_right)
                cross.push_back({r, t});
        });
    }
    if (cross.size() > 24)
        throw BudgetExceeded("brute-force amalgam check over " + std::to_string(cross.size()) + " cross atoms");
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << cross.size()); ++mask) {
        budget::check();
        bool flags_ok = true;
        for (std::size_t i = 0; i < cross.size(); ++i)
            d.set(cross[i].rel, cross[i].tuple, ((mask >> i) & 1) != 0);
        FinStructure full = [&]() -> FinStructure {
            try {
                return d.build();
            } catch (const Error&) {
                flags_ok = false;
                return FinStructure();
            }
        }();
        if (flags_ok && class_membership(k, full))
            return true;
    }
    return false;
}

AmalgamationReport check_amalgamation(const ClassPresentation& k, int n, bool strong)
{
    AmalgamationReport report;
    report.strong = strong;
    report.bound = n;
    // The empty structure joins the age here so that joint embedding is covered.
    auto age = enumerate_age(k, n);
    FinStructure empty(k.sig_ptr(), std::vector<int>(k.sig().sort_count(), 0),
                       std::vector<std::vector<Tuple>>(k.sig().relation_count()));
    if (class_membership(k, empty))
        age.insert(age.begin(), AgeEntry{canonical_form(empty), std::move(empty)});
    std::vector<std::vector<Embedding>> auts;
    for (const auto& t : age)
        auts.push_back(automorphisms(t.structure));

    struct Triple {
        int a, b, c;
    };
    std::vector<Triple> triples;
    const int m = static_cast<int>(age.size());
    for (int b = 0; b < m; ++b)
        for (int c = b; c < m; ++c)
            for (int a = 0; a < m; ++a) {
                const int sa = age[a].structure.total_size();
                if (sa <= std::min(age[b].structure.total_size(), age[c].structure.total_size()))
                    triples.push_back({a, b, c});
            }
    auto key = [&](const Triple& t) {
        const int sb = age[t.b].structure.total_size();
        const int sc = age[t.c].structure.total_size();
        return std::make_tuple(std::max(sb, sc), sb + sc, age[t.a].structure.total_size(), t.b, t.c, t.a);
    };
    std::stable_sort(triples.begin(), triples.end(), [&](const Triple& x, const Triple& y) { return key(x) < key(y); });

    std::map<std::pair<int, int>, std::vector<Embedding>> reps;
    auto reps_for = [&](int a, int b) -> const std::vector<Embedding>& {
        auto it = reps.find({a, b});
        if (it == reps.end())
            it = reps.emplace(std::make_pair(a, b), orbit_representatives(age[a].structure, age[b].structure, auts[b]))
                     .first;
        return it->second;
    };

    for (const auto& t : triples) {
        const auto& eb = reps_for(t.a, t.b);
        const auto& ec = reps_for(t.a, t.c);
        for (const auto& e : eb)
            for (const auto& f : ec) {
                budget::check();
                ++report.configurations;
                AmalgamationConfig cfg{age[t.a].structure, age[t.b].structure, age[t.c].structure, e, f};
                if (!find_amalgam(k, cfg, strong)) {
                    report.pass = false;
                    report.witness = cfg;
                    return report;
                }
            }
    }
    return report;
}

} // namespace forge
