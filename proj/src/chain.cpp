#include "forge/chain.hpp"

#include "forge/amalgamation.hpp"
#include "forge/budget.hpp"
#include "forge/construct.hpp"
#include "forge/error.hpp"

#include <algorithm>
#include <map>

namespace forge {

namespace {

std::string structure_key(const FinStructure& s)
{
    std::string key;
    for (int n : s.sizes())
        key += std::to_string(n) + ",";
    for (int r = 0; r < s.sig().relation_count(); ++r) {
        key += "|";
        for (const auto& t : s.table(r)) {
            for (int v : t)
                key += std::to_string(v) + ".";
            key += ";";
        }
    }
    return key;
}

template <class Target>
bool realizes_in(const Target& s, const Signature& sig, const ExtensionTask& task, Elem y)
{
    if (y.sort != task.sort || std::find(task.base.begin(), task.base.end(), y) != task.base.end())
        return false;
    bool ok = true;
    for (int r = 0; r < sig.relation_count() && ok; ++r)
        for_each_tuple_using(sig, r, task.base, {y}, [&](const Tuple& t) {
            if (!ok)
                return;
            Atom a{r, t};
            for (std::size_t p = 0; p < t.size(); ++p)
                if (sig.relation(r).profile[p] == y.sort && t[p] == y.id)
                    a.tuple[p] = -1;
            const bool want = std::binary_search(task.atoms.begin(), task.atoms.end(), a);
            if (s.holds(r, t) != want)
                ok = false;
        });
    return ok;
}

// Fisher-Yates with the raw generator output so the order is the same everywhere.
template <class T>
void shuffle_in_place(std::vector<T>& v, std::mt19937_64& rng)
{
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace

void for_each_subset(const FinStructure& s, int k, const std::function<void(const std::vector<Elem>&)>& visit)
{
    const auto elems = s.elements();
    const int n = static_cast<int>(elems.size());
    std::vector<Elem> cur;
    for (int size = 0; size <= std::min(k, n); ++size) {
        std::vector<int> idx(size);
        for (int i = 0; i < size; ++i)
            idx[i] = i;
        while (true) {
            budget::check();
            cur.clear();
            for (int i : idx)
                cur.push_back(elems[i]);
            visit(cur);
            int i = size - 1;
            while (i >= 0 && idx[i] == n - size + i)
                --i;
            if (i < 0)
                break;
            ++idx[i];
            for (int j = i + 1; j < size; ++j)
                idx[j] = idx[j - 1] + 1;
        }
    }
}

namespace {

std::vector<ExtensionCache::Local> local_extensions(const ClassPresentation& k, const FinStructure& sub)
{
    const Signature& sig = sub.sig();
    std::vector<Helper> local;
    for (const auto& h : k.generation_helpers())
        if (helper_is_local(h))
            local.push_back(h);
    std::vector<ExtensionCache::Local> out;
    for (int sort = 0; sort < sig.sort_count(); ++sort) {
        StructureBuilder b(sub);
        const int x = b.add_element(sort);
        std::vector<Elem> pool;
        for (int t = 0; t < sig.sort_count(); ++t)
            for (int id = 0; id < b.size(t); ++id)
                pool.push_back({t, id});
        std::vector<Atom> cand;
        for (int r = 0; r < sig.relation_count(); ++r)
            for_each_tuple_using(sig, r, pool, {{sort, x}}, [&](const Tuple& t) { cand.push_back({r, t}); });
        const AtomSpace space = build_atom_space(local, cand);
        if (space.infeasible)
            continue;
        if (space.vars.size() > 20)
            throw BudgetExceeded("one-point extensions over " + std::to_string(sub.total_size()) + " points have " +
                                 std::to_string(space.vars.size()) + " free atoms");
        for (const auto& a : space.forced_true)
            b.set(a.rel, a.tuple, true);
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << space.vars.size()); ++mask) {
            budget::check();
            for (std::size_t v = 0; v < space.vars.size(); ++v)
                for (const auto& a : space.vars[v].atoms)
                    b.set(a.rel, a.tuple, ((mask >> v) & 1) != 0);
            FinStructure ext = b.build();
            if (!anchored_violation(k, ext, {{sort, x}}, {}, true).empty())
                continue;
            ExtensionCache::Local le;
            le.sort = sort;
            for (int r = 0; r < sig.relation_count(); ++r) {
                const auto& prof = sig.relation(r).profile;
                for (const auto& row : ext.table(r)) {
                    bool mentions = false;
                    Tuple t = row;
                    for (std::size_t p = 0; p < row.size(); ++p)
                        if (prof[p] == sort && row[p] == x) {
                            mentions = true;
                            t[p] = -1;
                        }
                    if (mentions)
                        le.atoms.push_back({r, t});
                }
            }
            le.code = canonical_form(ext);
            out.push_back(std::move(le));
        }
    }
    return out;
}

} // namespace

std::vector<ExtensionTask> one_point_extensions(const ClassPresentation& k, const FinStructure& s,
                                                const std::vector<Elem>& base, ExtensionCache* cache)
{
    const Substructure sub = induced_substructure(s, base);
    ExtensionCache local_cache;
    ExtensionCache& c = cache ? *cache : local_cache;
    const std::string key = structure_key(sub.structure);
    auto it = c.entries.find(key);
    if (it == c.entries.end())
        it = c.entries.emplace(key, local_extensions(k, sub.structure)).first;
    const Signature& sig = s.sig();
    std::vector<ExtensionTask> out;
    for (const auto& le : it->second) {
        ExtensionTask task;
        task.base = base;
        task.sort = le.sort;
        task.code = le.code;
        for (const auto& a : le.atoms) {
            Atom g = a;
            const auto& prof = sig.relation(a.rel).profile;
            for (std::size_t p = 0; p < g.tuple.size(); ++p)
                if (g.tuple[p] >= 0)
                    g.tuple[p] = sub.inclusion(prof[p], g.tuple[p]);
            task.atoms.push_back(std::move(g));
        }
        std::sort(task.atoms.begin(), task.atoms.end());
        out.push_back(std::move(task));
    }
    return out;
}

bool realizes(const FinStructure& s, const ExtensionTask& task, Elem y)
{
    return realizes_in(s, s.sig(), task, y);
}

bool realizes(const StructureBuilder& s, const ExtensionTask& task, Elem y)
{
    return realizes_in(s, s.sig(), task, y);
}

std::string describe_task(const ExtensionTask& t, const Signature& sig)
{
    std::string out = "new " + sig.sort_name(t.sort) + "-point over {";
    for (std::size_t i = 0; i < t.base.size(); ++i)
        out += (i ? "," : "") + sig.sort_name(t.base[i].sort) + ":" + std::to_string(t.base[i].id);
    out += "} with [";
    for (std::size_t i = 0; i < t.atoms.size(); ++i) {
        out += (i ? " " : "") + sig.relation(t.atoms[i].rel).name + "(";
        for (std::size_t p = 0; p < t.atoms[i].tuple.size(); ++p) {
            const int v = t.atoms[i].tuple[p];
            out += (p ? "," : "") + (v < 0 ? std::string("x") : std::to_string(v));
        }
        out += ")";
    }
    return out + "]";
}

StageChain::StageChain(ClassPresentation k, std::uint64_t seed, int size_cap, ChainOptions options)
    : k_(std::make_shared<const ClassPresentation>(std::move(k))), seed_(seed), size_cap_(size_cap),
      options_(options), rng_(seed)
{
    if (size_cap < 1)
        throw Error("size cap must be at least 1");
    const Signature& sig = k_->sig();
    stages_.push_back(std::make_shared<const FinStructure>(
        k_->sig_ptr(), std::vector<int>(sig.sort_count(), 0), std::vector<std::vector<Tuple>>(sig.relation_count())));
}

const FinStructure& StageChain::stage(int i) const
{
    if (i < 0 || i >= stage_count())
        throw Error("stage " + std::to_string(i) + " has not been built (chain has " + std::to_string(stage_count()) +
                    " stages)");
    return *stages_[i];
}

Embedding StageChain::embedding(int i) const
{
    const FinStructure& from = stage(i);
    (void)stage(i + 1);
    return Embedding::identity(from.sizes());
}

Embedding StageChain::map_forward(int from, int to) const
{
    if (to < from)
        throw Error("map_forward needs from <= to");
    Embedding e = Embedding::identity(stage(from).sizes());
    for (int i = from; i < to; ++i)
        e = embedding(i).compose(e);
    return e;
}

StageChain build_stage(const StageChain& chain, int steps)
{
    if (steps < 0)
        throw Error("steps must be non-negative");
    StageChain next = chain;
    const ClassPresentation& k = *next.k_;
    const Signature& sig = k.sig();
    if (next.options_.verify_sap && !next.sap_checked_) {
        const auto report = check_amalgamation(k, next.size_cap_, true);
        if (!report.pass)
            throw Error("class " + k.name() + " fails strong amalgamation up to size " +
                        std::to_string(next.size_cap_));
        next.sap_checked_ = true;
    }
    StructureBuilder d(chain.last());
    const int stage_index = next.stage_count();

    auto schedule = [&]() {
        const FinStructure m = d.build();
        struct Slot {
            std::uint64_t tie;
            ExtensionTask task;
        };
        std::map<std::pair<int, CanonicalCode>, std::vector<Slot>> groups;
        ExtensionCache cache;
        for_each_subset(m, next.size_cap_ - 1, [&](const std::vector<Elem>& u) {
            for (auto& t : one_point_extensions(k, m, u, &cache)) {
                const int size = static_cast<int>(u.size()) + 1;
                groups[{size, t.code}].push_back({next.rng_(), std::move(t)});
            }
        });
        std::map<int, std::vector<std::vector<Slot>*>> by_size;
        for (auto& [key, slots] : groups) {
            std::stable_sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) { return a.tie < b.tie; });
            by_size[key.first].push_back(&slots);
        }
        for (auto& [size, lists] : by_size) {
            std::size_t longest = 0;
            for (auto* l : lists)
                longest = std::max(longest, l->size());
            for (std::size_t r = 0; r < longest; ++r)
                for (auto* l : lists)
                    if (r < l->size())
                        next.queue_.push_back(std::move((*l)[r].task));
        }
    };

    for (int step = 0; step < steps; ++step) {
        if (next.queue_.empty())
            schedule();
        if (next.queue_.empty())
            throw Error("class " + k.name() + " has no one-point extensions to schedule");
        ExtensionTask task = std::move(next.queue_.front());
        next.queue_.pop_front();

        TaskRecord rec;
        rec.step = next.steps_++;
        rec.stage = stage_index;
        std::vector<Elem> others;
        for (int s = 0; s < sig.sort_count(); ++s)
            for (int id = 0; id < d.size(s); ++id) {
                const Elem e{s, id};
                if (std::find(task.base.begin(), task.base.end(), e) == task.base.end())
                    others.push_back(e);
            }
        std::vector<Elem> realizing;
        for (const Elem& y : others)
            if (realizes_in(d, sig, task, y))
                realizing.push_back(y);
        rec.already_realized = !realizing.empty();

        const int x = d.add_element(task.sort);
        const Elem fresh{task.sort, x};
        auto place_task_atoms = [&] {
            for (const auto& a : task.atoms) {
                Tuple t = a.tuple;
                for (auto& v : t)
                    if (v < 0)
                        v = x;
                d.set(a.rel, t, true);
            }
        };
        place_task_atoms();
        CompletionPolicy policy{&next.rng_};
        bool done = false;
        // On odd steps the new point copies an existing realization: it takes over all of
        // its relations except those involving the copied point itself, which are
        // completed. Even steps complete freely, which keeps copies distinguishable.
        if (!realizing.empty() && rec.step % 2 == 1) {
            const Elem p = realizing[next.rng_() % realizing.size()];
            std::vector<Elem> rest;
            for (int s = 0; s < sig.sort_count(); ++s)
                for (int id = 0; id < d.size(s); ++id)
                    if (Elem e{s, id}; !(e == p) && !(e == fresh))
                        rest.push_back(e);
            for (int r = 0; r < sig.relation_count(); ++r) {
                const auto& prof = sig.relation(r).profile;
                for_each_tuple_using(sig, r, rest, {p}, [&](const Tuple& t) {
                    if (!d.holds(r, t))
                        return;
                    Tuple c = t;
                    for (std::size_t i = 0; i < c.size(); ++i)
                        if (prof[i] == p.sort && c[i] == p.id)
                            c[i] = x;
                    d.set(r, c, true);
                });
            }
            std::erase(rest, fresh);
            CompletionProblem prob{rest, {p}, {fresh}};
            if (complete_cross_atoms(k, d, prob, policy)) {
                done = true;
                rec.copied_from = p;
            } else {
                d.remove_last(task.sort);
                d.add_element(task.sort);
                place_task_atoms();
            }
        }
        if (!done) {
            shuffle_in_place(others, next.rng_);
            CompletionProblem prob{task.base, others, {fresh}};
            done = complete_cross_atoms(k, d, prob, policy);
        }
        if (done) {
            rec.point = fresh;
        } else {
            d.remove_last(task.sort);
            if (!next.options_.allow_identification || realizing.empty())
                throw Error("no strong amalgam for task " + describe_task(task, sig) + " at step " +
                            std::to_string(rec.step) + " of class " + k.name());
            rec.point = realizing.front();
            rec.fresh = false;
        }
        rec.task = std::move(task);
        next.log_.push_back(std::move(rec));
    }
    next.stages_.push_back(std::make_shared<const FinStructure>(d.build()));
    return next;
}

ExtensionReport check_extension_axioms(const FinStructure& s, const ClassPresentation& k, int k_size,
                                       std::size_t max_unmet, const std::optional<std::vector<int>>& bases_within)
{
    ExtensionReport report;
    report.k = k_size;
    const auto elems = s.elements();
    ExtensionCache cache;
    for_each_subset(s, k_size, [&](const std::vector<Elem>& u) {
        if (bases_within)
            for (const Elem& e : u)
                if (e.id >= bases_within->at(e.sort))
                    return;
        for (auto& t : one_point_extensions(k, s, u, &cache)) {
            ++report.total;
            bool found = false;
            for (const Elem& y : elems)
                if (realizes(s, t, y)) {
                    found = true;
                    break;
                }
            if (found) {
                ++report.satisfied;
            } else {
                report.pass = false;
                if (report.unmet.size() < max_unmet)
                    report.unmet.push_back(std::move(t));
            }
        }
    });
    return report;
}

} // namespace forge
