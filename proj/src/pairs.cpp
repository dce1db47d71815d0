#include "forge/pairs.hpp"

#include "forge/amalgamation.hpp"
#include "forge/budget.hpp"
#include "forge/error.hpp"

#include <algorithm>
#include <deque>

namespace forge {

std::string h_mode_name(HMode m) { return m == HMode::independent ? "independent" : "substructure"; }

HMode h_mode_from_name(const std::string& name)
{
    if (name == "independent")
        return HMode::independent;
    if (name == "substructure")
        return HMode::substructure;
    throw Error("unknown h-mode '" + name + "' (expected independent or substructure)");
}

Json pair_to_json(const PairExpansion& p)
{
    Json j = structure_to_json(p.host);
    Json h = Json::object();
    for (int s = 0; s < p.host.sig().sort_count(); ++s)
        h[p.host.sig().sort_name(s)] = p.h.ids(s);
    j["H"] = h;
    j["provenance"] = {{"seed", p.provenance.seed},
                       {"steps", p.provenance.steps},
                       {"k_cap", p.provenance.k_cap},
                       {"h_mode", h_mode_name(p.provenance.h_mode)},
                       {"closed", p.provenance.closed}};
    if (p.presentation)
        j["class"] = class_to_json(*p.presentation);
    return j;
}

PairExpansion pair_from_json(const Json& j)
{
    PairExpansion p;
    p.host = structure_from_json(j);
    p.h = PredicateSet(p.host.sizes());
    if (j.contains("H"))
        for (const auto& [sort, ids] : j.at("H").items()) {
            const int s = p.host.sig().sort_index(sort);
            for (int id : ids.get<std::vector<int>>()) {
                if (!p.host.contains({s, id}))
                    throw Error("H names element " + std::to_string(id) + " outside sort " + sort);
                p.h.insert({s, id});
            }
        }
    if (j.contains("provenance")) {
        const Json& pr = j.at("provenance");
        p.provenance.seed = pr.value("seed", std::uint64_t{0});
        p.provenance.steps = pr.value("steps", 0);
        p.provenance.k_cap = pr.value("k_cap", 0);
        p.provenance.h_mode = h_mode_from_name(pr.value("h_mode", std::string("independent")));
        p.provenance.closed = pr.value("closed", false);
    }
    if (j.contains("class")) {
        p.presentation = std::make_shared<const ClassPresentation>(class_from_json(j.at("class")));
        if (!(p.presentation->sig() == p.host.sig()))
            throw SignatureMismatch("pair class and host have different signatures");
    }
    return p;
}

namespace {

void shuffle_in_place(std::vector<ExtensionTask>& v, std::mt19937_64& rng)
{
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

void shuffle_elems(std::vector<Elem>& v, std::mt19937_64& rng)
{
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

enum class Stream { generic, density, codensity, h_internal };

std::string stream_name(Stream s)
{
    switch (s) {
    case Stream::generic:
        return "generic";
    case Stream::density:
        return "density";
    case Stream::codensity:
        return "codensity";
    case Stream::h_internal:
        return "h_internal";
    }
    return "";
}

class PairBuilder {
public:
    PairBuilder(const ClassPresentation& k, std::uint64_t seed, int k_cap, int max_points)
        : k_(k), rng_(seed), d_(k.sig_ptr()), h_(std::vector<int>(k.sig().sort_count(), 0)), k_cap_(k_cap),
          max_points_(max_points)
    {
    }

    // Tasks over the current structure, bases of size <= k_cap in subset order,
    // then shuffled.
    std::vector<ExtensionTask> batch(bool inside_h_only)
    {
        const FinStructure m = d_.build();
        std::vector<ExtensionTask> out;
        for_each_subset(m, k_cap_, [&](const std::vector<Elem>& u) {
            if (inside_h_only)
                for (const Elem& e : u)
                    if (!h_.contains(e))
                        return;
            for (auto& t : one_point_extensions(k_, m, u, &cache_))
                out.push_back(std::move(t));
        });
        shuffle_in_place(out, rng_);
        return out;
    }

    [[nodiscard]] std::optional<Elem> existing(const ExtensionTask& t, bool in_h) const
    {
        for (int id = 0; id < d_.size(t.sort); ++id) {
            const Elem y{t.sort, id};
            if (h_.contains(y) == in_h && realizes(d_, t, y))
                return y;
        }
        return std::nullopt;
    }

    void run(Stream stream, ExtensionTask task)
    {
        budget::check();
        PairTaskRecord rec;
        rec.step = step_++;
        rec.stream = stream_name(stream);
        bool in_h = stream != Stream::codensity;
        if (stream == Stream::generic) {
            in_h = (rng_() & 1) != 0;
        } else if (auto y = existing(task, in_h)) {
            rec.point = *y;
            rec.fresh = false;
            rec.task = std::move(task);
            log_.push_back(std::move(rec));
            return;
        }
        int total = 0;
        for (int n : d_.sizes())
            total += n;
        if (total >= max_points_)
            throw BudgetExceeded("pair stage reached " + std::to_string(max_points_) + " points");

        std::vector<Elem> others;
        for (int s = 0; s < k_.sig().sort_count(); ++s)
            for (int id = 0; id < d_.size(s); ++id)
                if (Elem e{s, id}; std::find(task.base.begin(), task.base.end(), e) == task.base.end())
                    others.push_back(e);
        const int x = d_.add_element(task.sort);
        h_.resize(d_.sizes());
        for (const auto& a : task.atoms) {
            Tuple t = a.tuple;
            for (auto& v : t)
                if (v < 0)
                    v = x;
            d_.set(a.rel, t, true);
        }
        shuffle_elems(others, rng_);
        CompletionPolicy policy{&rng_};
        if (!complete_cross_atoms(k_, d_, CompletionProblem{task.base, others, {{task.sort, x}}}, policy))
            throw Error("no strong amalgam for task " + describe_task(task, k_.sig()) + " of class " + k_.name());
        if (in_h)
            h_.insert({task.sort, x});
        rec.point = {task.sort, x};
        rec.task = std::move(task);
        log_.push_back(std::move(rec));
    }

    // Density and codensity tasks with no realization on the right side of H.
    std::vector<std::pair<Stream, ExtensionTask>> unmet()
    {
        std::vector<std::pair<Stream, ExtensionTask>> out;
        for (auto& t : batch(false)) {
            const bool dense = existing(t, true).has_value();
            const bool codense = existing(t, false).has_value();
            if (!dense)
                out.emplace_back(Stream::density, t);
            if (!codense)
                out.emplace_back(Stream::codensity, std::move(t));
        }
        return out;
    }

    PairExpansion finish(const ClassPresentation& k)
    {
        PairExpansion p;
        p.host = d_.build();
        p.h = h_;
        p.presentation = std::make_shared<const ClassPresentation>(k);
        p.log = std::move(log_);
        return p;
    }

private:
    const ClassPresentation& k_;
    std::mt19937_64 rng_;
    StructureBuilder d_;
    PredicateSet h_;
    int k_cap_;
    int max_points_;
    std::size_t step_ = 0;
    ExtensionCache cache_;
    std::vector<PairTaskRecord> log_;
};

PairAxiomReport check_side(const PairExpansion& p, int k, std::size_t max_unmet, bool in_h)
{
    if (!p.presentation)
        throw Error("pair expansion has no class presentation");
    PairAxiomReport rep;
    rep.k = k;
    ExtensionCache cache;
    for_each_subset(p.host, k, [&](const std::vector<Elem>& u) {
        budget::check();
        for (auto& t : one_point_extensions(*p.presentation, p.host, u, &cache)) {
            ++rep.total;
            bool found = false;
            for (int id = 0; id < p.host.size(t.sort) && !found; ++id) {
                const Elem y{t.sort, id};
                found = p.h.contains(y) == in_h && realizes(p.host, t, y);
            }
            if (found) {
                ++rep.satisfied;
            } else {
                rep.pass = false;
                if (rep.unmet.size() < max_unmet)
                    rep.unmet.push_back(std::move(t));
            }
        }
    });
    return rep;
}

void check_elements(const PairExpansion& p, const std::vector<Elem>& es)
{
    for (const Elem& e : es)
        if (!p.host.contains(e))
            throw Error("element " + to_string(e) + " is not in the pair's universe");
}

} // namespace

PairExpansion build_pair_stage(const ClassPresentation& k, std::uint64_t seed, int steps, int k_cap,
                               const PairBuildOptions& options)
{
    if (steps < 0 || k_cap < 0)
        throw Error("pair stage needs steps >= 0 and k_cap >= 0");
    PairBuilder b(k, seed, k_cap, options.max_points);
    std::vector<Stream> order{Stream::generic, Stream::density, Stream::codensity};
    if (options.h_mode == HMode::substructure)
        order.push_back(Stream::h_internal);
    std::vector<std::deque<ExtensionTask>> queues(order.size());
    for (int step = 0; step < steps; ++step) {
        const std::size_t which = static_cast<std::size_t>(step) % order.size();
        auto& q = queues[which];
        if (q.empty())
            for (auto& t : b.batch(order[which] == Stream::h_internal))
                q.push_back(std::move(t));
        if (q.empty())
            continue; // no base inside H yet
        ExtensionTask t = std::move(q.front());
        q.pop_front();
        b.run(order[which], std::move(t));
    }
    bool closed = false;
    if (options.close) {
        while (true) {
            auto todo = b.unmet();
            if (todo.empty())
                break;
            for (auto& [stream, t] : todo)
                b.run(stream, std::move(t));
        }
        closed = true;
    }
    PairExpansion p = b.finish(k);
    p.provenance = {seed, steps, k_cap, options.h_mode, closed};
    return p;
}

PairAxiomReport check_density(const PairExpansion& p, int k, std::size_t max_unmet)
{
    return check_side(p, k, max_unmet, true);
}

PairAxiomReport check_codensity(const PairExpansion& p, int k, std::size_t max_unmet)
{
    // Base points are never realizations, so "outside H" here is outside A ∪ H.
    return check_side(p, k, max_unmet, false);
}

std::vector<Elem> small_closure(const PairExpansion& p, const std::vector<Elem>& b)
{
    check_elements(p, b);
    std::vector<Elem> out = p.h.elements();
    out.insert(out.end(), b.begin(), b.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool h_independent(const PairExpansion& p, const std::vector<Elem>& a)
{
    check_elements(p, a);
    return true;
}

HAgreementReport check_h_agreement(const PairExpansion& p, const Formula& phi, const Formula& psi, const Variable& x,
                                   const Assignment& params)
{
    if (mentions_h(psi))
        throw Error("the H-free side of an agreement check mentions H");
    if (params.contains(x.name))
        throw Error("the designated variable " + x.name + " is also a parameter");
    std::vector<Elem> named;
    for (const Formula* f : {&phi, &psi})
        for (const auto& v : free_variables(*f)) {
            if (v.name == x.name) {
                if (v.sort != x.sort)
                    throw Error("variable " + x.name + " has different sorts in the two formulas");
                continue;
            }
            auto it = params.find(v.name);
            if (it == params.end())
                throw Error("free variable " + v.name + " is neither x nor a parameter");
            named.push_back({v.sort, it->second});
        }
    const auto scl = small_closure(p, named);

    HAgreementReport rep;
    Assignment a = params;
    for (int id = 0; id < p.host.size(x.sort); ++id) {
        a[x.name] = id;
        const Elem y{x.sort, id};
        const bool fv = evaluate(p.host, phi, a, &p.h);
        const bool gv = evaluate(p.host, psi, a, &p.h);
        if (fv == gv)
            continue;
        if (p.h.contains(y) && rep.h_restriction) {
            rep.h_restriction = false;
            rep.h_witness = y;
        }
        if (rep.difference_small && !std::binary_search(scl.begin(), scl.end(), y)) {
            rep.difference_small = false;
            rep.diff_witness = y;
        }
    }
    return rep;
}

Formula build_mu(const Formula& theta, const Formula& phi, const Variable& x, const Variable& z)
{
    if (x.name == z.name)
        throw Error("build_mu needs distinct x and z");
    for (const Formula* f : {&theta, &phi})
        for (const auto& v : free_variables(*f)) {
            if (v.name == x.name && v.sort != x.sort)
                throw Error("variable " + x.name + " occurs with another sort");
            if (v.name == z.name && v.sort != z.sort)
                throw Error("variable " + z.name + " occurs with another sort");
        }
    return Formula::conjunction(
        {Formula::in_h(Term::var(z)), Formula::exists(x, Formula::conjunction({theta, phi}))});
}

} // namespace forge
