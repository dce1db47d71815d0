#include "forge/project.hpp"

#include "forge/amalgamation.hpp"
#include "forge/budget.hpp"
#include "forge/builtins.hpp"
#include "forge/chain.hpp"
#include "forge/constructions.hpp"
#include "forge/error.hpp"
#include "forge/pairs.hpp"
#include "forge/syntax.hpp"
#include "forge/trees.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace forge {

namespace {

enum class Kind { cls, chain, structure, tree, pair };

const char* kind_name(Kind k)
{
    switch (k) {
    case Kind::cls:
        return "class";
    case Kind::chain:
        return "chain";
    case Kind::structure:
        return "structure";
    case Kind::tree:
        return "tree";
    case Kind::pair:
        return "pair";
    }
    return "?";
}

const Json& section(const ProjectSpec& spec, Kind k)
{
    switch (k) {
    case Kind::cls:
        return spec.classes;
    case Kind::chain:
        return spec.chains;
    case Kind::structure:
        return spec.structures;
    case Kind::tree:
        return spec.trees;
    case Kind::pair:
        return spec.pairs;
    }
    return spec.classes;
}

int get_int(const Json& a, const char* key, int fallback)
{
    if (!a.contains(key))
        return fallback;
    const Json& v = a.at(key);
    if (!v.is_number_integer())
        throw Error(std::string("argument '") + key + "' must be an integer");
    return v.get<int>();
}

bool get_bool(const Json& a, const char* key, bool fallback)
{
    if (!a.contains(key))
        return fallback;
    const Json& v = a.at(key);
    if (!v.is_boolean())
        throw Error(std::string("argument '") + key + "' must be true or false");
    return v.get<bool>();
}

// Command-line values arrive parsed as JSON where possible, so "true" may be a bool.
std::string as_text(const Json& v)
{
    return v.is_string() ? v.get<std::string>() : v.dump();
}

std::string get_str(const Json& a, const char* key, const std::string& fallback = {})
{
    return a.contains(key) ? as_text(a.at(key)) : fallback;
}

std::vector<std::string> get_strs(const Json& a, const char* key)
{
    std::vector<std::string> out;
    if (!a.contains(key))
        return out;
    const Json& v = a.at(key);
    if (!v.is_array())
        return {as_text(v)};
    for (const auto& e : v)
        out.push_back(as_text(e));
    return out;
}

std::vector<int> get_ints(const Json& a, const char* key)
{
    if (!a.contains(key) || !a.at(key).is_array())
        throw Error(std::string("argument '") + key + "' must be a list of integers");
    return a.at(key).get<std::vector<int>>();
}

Elem elem_from(const Json& j)
{
    if (!j.is_array() || j.size() != 2)
        throw Error("an element is written [sort, id], got " + j.dump());
    return {j[0].get<int>(), j[1].get<int>()};
}

std::vector<Elem> elems_from(const Json& a, const char* key)
{
    std::vector<Elem> out;
    if (a.contains(key))
        for (const auto& e : a.at(key))
            out.push_back(elem_from(e));
    return out;
}

Json elem_json(const Elem& e)
{
    return Json::array({e.sort, e.id});
}

Json elems_json(const std::vector<Elem>& v)
{
    Json a = Json::array();
    for (const auto& e : v)
        a.push_back(elem_json(e));
    return a;
}

Formula parse(const std::string& text, const Signature& sig)
{
    try {
        return parse_formula(text, sig);
    } catch (const ParseError& e) {
        std::string where =
            e.position() == std::string::npos ? std::string() : " at offset " + std::to_string(e.position());
        throw Error("formula \"" + text + "\": " + e.what() + where);
    }
}

Variable variable_in(const std::vector<Formula>& fs, const std::string& name)
{
    for (const auto& f : fs)
        for (const auto& v : free_variables(f))
            if (v.name == name)
                return v;
    return {name, 0};
}

// Builds and caches entities. Resolution holds one recursive lock, so parallel tasks
// share each chain or pair instead of building it twice.
class Context {
public:
    Context(const ProjectSpec& spec, std::uint64_t seed) : spec_(spec), seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::shared_ptr<const ClassPresentation> cls(const Json& ref, int depth = 0)
    {
        std::lock_guard lock(mu_);
        const auto r = lookup(Kind::cls, ref, depth);
        if (auto it = classes_.find(r.key); it != classes_.end())
            return it->second;
        const Json& e = r.entry;
        std::shared_ptr<const ClassPresentation> out;
        if (e.contains("builtin"))
            out = std::make_shared<const ClassPresentation>(builtin_class(as_text(e.at("builtin"))));
        else if (e.contains("file"))
            out = std::make_shared<const ClassPresentation>(class_from_json(read_json_file(file(e))));
        else if (e.contains("cover"))
            out = std::make_shared<const ClassPresentation>(
                imaginary_cover_class(*cls(e.at("cover"), depth + 1), get_int(e, "sort", 0)));
        else if (e.contains("pfc"))
            out = std::make_shared<const ClassPresentation>(pfc_class(*cls(e.at("pfc"), depth + 1)));
        else
            throw Error("class " + r.label + " needs one of builtin, file, cover or pfc");
        classes_[r.key] = out;
        return out;
    }

    std::shared_ptr<const StageChain> chain(const Json& ref, int depth = 0)
    {
        std::lock_guard lock(mu_);
        const auto r = lookup(Kind::chain, ref, depth);
        if (auto it = chains_.find(r.key); it != chains_.end())
            return it->second;
        const Json& e = r.entry;
        if (!e.contains("class"))
            throw Error("chain " + r.label + " needs a class");
        ChainOptions opt;
        opt.allow_identification = get_bool(e, "allow_identification", false);
        opt.verify_sap = get_bool(e, "verify_sap", false);
        StageChain c(*cls(e.at("class"), depth + 1), r.seed, get_int(e, "size_cap", 3), opt);
        const int stages = get_int(e, "stages", 0);
        const int steps = get_int(e, "steps", 40);
        for (int i = 0; i < stages; ++i)
            c = build_stage(c, steps);
        auto out = std::make_shared<const StageChain>(std::move(c));
        chains_[r.key] = out;
        return out;
    }

    std::shared_ptr<const FinStructure> structure(const Json& ref, int depth = 0)
    {
        std::lock_guard lock(mu_);
        const auto r = lookup(Kind::structure, ref, depth);
        if (auto it = structures_.find(r.key); it != structures_.end())
            return it->second;
        const Json& e = r.entry;
        FinStructure s;
        if (e.contains("file")) {
            s = structure_from_json(read_json_file(file(e)));
        } else if (e.contains("chain")) {
            const auto c = chain(e.at("chain"), depth + 1);
            s = c->stage(get_int(e, "stage", c->stage_count() - 1));
        } else if (e.contains("fixture")) {
            s = structure_fixture(as_text(e.at("fixture")), e);
        } else {
            throw Error("structure " + r.label + " needs one of file, chain or fixture");
        }
        auto out = std::make_shared<const FinStructure>(std::move(s));
        structures_[r.key] = out;
        return out;
    }

    std::shared_ptr<const LabeledTree> tree(const Json& ref, int depth = 0)
    {
        std::lock_guard lock(mu_);
        const auto r = lookup(Kind::tree, ref, depth);
        if (auto it = trees_.find(r.key); it != trees_.end())
            return it->second;
        const Json& e = r.entry;
        LabeledTree t;
        if (e.contains("file")) {
            t = labeled_tree_from_json(read_json_file(file(e)));
        } else if (e.contains("fixture")) {
            const std::string f = as_text(e.at("fixture"));
            const int h = get_int(e, "h", 3);
            if (f == "tree_code_witness")
                t = tree_code_witness(h);
            else if (f == "junk_tree_code_witness")
                t = junk_tree_code_witness(h, get_int(e, "junk", 2));
            else if (f == "pairwise_consistent_triple_empty_witness")
                t = pairwise_consistent_triple_empty_witness(h);
            else
                throw Error("unknown tree fixture '" + f + "'");
        } else {
            throw Error("tree " + r.label + " needs one of file or fixture");
        }
        auto out = std::make_shared<const LabeledTree>(std::move(t));
        trees_[r.key] = out;
        return out;
    }

    std::shared_ptr<const PairExpansion> pair(const Json& ref, int depth = 0)
    {
        std::lock_guard lock(mu_);
        const auto r = lookup(Kind::pair, ref, depth);
        if (auto it = pairs_.find(r.key); it != pairs_.end())
            return it->second;
        const Json& e = r.entry;
        PairExpansion p;
        if (e.contains("file")) {
            p = pair_from_json(read_json_file(file(e)));
        } else if (e.contains("class")) {
            PairBuildOptions opt;
            opt.h_mode = h_mode_from_name(get_str(e, "h_mode", "independent"));
            opt.close = get_bool(e, "close", false);
            opt.max_points = get_int(e, "max_points", opt.max_points);
            p = build_pair_stage(*cls(e.at("class"), depth + 1), r.seed, get_int(e, "steps", 40),
                                 get_int(e, "k_cap", 2), opt);
        } else {
            throw Error("pair " + r.label + " needs one of file or class");
        }
        auto out = std::make_shared<const PairExpansion>(std::move(p));
        pairs_[r.key] = out;
        return out;
    }

    // Signature of a referenced entity, building as little as possible.
    Signature signature(Kind k, const Json& ref)
    {
        std::lock_guard lock(mu_);
        const auto r = lookup(k, ref, 0);
        const Json& e = r.entry;
        switch (k) {
        case Kind::cls:
            return cls(ref)->sig();
        case Kind::chain:
            return cls(e.at("class"))->sig();
        case Kind::structure:
            if (e.contains("chain"))
                return signature(Kind::chain, e.at("chain"));
            return structure(ref)->sig();
        case Kind::tree:
            return tree(ref)->host.sig();
        case Kind::pair:
            if (e.contains("class"))
                return cls(e.at("class"))->sig();
            return pair(ref)->host.sig();
        }
        return {};
    }

    // Checks that a reference and everything it names resolve, without building.
    void check(Kind k, const Json& ref, int depth = 0)
    {
        const auto r = lookup(k, ref, depth);
        const Json& e = r.entry;
        if (e.contains("file") && !std::filesystem::exists(file(e)))
            throw Error("dangling reference: " + std::string(kind_name(k)) + " " + r.label + " names missing file '" +
                        as_text(e.at("file")) + "'");
        switch (k) {
        case Kind::cls:
            if (e.contains("builtin"))
                (void)builtin_class(as_text(e.at("builtin")));
            if (e.contains("cover"))
                check(Kind::cls, e.at("cover"), depth + 1);
            if (e.contains("pfc"))
                check(Kind::cls, e.at("pfc"), depth + 1);
            break;
        case Kind::chain:
            if (!e.contains("class"))
                throw Error("chain " + r.label + " needs a class");
            check(Kind::cls, e.at("class"), depth + 1);
            break;
        case Kind::structure:
            if (e.contains("chain"))
                check(Kind::chain, e.at("chain"), depth + 1);
            break;
        case Kind::tree:
            break;
        case Kind::pair:
            if (e.contains("class"))
                check(Kind::cls, e.at("class"), depth + 1);
            break;
        }
    }

private:
    struct Resolved {
        std::string key;
        std::string label;
        Json entry;
        std::uint64_t seed = 0;
    };

    Resolved lookup(Kind k, const Json& ref, int depth) const
    {
        if (depth > 16)
            throw Error("reference cycle through " + std::string(kind_name(k)) + " " + ref.dump());
        Resolved r;
        if (ref.is_object()) {
            r.entry = ref;
            r.key = "inline:" + ref.dump();
            r.label = ref.dump();
        } else {
            const std::string name = as_text(ref);
            r.label = "'" + name + "'";
            const Json& sec = section(spec_, k);
            if (sec.contains(name)) {
                r.entry = sec.at(name);
                r.key = "name:" + name;
            } else if (k == Kind::cls && is_builtin(name)) {
                r.entry = {{"builtin", name}};
                r.key = "builtin:" + name;
            } else if (std::filesystem::exists(spec_.dir / name)) {
                r.entry = {{"file", name}};
                r.key = "file:" + name;
            } else {
                throw Error("dangling reference: " + std::string(kind_name(k)) + " '" + name + "'");
            }
            if (!r.entry.is_object())
                throw Error(std::string(kind_name(k)) + " '" + name + "' must be an object");
        }
        r.seed = r.entry.contains("seed") ? r.entry.at("seed").get<std::uint64_t>()
                                          : (fnv1a(std::string(kind_name(k)) + ":" + r.key) ^ seed_);
        return r;
    }

    static bool is_builtin(const std::string& name)
    {
        try {
            (void)builtin_class(name);
            return true;
        } catch (const Error&) {
            return false;
        }
    }

    std::filesystem::path file(const Json& e) const { return spec_.dir / as_text(e.at("file")); }

    static FinStructure structure_fixture(const std::string& f, const Json& e)
    {
        if (f == "tree_code_structure")
            return tree_code_structure(get_int(e, "h", 3));
        if (f == "junk_tree_code_structure")
            return junk_tree_code_structure(get_int(e, "h", 3), get_int(e, "junk", 2));
        if (f == "pairwise_consistent_triple_empty")
            return pairwise_consistent_triple_empty(get_int(e, "h", 3));
        if (f == "complete_graph")
            return complete_graph(get_int(e, "n", 3));
        if (f == "path_graph")
            return path_graph(get_int(e, "n", 3));
        if (f == "edgeless_graph")
            return edgeless_graph(get_int(e, "n", 3));
        if (f == "pure_set")
            return pure_set(get_int(e, "n", 3));
        throw Error("unknown structure fixture '" + f + "'");
    }

    const ProjectSpec& spec_;
    std::uint64_t seed_;
    std::recursive_mutex mu_;
    std::map<std::string, std::shared_ptr<const ClassPresentation>> classes_;
    std::map<std::string, std::shared_ptr<const StageChain>> chains_;
    std::map<std::string, std::shared_ptr<const FinStructure>> structures_;
    std::map<std::string, std::shared_ptr<const LabeledTree>> trees_;
    std::map<std::string, std::shared_ptr<const PairExpansion>> pairs_;
};

using Runner = std::function<std::string(Context&, const Json&, std::uint64_t, TaskReport&)>;

struct OpDef {
    std::string name;
    std::vector<std::pair<std::string, Kind>> refs; // checked when present; first present one gives the signature
    std::vector<std::string> required;
    std::vector<std::string> formulas;      // single formula arguments
    std::vector<std::string> formula_lists; // list arguments
    Runner run;
};

std::string pass_fail(bool ok)
{
    return ok ? "pass" : "fail";
}

Json axiom_json(const PairAxiomReport& r, const Signature& sig)
{
    Json j{{"pass", r.pass}, {"k", r.k}, {"total", r.total}, {"satisfied", r.satisfied}, {"fraction", r.fraction()}};
    Json unmet = Json::array();
    for (std::size_t i = 0; i < r.unmet.size() && i < 5; ++i)
        unmet.push_back(describe_task(r.unmet[i], sig));
    j["unmet"] = unmet;
    return j;
}

Json witness_file(const TreeWitness& w)
{
    const Signature& sig = w.tree.host.sig();
    Json params = Json::array();
    for (const auto& v : w.phi.params)
        params.push_back(v.name);
    return {{"tree", labeled_tree_to_json(w.tree)},
            {"formula", print_formula(w.phi.body, sig)},
            {"x", w.phi.x.name},
            {"params", params}};
}

PartitionedFormula partitioned(const Json& a, const char* key, const Signature& sig)
{
    return PartitionedFormula::from(parse(get_str(a, key), sig), get_str(a, "x", "x"));
}

std::string op_check_class(Context& ctx, const Json& a, std::uint64_t, TaskReport& rep)
{
    const bool member = class_membership(*ctx.cls(a.at("class")), *ctx.structure(a.at("structure")));
    rep.result = {{"member", member}};
    return pass_fail(member);
}

std::string op_check_amalgamation(Context& ctx, const Json& a, std::uint64_t, TaskReport& rep)
{
    const auto r = check_amalgamation(*ctx.cls(a.at("class")), get_int(a, "n", 4), get_bool(a, "strong", true));
    rep.result = {{"pass", r.pass}, {"bound", r.bound}, {"strong", r.strong}, {"configurations", r.configurations}};
    if (r.witness) {
        const auto& w = *r.witness;
        rep.result["witness_sizes"] = {w.a.total_size(), w.b.total_size(), w.c.total_size()};
        rep.files["witness.json"] = dump_canonical(
            {{"a", structure_to_json(w.a)}, {"b", structure_to_json(w.b)}, {"c", structure_to_json(w.c)}});
    }
    return pass_fail(r.pass);
}

std::string op_enumerate_age(Context& ctx, const Json& a, std::uint64_t, TaskReport& rep)
{
    const int n = get_int(a, "n", 3);
    const auto age = enumerate_age(*ctx.cls(a.at("class")), n, static_cast<std::size_t>(get_int(a, "max_count", 200000)));
    std::vector<int> by_size(n + 1, 0);
    Json codes = Json::array();
    const int list = get_int(a, "list", 10);
    for (const auto& e : age) {
        ++by_size.at(e.structure.total_size());
        if (static_cast<int>(codes.size()) < list)
            codes.push_back(e.code.hex());
    }
    rep.result = {{"count", age.size()}, {"by_size", by_size}, {"codes", codes}};
    return "result";
}

std::string op_build_stage(Context& ctx, const Json& a, std::uint64_t, TaskReport& rep)
{
    const auto c = ctx.chain(a.at("chain"));
    const int stage = get_int(a, "stage", c->stage_count() - 1);
    const FinStructure& s = c->stage(stage);
    std::size_t steps = 0, reused = 0;
    for (const auto& rec : c->log())
        if (rec.stage <= stage) {
            ++steps;
            reused += rec.fresh ? 0 : 1;
        }
    rep.result = {{"stage", stage}, {"stages", c->stage_count()}, {"sizes", s.sizes()}, {"steps", steps},
                  {"reused", reused}};
    rep.files["stage.json"] = dump_canonical(structure_to_json(s));
    return "result";
}

std::string op_check_extension(Context& ctx, const Json& a, std::uint64_t, TaskReport& rep)
{
    std::shared_ptr<const ClassPresentation> k;
    std::shared_ptr<const FinStructure> s;
    if (a.contains("chain")) {
        const auto c = ctx.chain(a.at("chain"));
        s = std::make_shared<const FinStructure>(c->stage(get_int(a, "stage", c->stage_count() - 1)));
        k = a.contains("class") ? ctx.cls(a.at("class")) : std::make_shared<const ClassPresentation>(c->presentation());
    } else if (a.contains("structure") && a.contains("class")) {
        s = ctx.structure(a.at("structure"));
        k = ctx.cls(a.at("class"));
    } else {
        throw Error("check-extension needs a chain, or a structure and a class");
    }
    const auto r = check_extension_axioms(*s, *k, get_int(a, "k", 1));
    Json unmet = Json::array();
    for (std::size_t i = 0; i < r.unmet.size() && i < 5; ++i)
        unmet.push_back(describe_task(r.unmet[i], s->sig()));
    rep.result = {{"k", r.k}, {"total", r.total}, {"satisfied", r.satisfied}, {"fraction", r.fraction()},
                  {"unmet", unmet}};
    return pass_fail(r.pass);
}

std::string op_apply_cover(Context& ctx, const Json& a, std::uint64_t, TaskReport& rep)
{
    const int sort = get_int(a, "sort", 0);
    if (a.contains("structure")) {
        const FinStructure c = imaginary_cover_structure(*ctx.structure(a.at("structure")), get_int(a, "m", 2), sort);
        rep.result = {{"sizes", c.sizes()}};
        rep.files["structure.json"] = dump_canonical(structure_to_json(c));
        return "result";
    }
    if (!a.contains("class"))
        throw Error("apply-cover needs a class or a structure");
    const ClassPresentation k = imaginary_cover_class(*ctx.cls(a.at("class")), sort);
    rep.result = {{"name", k.name()}, {"forbidden", k.forbidden().size()}, {"helpers", k.helper_names()}};
    rep.files["class.json"] = dump_canonical(class_to_json(k));
    return "result";
}

std::string op_apply_pfc(Context& ctx, const Json& a, std::uint64_t, TaskReport& rep)
{
    const ClassPresentation k = pfc_class(*ctx.cls(a.at("class")));
    rep.result = {{"name", k.name()}, {"forbidden", k.forbidden().size()}, {"helpers", k.helper_names()}};
    rep.files["class.json"] = dump_canonical(class_to_json(k));
    return "result";
}

Json verdict_json(const GrowthVerdict& v)
{
    Json j{{"kind", kind_name(v.kind)}, {"stages", v.stages}, {"counts", v.counts}};
    if (v.kind == GrowthVerdict::Kind::algebraic)
        j["bound"] = v.bound;
    return j;
}

std::string op_acl_estimate(Context& ctx, const Json& a, std::uint64_t seed, TaskReport& rep)
{
    const auto c = ctx.chain(a.at("chain"));
    const int stage = get_int(a, "stage", 0);
    const auto stages = get_ints(a, "stages");
    if (a.contains("point")) {
        const auto v = acl_estimate(*c, stage, elem_from(a.at("point")), elems_from(a, "base"), stages);
        rep.result = verdict_json(v);
        if (a.contains("expect_kind"))
            return pass_fail(kind_name(v.kind) == get_str(a, "expect_kind"));
        return "result";
    }
    // Sampled points, each over a base of 0..base_max other elements.
    const int samples = get_int(a, "samples", 100);
    const int base_max = get_int(a, "base_max", 3);
    const int point_sort = get_int(a, "point_sort", -1);
    const double min_growing = a.value("min_growing", 1.0);
    const auto elems = c->stage(stage).elements();
    std::vector<Elem> points;
    for (const auto& e : elems)
        if (point_sort < 0 || e.sort == point_sort)
            points.push_back(e);
    if (points.empty())
        throw Error("stage " + std::to_string(stage) + " has no points to sample");
    std::mt19937_64 rng(seed);
    std::size_t algebraic = 0, growing = 0, inconclusive = 0;
    Json examples = Json::array();
    for (int i = 0; i < samples; ++i) {
        const Elem p = points[rng() % points.size()];
        std::vector<Elem> pool;
        for (const auto& e : elems)
            if (!(e == p))
                pool.push_back(e);
        const int size = std::min<int>(static_cast<int>(rng() % (base_max + 1)), static_cast<int>(pool.size()));
        std::vector<Elem> base;
        for (int j = 0; j < size; ++j) {
            const std::size_t pick = j + rng() % (pool.size() - j);
            std::swap(pool[j], pool[pick]);
            base.push_back(pool[j]);
        }
        std::sort(base.begin(), base.end());
        const auto v = acl_estimate(*c, stage, p, base, stages);
        switch (v.kind) {
        case GrowthVerdict::Kind::algebraic:
            ++algebraic;
            break;
        case GrowthVerdict::Kind::growing:
            ++growing;
            break;
        case GrowthVerdict::Kind::inconclusive:
            ++inconclusive;
            break;
        }
        if (v.kind != GrowthVerdict::Kind::growing && examples.size() < 5) {
            Json ex = verdict_json(v);
            ex["point"] = elem_json(p);
            ex["base"] = elems_json(base);
            examples.push_back(ex);
        }
    }
    const double frac = samples == 0 ? 1.0 : static_cast<double>(growing) / samples;
    rep.result = {{"samples", samples}, {"growing", growing}, {"algebraic", algebraic},
                  {"inconclusive", inconclusive}, {"growing_fraction", frac}, {"not_growing", examples}};
    return pass_fail(algebraic == 0 && frac >= min_growing);
}

std::string op_classify_growth(Context& ctx, const Json& a, std::uint64_t, TaskReport& rep)
{
    const auto c = ctx.chain(a.at("chain"));
    const auto phi = partitioned(a, "formula", c->presentation().sig());
    const auto r = classify_formula_growth(*c, phi, get_ints(a, "stages"), get_int(a, "k_max", 3));
    rep.result = {{"instances", r.instances}, {"algebraic", r.algebraic}, {"growing", r.growing},
                  {"inconclusive", r.inconclusive}, {"max_algebraic_bound", r.max_algebraic_bound},
                  {"uniform_bound_found", r.uniform_bound_found}};
    if (r.uniform_bound_found)
        rep.result["uniform_bound"] = r.uniform_bound;
    return "result";
}

std::string op_check_indisc(Context& ctx, const Json& a, std::uint64_t, TaskReport& rep)
{
    const auto t = ctx.tree(a.at("tree"));
    const auto r = check_strong_indiscernibility(*t, get_int(a, "w", 2));
    rep.result = r.to_json(t->branching);
    return pass_fail(r.pass);
}

std::string op_check_sop2(Context& ctx, const Json& a, std::uint64_t, TaskReport& rep)
{
    const auto t = ctx.tree(a.at("tree"));
    const Signature& sig = t->host.sig();
    const auto phi = partitioned(a, "formula", sig);
    FormulaSet q{phi.x, {}};
    for (const auto& text : get_strs(a, "q"))
        q.members.push_back(parse(text, sig));
    const auto r = check_sop2_witness(*t, phi, q, get_int(a, "threshold", 1));
    rep.result = r.to_json(t->branching);
    return pass_fail(r.pass);
}

std::string op_check_ktp1(Context& ctx, const Json& a, std::uint64_t, TaskReport& rep)
{
    const auto t = ctx.tree(a.at("tree"));
    const auto psi = partitioned(a, "formula", t->host.sig());
    const auto r = check_ktp1_witness(*t, psi, get_int(a, "k", 2), get_int(a, "threshold", 1));
    rep.result = r.to_json(t->branching);
    return pass_fail(r.pass);
}

std::string op_extract_sop2(Context& ctx, const Json& a, std::uint64_t, TaskReport& rep)
{
    const auto t = ctx.tree(a.at("tree"));
    const auto phi = partitioned(a, "formula", t->host.sig());
    ExtractOptions opt;
    opt.threshold = get_int(a, "threshold", opt.threshold);
    opt.pair_bound = get_int(a, "pair_bound", opt.pair_bound);
    const auto r = extract_sop2(*t, phi, opt);
    rep.result = {{"ok", r.ok}, {"K", r.k}, {"K_prime", r.k_prime}, {"n", r.n}};
    if (!r.ok) {
        rep.result["stage"] = r.stage;
        rep.result["diagnostic"] = r.diagnostic;
        return "fail";
    }
    rep.result["verification"] = r.verification.to_json(r.witness->tree.branching);
    rep.files["witness.json"] = dump_canonical(witness_file(*r.witness));
    return pass_fail(r.verification.pass);
}

std::string op_search_sop2(Context& ctx, const Json& a, std::uint64_t, TaskReport& rep)
{
    const auto s = ctx.structure(a.at("structure"));
    std::vector<PartitionedFormula> templates;
    for (const auto& text : get_strs(a, "templates"))
        templates.push_back(PartitionedFormula::from(parse(text, s->sig()), get_str(a, "x", "x")));
    SearchOptions opt;
    opt.depth = get_int(a, "depth", opt.depth);
    opt.branching = get_int(a, "branching", opt.branching);
    opt.threshold = get_int(a, "threshold", opt.threshold);
    opt.max_conjuncts = get_int(a, "max_conjuncts", opt.max_conjuncts);
    const auto w = search_sop2(*s, templates, opt);
    rep.result = {{"found", w.has_value()}, {"depth", opt.depth}};
    if (w) {
        rep.result["formula"] = print_formula(w->phi.body, s->sig());
        rep.files["witness.json"] = dump_canonical(witness_file(*w));
    }
    return pass_fail(w.has_value());
}

std::string op_based_on(Context& ctx, const Json& a, std::uint64_t, TaskReport& rep)
{
    const auto tb = ctx.tree(a.at("tree_b"));
    const auto ta = ctx.tree(a.at("tree_a"));
    const auto r = check_based_on(*tb, *ta, get_int(a, "w", 2));
    rep.result = r.to_json(tb->branching);
    return pass_fail(r.pass);
}

std::string op_pair_build(Context& ctx, const Json& a, std::uint64_t, TaskReport& rep)
{
    const auto p = ctx.pair(a.at("pair"));
    std::size_t fresh = 0;
    for (const auto& r : p->log)
        fresh += r.fresh ? 1 : 0;
    rep.result = {{"sizes", p->host.sizes()}, {"h_count", p->h.count()}, {"log", p->log.size()}, {"fresh", fresh},
                  {"closed", p->provenance.closed}};
    rep.files["pair.json"] = dump_canonical(pair_to_json(*p));
    return "result";
}

std::string op_pair_check(Context& ctx, const Json& a, std::uint64_t, TaskReport& rep)
{
    PairExpansion p = *ctx.pair(a.at("pair"));
    const std::string h = get_str(a, "h", "built");
    if (h == "empty" || h == "all") {
        p.h = PredicateSet(p.host.sizes());
        if (h == "all")
            for (const auto& e : p.host.elements())
                p.h.insert(e);
    } else if (h != "built") {
        throw Error("argument 'h' must be built, empty or all");
    }
    const int k = get_int(a, "k", 2);
    const auto d = check_density(p, k);
    const auto c = check_codensity(p, k);
    rep.result = {{"h", h}, {"density", axiom_json(d, p.host.sig())}, {"codensity", axiom_json(c, p.host.sig())}};
    return pass_fail(d.pass && c.pass);
}

std::string op_pair_agreement(Context& ctx, const Json& a, std::uint64_t, TaskReport& rep)
{
    const auto p = ctx.pair(a.at("pair"));
    const Signature& sig = p->host.sig();
    const Formula phi = parse(get_str(a, "phi"), sig);
    const Formula psi = parse(get_str(a, "psi"), sig);
    const Variable x = variable_in({phi, psi}, get_str(a, "x", "x"));
    Assignment params;
    if (a.contains("params"))
        for (const auto& [name, id] : a.at("params").items())
            params[name] = id.get<int>();
    const auto r = check_h_agreement(*p, phi, psi, x, params);
    rep.result = {{"h_restriction", r.h_restriction}, {"difference_small", r.difference_small}};
    if (r.h_witness)
        rep.result["h_witness"] = elem_json(*r.h_witness);
    if (r.diff_witness)
        rep.result["diff_witness"] = elem_json(*r.diff_witness);
    return pass_fail(r.pass());
}

std::string op_pair_mu(Context& ctx, const Json& a, std::uint64_t, TaskReport& rep)
{
    Signature sig;
    if (a.contains("pair"))
        sig = ctx.signature(Kind::pair, a.at("pair"));
    else if (a.contains("class"))
        sig = ctx.cls(a.at("class"))->sig();
    else
        throw Error("pair-mu needs a pair or a class for its signature");
    const Formula theta = parse(get_str(a, "theta"), sig);
    const Formula phi = parse(get_str(a, "phi"), sig);
    const Variable x = variable_in({theta, phi}, get_str(a, "x", "x"));
    const Variable z = variable_in({theta, phi}, get_str(a, "z", "z"));
    const Formula mu = build_mu(theta, phi, x, z);
    Json free = Json::array();
    for (const auto& v : free_variables(mu))
        free.push_back(v.name);
    rep.result = {{"mu", print_formula(mu, sig)}, {"free", free}};
    return "result";
}

const std::vector<OpDef>& ops()
{
    static const std::vector<OpDef> table = {
        {"check-class", {{"class", Kind::cls}, {"structure", Kind::structure}}, {"class", "structure"}, {}, {},
         op_check_class},
        {"check-amalgamation", {{"class", Kind::cls}}, {"class"}, {}, {}, op_check_amalgamation},
        {"enumerate-age", {{"class", Kind::cls}}, {"class", "n"}, {}, {}, op_enumerate_age},
        {"build-stage", {{"chain", Kind::chain}}, {"chain"}, {}, {}, op_build_stage},
        {"check-extension", {{"chain", Kind::chain}, {"structure", Kind::structure}, {"class", Kind::cls}}, {"k"}, {},
         {}, op_check_extension},
        {"apply-cover", {{"class", Kind::cls}, {"structure", Kind::structure}}, {}, {}, {}, op_apply_cover},
        {"apply-pfc", {{"class", Kind::cls}}, {"class"}, {}, {}, op_apply_pfc},
        {"acl-estimate", {{"chain", Kind::chain}}, {"chain", "stage", "stages"}, {}, {}, op_acl_estimate},
        {"classify-growth", {{"chain", Kind::chain}}, {"chain", "formula", "stages"}, {"formula"}, {},
         op_classify_growth},
        {"check-indisc", {{"tree", Kind::tree}}, {"tree", "w"}, {}, {}, op_check_indisc},
        {"check-sop2", {{"tree", Kind::tree}}, {"tree", "formula"}, {"formula"}, {"q"}, op_check_sop2},
        {"check-ktp1", {{"tree", Kind::tree}}, {"tree", "formula", "k"}, {"formula"}, {}, op_check_ktp1},
        {"extract-sop2", {{"tree", Kind::tree}}, {"tree", "formula"}, {"formula"}, {}, op_extract_sop2},
        {"search-sop2", {{"structure", Kind::structure}}, {"structure", "templates"}, {}, {"templates"},
         op_search_sop2},
        {"based-on", {{"tree_b", Kind::tree}, {"tree_a", Kind::tree}}, {"tree_b", "tree_a"}, {}, {}, op_based_on},
        {"pair-build", {{"pair", Kind::pair}}, {"pair"}, {}, {}, op_pair_build},
        {"pair-check", {{"pair", Kind::pair}}, {"pair"}, {}, {}, op_pair_check},
        {"pair-agreement", {{"pair", Kind::pair}}, {"pair", "phi", "psi"}, {"phi", "psi"}, {}, op_pair_agreement},
        {"pair-mu", {{"pair", Kind::pair}, {"class", Kind::cls}}, {"theta", "phi"}, {"theta", "phi"}, {},
         op_pair_mu},
    };
    return table;
}

const OpDef* find_op(const std::string& name)
{
    for (const auto& op : ops())
        if (op.name == name)
            return &op;
    return nullptr;
}

void validate_task(Context& ctx, const ProjectTask& t)
{
    const std::string where = "task '" + t.id + "'";
    const OpDef* op = find_op(t.op);
    if (!op)
        throw Error(where + ": unknown operation '" + t.op + "'");
    for (const auto& key : op->required)
        if (!t.args.contains(key))
            throw Error(where + ": missing argument '" + key + "'");
    std::optional<std::pair<Kind, Json>> sig_source;
    for (const auto& [key, kind] : op->refs)
        if (t.args.contains(key)) {
            try {
                ctx.check(kind, t.args.at(key));
            } catch (const Error& e) {
                throw Error(where + ": " + e.what());
            }
            if (!sig_source)
                sig_source = std::make_pair(kind, t.args.at(key));
        }
    if (op->formulas.empty() && op->formula_lists.empty())
        return;
    if (!sig_source)
        throw Error(where + ": formulas need a referenced entity for their signature");
    Signature sig;
    try {
        sig = ctx.signature(sig_source->first, sig_source->second);
    } catch (const Error& e) {
        throw Error(where + ": " + e.what());
    }
    std::vector<std::string> texts;
    for (const auto& key : op->formulas)
        if (t.args.contains(key))
            texts.push_back(as_text(t.args.at(key)));
    for (const auto& key : op->formula_lists)
        for (const auto& s : get_strs(t.args, key.c_str()))
            texts.push_back(s);
    for (const auto& text : texts) {
        try {
            (void)parse(text, sig);
        } catch (const Error& e) {
            throw Error(where + ": " + e.what());
        }
    }
}

TaskReport run_one(Context& ctx, const ProjectTask& t, std::int64_t budget_ms)
{
    TaskReport rep;
    rep.id = t.id;
    rep.op = t.op;
    rep.args = t.args;
    rep.expect = t.expect;
    rep.seed = task_seed(ctx.seed(), t.id);
    const auto start = std::chrono::steady_clock::now();
    try {
        const OpDef* op = find_op(t.op);
        if (!op)
            throw Error("unknown operation '" + t.op + "'");
        budget::Scope scope(budget_ms);
        rep.outcome = op->run(ctx, t.args, rep.seed, rep);
    } catch (const BudgetExceeded& e) {
        rep.outcome = "error";
        rep.result = {{"error", "budget"}, {"message", e.what()}};
        rep.files.clear();
    } catch (const std::exception& e) {
        rep.outcome = "error";
        rep.result = {{"error", "error"}, {"message", e.what()}};
        rep.files.clear();
    }
    rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (t.expect)
        rep.verdict = rep.outcome == *t.expect ? "pass" : "fail";
    else
        rep.verdict = rep.outcome;
    return rep;
}

} // namespace

std::uint64_t fnv1a(std::string_view text)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t task_seed(std::uint64_t project_seed, std::string_view task_id)
{
    return fnv1a(task_id) ^ project_seed;
}

std::vector<std::string> operation_names()
{
    std::vector<std::string> out;
    for (const auto& op : ops())
        out.push_back(op.name);
    return out;
}

std::string primary_argument(const std::string& op)
{
    const OpDef* def = find_op(op);
    if (!def)
        throw Error("unknown operation '" + op + "'");
    return def->refs.empty() ? std::string() : def->refs.front().first;
}

ProjectSpec project_from_json(const Json& j, const std::filesystem::path& dir)
{
    if (!j.is_object())
        throw Error("a project file holds a JSON object");
    ProjectSpec spec;
    spec.dir = dir;
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned())
            throw Error("project seed must be a non-negative integer");
        spec.seed = j.at("seed").get<std::uint64_t>();
    }
    for (auto [key, field] : {std::pair{"classes", &spec.classes}, std::pair{"chains", &spec.chains},
                              std::pair{"structures", &spec.structures}, std::pair{"trees", &spec.trees},
                              std::pair{"pairs", &spec.pairs}}) {
        if (!j.contains(key))
            continue;
        if (!j.at(key).is_object())
            throw Error(std::string("project section '") + key + "' must be an object");
        *field = j.at(key);
    }
    std::set<std::string> ids;
    if (j.contains("tasks")) {
        if (!j.at("tasks").is_array())
            throw Error("project tasks must be a list");
        for (const auto& tj : j.at("tasks")) {
            ProjectTask t;
            if (!tj.is_object() || !tj.contains("id") || !tj.contains("op"))
                throw Error("every task needs an id and an op: " + tj.dump());
            t.id = tj.at("id").get<std::string>();
            t.op = tj.at("op").get<std::string>();
            if (tj.contains("args")) {
                if (!tj.at("args").is_object())
                    throw Error("task '" + t.id + "': args must be an object");
                t.args = tj.at("args");
            }
            if (tj.contains("expect")) {
                t.expect = tj.at("expect").get<std::string>();
                if (*t.expect != "pass" && *t.expect != "fail" && *t.expect != "error")
                    throw Error("task '" + t.id + "': expect must be pass, fail or error");
            }
            if (!ids.insert(t.id).second)
                throw Error("duplicate task id '" + t.id + "'");
            spec.tasks.push_back(std::move(t));
        }
    }
    Context ctx(spec, spec.seed);
    for (const auto& t : spec.tasks)
        validate_task(ctx, t);
    return spec;
}

ProjectSpec load_project(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path))
        throw Error("project file '" + path.string() + "' does not exist");
    const Json j = read_json_file(path);
    try {
        return project_from_json(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

Json TaskReport::payload() const
{
    Json j{{"id", id}, {"op", op}, {"args", args}, {"outcome", outcome}, {"verdict", verdict},
           {"result", result}, {"seed", seed}};
    if (expect)
        j["expect"] = *expect;
    Json names = Json::array();
    for (const auto& [name, contents] : files)
        names.push_back(name);
    j["files"] = names;
    return j;
}

std::string TaskReport::text() const
{
    std::ostringstream out;
    out << "[" << verdict << "] " << id << " (" << op << ")";
    if (expect)
        out << " expected " << *expect << ", got " << outcome;
    out << "  " << static_cast<long long>(wall_ms) << " ms\n";
    std::string body = result.dump();
    if (body.size() > 400)
        body = body.substr(0, 400) + "...";
    out << "    " << body << "\n";
    return out.str();
}

std::vector<TaskReport> run_project(const ProjectSpec& spec, const RunOptions& options)
{
    std::vector<const ProjectTask*> todo;
    if (options.only.empty()) {
        for (const auto& t : spec.tasks)
            todo.push_back(&t);
    } else {
        for (const auto& id : options.only) {
            auto it = std::find_if(spec.tasks.begin(), spec.tasks.end(), [&](const auto& t) { return t.id == id; });
            if (it == spec.tasks.end())
                throw Error("unknown task id '" + id + "'");
            todo.push_back(&*it);
        }
    }
    Context ctx(spec, options.seed.value_or(spec.seed));
    std::vector<TaskReport> reports(todo.size());
    if (!options.parallel || todo.size() < 2) {
        for (std::size_t i = 0; i < todo.size(); ++i)
            reports[i] = run_one(ctx, *todo[i], options.budget_ms);
        return reports;
    }
    std::atomic<std::size_t> next{0};
    const unsigned workers = std::max(2u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                            static_cast<unsigned>(todo.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < todo.size();)
                reports[i] = run_one(ctx, *todo[i], options.budget_ms);
        });
    for (auto& th : pool)
        th.join();
    return reports;
}

int exit_status(const std::vector<TaskReport>& reports)
{
    bool failed = false;
    for (const auto& r : reports) {
        if (r.verdict == "error")
            return 2;
        failed = failed || r.verdict == "fail";
    }
    return failed ? 1 : 0;
}

void write_reports(const std::filesystem::path& dir, const std::vector<TaskReport>& reports)
{
    std::filesystem::create_directories(dir);
    Json summary = Json::array();
    Json timing = Json::object();
    for (const auto& r : reports) {
        write_text_file(dir / (r.id + ".json"), dump_canonical(r.payload()));
        write_text_file(dir / (r.id + ".txt"), r.text());
        for (const auto& [name, contents] : r.files) {
            std::filesystem::create_directories(dir / r.id);
            write_text_file(dir / r.id / name, contents);
        }
        summary.push_back({{"id", r.id}, {"verdict", r.verdict}});
        timing[r.id] = r.wall_ms;
    }
    write_text_file(dir / "summary.json", dump_canonical({{"tasks", summary}, {"exit", exit_status(reports)}}));
    write_text_file(dir / "timing.json", dump_canonical(timing));
}

} // namespace forge
