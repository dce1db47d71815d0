#include "forge/json_io.hpp"

#include "forge/error.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace forge {

Json signature_to_json(const Signature& sig)
{
    Json rels = Json::array();
    for (int r = 0; r < sig.relation_count(); ++r) {
        const auto d = sig.decl(r);
        Json flags = Json::array();
        for (auto f : {kSymmetric, kReflexive, kIrreflexive})
            if (d.flags & f)
                flags.push_back(flag_name(f));
        rels.push_back({{"name", d.name}, {"profile", d.profile}, {"flags", flags}});
    }
    return {{"sorts", sig.sorts()}, {"relations", rels}};
}

Signature signature_from_json(const Json& j)
{
    try {
        std::vector<std::string> sorts = j.at("sorts").get<std::vector<std::string>>();
        std::vector<RelationDecl> decls;
        for (const auto& r : j.at("relations")) {
            RelationDecl d;
            d.name = r.at("name").get<std::string>();
            d.profile = r.at("profile").get<std::vector<std::string>>();
            if (r.contains("flags"))
                for (const auto& f : r.at("flags"))
                    d.flags |= parse_flag(f.get<std::string>());
            decls.push_back(std::move(d));
        }
        return Signature(std::move(sorts), decls);
    } catch (const Json::exception& e) {
        throw Error(std::string("malformed signature: ") + e.what());
    }
}

Json structure_to_json(const FinStructure& s)
{
    const auto& sig = s.sig();
    Json universe = Json::object();
    for (int k = 0; k < sig.sort_count(); ++k) {
        Json ids = Json::array();
        for (int i = 0; i < s.size(k); ++i)
            ids.push_back(i);
        universe[sig.sort_name(k)] = ids;
    }
    Json tables = Json::object();
    for (int r = 0; r < sig.relation_count(); ++r)
        tables[sig.relation(r).name] = s.table(r);
    return {{"signature", signature_to_json(sig)}, {"universe", universe}, {"tables", tables}};
}

FinStructure structure_from_json(const Json& j)
{
    Signature sig = signature_from_json(j.at("signature"));
    try {
        std::vector<int> sizes(sig.sort_count(), 0);
        if (j.contains("universe"))
            for (const auto& [name, ids] : j.at("universe").items()) {
                const int k = sig.sort_index(name);
                auto v = ids.get<std::vector<int>>();
                std::sort(v.begin(), v.end());
                for (int i = 0; i < static_cast<int>(v.size()); ++i)
                    if (v[i] != i)
                        throw Error("universe of sort '" + name + "' must be the dense ids 0..n-1");
                sizes[k] = static_cast<int>(v.size());
            }
        std::vector<std::vector<Tuple>> tables(sig.relation_count());
        if (j.contains("tables"))
            for (const auto& [name, rows] : j.at("tables").items())
                tables[sig.relation_index(name)] = rows.get<std::vector<Tuple>>();
        return FinStructure(std::move(sig), std::move(sizes), std::move(tables));
    } catch (const Json::exception& e) {
        throw Error(std::string("malformed structure document: ") + e.what());
    }
}

Json embedding_to_json(const Signature& sig, const Embedding& e)
{
    Json out = Json::object();
    for (int k = 0; k < sig.sort_count() && k < static_cast<int>(e.map.size()); ++k)
        out[sig.sort_name(k)] = e.map[k];
    return out;
}

std::string dump_canonical(const Json& j) { return j.dump(2) + "\n"; }

Json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open '" + path.string() + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error("JSON parse error in '" + path.string() + "' at byte " + std::to_string(e.byte) + ": " +
                    e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out << text;
}

} // namespace forge
