#pragma once

#include "forge/structure.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace forge {

using Json = nlohmann::json;

[[nodiscard]] Json signature_to_json(const Signature& sig);
[[nodiscard]] Signature signature_from_json(const Json& j);

// {"signature":…, "universe": {sort: [ids]}, "tables": {relation: [[ids]]}}
[[nodiscard]] Json structure_to_json(const FinStructure& s);
[[nodiscard]] FinStructure structure_from_json(const Json& j);

[[nodiscard]] Json embedding_to_json(const Signature& sig, const Embedding& e);

// Key-sorted, two-space indented, trailing newline.
[[nodiscard]] std::string dump_canonical(const Json& j);
[[nodiscard]] Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace forge
