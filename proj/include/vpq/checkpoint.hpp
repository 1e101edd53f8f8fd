#pragma once

#include <string>

#include <json.hpp>

#include "vpq/encoder.hpp"
#include "vpq/net.hpp"

namespace vpq {

// Model containers are JSON with format tag "vpqlab-checkpoint", version 1.
// Parameters are flat row-major arrays of doubles, which survive the JSON
// round trip losslessly. Full schema in docs/FORMATS.md.
constexpr const char* kCheckpointFormat = "vpqlab-checkpoint";
constexpr int kCheckpointVersion = 1;

nlohmann::json net_to_json(const DenseNet& net);
DenseNet net_from_json(const nlohmann::json& j); // throws DataError on bad shape

nlohmann::json table_to_json(const EmbeddingTable& table);
EmbeddingTable table_from_json(const nlohmann::json& j);

// Envelope helpers: wrap adds the format/version fields, unwrap validates
// them and returns the body.
nlohmann::json wrap_checkpoint(nlohmann::json body);
nlohmann::json unwrap_checkpoint(const nlohmann::json& j);

// Atomic text IO: write to a sibling temp file, then rename into place, so a
// reader never sees a half-written file.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path); // throws DataError if unreadable

} // namespace vpq
