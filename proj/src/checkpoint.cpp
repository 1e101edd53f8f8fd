#include "vpq/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace vpq {

using nlohmann::json;

json net_to_json(const DenseNet& net) {
    json j;
    j["layer_dims"] = net.layer_dims;
    j["weights"] = net.weights;
    j["biases"] = net.biases;
    return j;
}

DenseNet net_from_json(const json& j) {
    try {
        DenseNet net = DenseNet::zeros(j.at("layer_dims").get<std::vector<int>>());
        auto weights = j.at("weights").get<std::vector<Vec>>();
        auto biases = j.at("biases").get<std::vector<Vec>>();
        if (weights.size() != net.weights.size() || biases.size() != net.biases.size()) {
            throw DataError("checkpoint: layer count does not match layer_dims");
        }
        for (std::size_t l = 0; l < weights.size(); ++l) {
            if (weights[l].size() != net.weights[l].size() ||
                biases[l].size() != net.biases[l].size()) {
                throw DataError("checkpoint: parameter array shape mismatch");
            }
        }
        net.weights = std::move(weights);
        net.biases = std::move(biases);
        return net;
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint: malformed net record: ") + e.what());
    }
}

json table_to_json(const EmbeddingTable& table) {
    json j;
    j["catalog"] = table.catalog;
    j["dim"] = table.dim;
    j["data"] = table.data;
    return j;
}

EmbeddingTable table_from_json(const json& j) {
    try {
        EmbeddingTable table = EmbeddingTable::zeros(j.at("catalog").get<int>(),
                                                     j.at("dim").get<int>());
        auto data = j.at("data").get<Vec>();
        if (data.size() != table.data.size()) {
            throw DataError("checkpoint: embedding table size mismatch");
        }
        table.data = std::move(data);
        return table;
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint: malformed table record: ") + e.what());
    }
}

json wrap_checkpoint(json body) {
    body["format"] = kCheckpointFormat;
    body["version"] = kCheckpointVersion;
    return body;
}

json unwrap_checkpoint(const json& j) {
    if (!j.is_object() || j.value("format", std::string{}) != kCheckpointFormat) {
        throw DataError("checkpoint: missing or wrong format tag");
    }
    if (j.value("version", 0) != kCheckpointVersion) {
        throw DataError("checkpoint: unsupported version");
    }
    return j;
}

void write_text_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open for writing: " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw DataError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw DataError("cannot move into place: " + path);
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace vpq
