#include "sst/checkpoint.hpp"

#include <fstream>

namespace sst {

using nlohmann::json;

json checkpoint_to_json(const CheckpointHeader& header, const ParamStore& store, const json& extra) {
    json doc;
    doc["format_version"] = header.format_version;
    doc["C"] = header.categories;
    doc["D"] = header.feature_dim;
    doc["R"] = header.regions_dim;
    doc["seed"] = header.seed;
    doc["extra"] = extra;
    json tensors = json::array();
    for (std::size_t i = 0; i < store.count(); ++i) {
        const ParamId pid{i};
        const auto& v = store.value(pid);
        tensors.push_back({{"name", store.name(pid)},
                           {"shape", {v.rows(), v.cols()}},
                           {"data", v.data()}});
    }
    doc["tensors"] = std::move(tensors);
    return doc;
}

CheckpointHeader read_checkpoint_header(const json& doc) {
    try {
        CheckpointHeader h;
        h.format_version = doc.at("format_version").get<int>();
        h.categories = doc.at("C").get<std::size_t>();
        h.feature_dim = doc.at("D").get<std::size_t>();
        h.regions_dim = doc.at("R").get<std::size_t>();
        h.seed = doc.at("seed").get<std::uint64_t>();
        return h;
    } catch (const json::exception& e) {
        throw Error(std::string("checkpoint: malformed header: ") + e.what());
    }
}

void checkpoint_from_json(const json& doc, const CheckpointHeader& expected, ParamStore& store) {
    const auto h = read_checkpoint_header(doc);
    if (h.format_version != kCheckpointFormatVersion) {
        throw Error("checkpoint: unsupported format_version " + std::to_string(h.format_version));
    }
    if (h.categories != expected.categories || h.feature_dim != expected.feature_dim ||
        h.regions_dim != expected.regions_dim) {
        throw Error("checkpoint: header dimensions do not match the model");
    }
    const auto& tensors = doc.at("tensors");
    for (std::size_t i = 0; i < store.count(); ++i) {
        const ParamId pid{i};
        const auto& name = store.name(pid);
        const json* found = nullptr;
        for (const auto& t : tensors) {
            if (t.at("name").get<std::string>() == name) {
                found = &t;
                break;
            }
        }
        if (found == nullptr) throw Error("checkpoint: missing tensor '" + name + "'");
        auto& dst = store.value(pid);
        const auto shape = found->at("shape").get<std::vector<std::size_t>>();
        if (shape.size() != 2 || shape[0] != dst.rows() || shape[1] != dst.cols()) {
            throw Error("checkpoint: shape mismatch for tensor '" + name + "'");
        }
        auto data = found->at("data").get<std::vector<double>>();
        if (data.size() != dst.size()) throw Error("checkpoint: data length mismatch for '" + name + "'");
        dst = Matrix(shape[0], shape[1], std::move(data));
    }
}

void save_checkpoint(const std::filesystem::path& path, const CheckpointHeader& header,
                     const ParamStore& store, const json& extra) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << checkpoint_to_json(header, store, extra).dump() << '\n';
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error("cannot parse '" + path.string() + "': " + e.what());
    }
}

}  // namespace sst
