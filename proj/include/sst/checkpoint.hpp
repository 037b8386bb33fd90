#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "sst/numerics.hpp"

namespace sst {

inline constexpr int kCheckpointFormatVersion = 1;

// Checkpoint header. `regions_dim` is the raw region feature width (R in the
// on-disk header).
struct CheckpointHeader {
    int format_version = kCheckpointFormatVersion;
    std::size_t categories = 0;
    std::size_t feature_dim = 0;
    std::size_t regions_dim = 0;
    std::uint64_t seed = 0;
};

// JSON document: {"format_version","C","D","R","seed","extra",
// "tensors":[{"name","shape":[r,c],"data":[...]}]}. `extra` carries free-form
// metadata (the resolved run configuration).
nlohmann::json checkpoint_to_json(const CheckpointHeader& header, const ParamStore& store,
                                  const nlohmann::json& extra = nlohmann::json::object());

// Copies tensor values from `doc` into `store`. Every tensor in `store` must be
// present with an identical shape, and the header must match `expected`.
void checkpoint_from_json(const nlohmann::json& doc, const CheckpointHeader& expected,
                          ParamStore& store);

CheckpointHeader read_checkpoint_header(const nlohmann::json& doc);

void save_checkpoint(const std::filesystem::path& path, const CheckpointHeader& header,
                     const ParamStore& store, const nlohmann::json& extra = nlohmann::json::object());
nlohmann::json load_json_file(const std::filesystem::path& path);

}  // namespace sst
