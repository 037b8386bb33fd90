#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "sst/numerics.hpp"

namespace sst {

// Label coding: -1 negative, 0 unknown, +1 positive.
using LabelVector = std::vector<std::int8_t>;

// Checks the {-1, 0, +1} alphabet; throws otherwise.
void validate_labels(const LabelVector& labels);
std::size_t known_count(const LabelVector& labels);

// Synthetic world with a known category co-occurrence structure.
struct World {
    std::size_t categories = 0;
    std::size_t raw_dim = 0;
    Matrix prototypes;        // C x D_raw, unit-norm rows
    Matrix gt_cooccurrence;   // C x C, symmetric, unit diagonal
    std::vector<double> base_rates;
    double noise_sigma = 0.0;
    double distractor_rate = 2.0;  // Poisson mean of pure-noise regions per image
};

struct Sample {
    std::uint64_t id = 0;
    Matrix regions;  // R x D_raw
    LabelVector full_labels;
    LabelVector partial_labels;
};

using Dataset = std::vector<Sample>;

// Mixes a base seed with a stream tag and an index (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0);

World sample_world(std::uint64_t seed, std::size_t categories, std::size_t raw_dim,
                   double link_density, double noise_sigma, double distractor_rate = 2.0);

// Draws one image with full labels; partial_labels is set equal to full_labels.
Sample sample_image(const World& world, std::uint64_t seed);

// Keeps exactly max(1, round(known_proportion * C)) labels, chosen uniformly.
LabelVector drop_labels(const LabelVector& full_labels, double known_proportion, std::uint64_t seed);

// `count` images with ids [first_id, first_id + count). Labels are dropped when
// known_proportion < 1.
Dataset make_dataset(const World& world, std::size_t count, double known_proportion,
                     std::uint64_t seed, std::uint64_t first_id = 0);

// Re-draws the partial labels of an existing dataset at a new proportion.
Dataset with_known_proportion(Dataset data, double known_proportion, std::uint64_t seed);

// Line-delimited records {id, regions, full_labels, partial_labels}.
nlohmann::json sample_to_json(const Sample& s);
Sample sample_from_json(const nlohmann::json& j);
void write_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& path);

nlohmann::json world_to_json(const World& w);
World world_from_json(const nlohmann::json& j);

}  // namespace sst
