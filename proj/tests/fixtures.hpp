#pragma once

#include <random>
#include <vector>

#include "sst/datagen.hpp"
#include "sst/numerics.hpp"

namespace fixtures {

inline sst::Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    sst::Matrix m(rows, cols);
    for (auto& v : m.data()) v = dist(rng);
    return m;
}

// Labels over {-1, 0, +1} with at least one known entry.
inline sst::LabelVector random_partial(std::size_t C, std::mt19937_64& rng) {
    sst::LabelVector y(C);
    for (auto& v : y) v = static_cast<std::int8_t>(static_cast<int>(rng() % 3) - 1);
    if (sst::known_count(y) == 0) y[0] = 1;
    return y;
}

inline std::vector<double> uniform_scores(std::size_t C, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.05, 0.95);
    std::vector<double> s(C);
    for (auto& v : s) v = unit(rng);
    return s;
}

}  // namespace fixtures
