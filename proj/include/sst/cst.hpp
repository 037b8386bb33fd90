#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "sst/datagen.hpp"
#include "sst/numerics.hpp"

namespace sst {

struct CosineResult {
    double value = 0.0;
    bool degenerate = false;  // a zero-norm input; value is 0
};

CosineResult cosine_similarity(std::span<const double> f, std::span<const double> g);

// Adds dSim/df * upstream into d_f and dSim/dg * upstream into d_g.
void cosine_backward(std::span<const double> f, std::span<const double> g, double upstream,
                     std::span<double> d_f, std::span<double> d_g);

// Per-category FIFO of detached feature snapshots taken from samples whose
// label for that category is known-positive.
class ExemplarMemory {
public:
    struct Entry {
        std::uint64_t sample_id = 0;
        std::vector<double> feature;
    };

    ExemplarMemory() = default;
    ExemplarMemory(std::size_t categories, std::size_t capacity);

    std::size_t categories() const { return buckets_.size(); }
    std::size_t capacity() const { return capacity_; }
    const std::deque<Entry>& bucket(std::size_t c) const { return buckets_.at(c); }
    std::size_t total_size() const;

    // Only call for a known-positive label; enforces the capacity.
    void push(std::size_t category, std::uint64_t sample_id, std::span<const double> feature);

private:
    std::size_t capacity_ = 0;
    std::vector<std::deque<Entry>> buckets_;
};

// Pushes f_c for every category c with a known-positive label.
void update_memory(ExemplarMemory& memory, const Matrix& features, const LabelVector& labels,
                   std::uint64_t sample_id);

// Mean similarity of f_c to the bucket for c, or nullopt for an empty bucket.
std::vector<std::optional<double>> mean_exemplar_similarity(const Matrix& features, const ExemplarMemory& memory);

// For each unknown c with a non-empty bucket: positive iff the mean cosine
// similarity to the bucket is >= threshold. Known labels are copied through.
LabelVector generate_cross_pseudo(const Matrix& features, const LabelVector& labels, const ExemplarMemory& memory,
                                  double threshold);

struct CstLossResult {
    double loss = 0.0;
    std::size_t triples = 0;
    std::vector<Matrix> d_features;  // one C x D gradient per sample
};

// Pair ranking loss over sample pairs n < m and categories where both labels
// are known: 1 - s when both are positive, 1 + s otherwise. Mean over triples.
CstLossResult cst_loss(std::span<const Matrix> features, std::span<const LabelVector> labels);

}  // namespace sst
