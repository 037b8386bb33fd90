#pragma once

#include <cstdint>
#include <vector>

#include "sst/datagen.hpp"
#include "sst/numerics.hpp"

namespace sst {

struct SarlDims {
    std::size_t categories = 0;   // C
    std::size_t raw_dim = 0;      // D_raw
    std::size_t hidden_dim = 0;   // H
    std::size_t feature_dim = 0;  // D
};

// Semantic-aware representation learner: shared two-layer backbone over
// region features (ReLU hidden layer, linear output), bilinear attention from
// per-category embeddings, and one linear classifier + sigmoid per category.
// The category feature is the attention-pooled representation scaled
// elementwise by that category's classifier weights, so the score is
// sigmoid(sum(f_c) + b_c). Holds only ids into a ParamStore.
class SarlParams {
public:
    SarlParams() = default;
    SarlParams(ParamStore& store, const SarlDims& dims, std::uint64_t seed);

    // Re-binds to an existing store laid out by the constructor.
    static SarlParams bind(const ParamStore& store, const SarlDims& dims);

    const SarlDims& dims() const { return dims_; }
    std::vector<ParamId> ids() const;

    ParamId backbone_w1, backbone_b1, backbone_w2, backbone_b2;
    ParamId category_embeddings, attention_projection;
    ParamId classifier_w, classifier_b;

private:
    SarlDims dims_;
};

// Everything produced by one forward pass that backward needs.
struct SarlForward {
    Matrix hidden1;      // R x H, post-ReLU
    Matrix region_repr;  // R x D, h_r (linear)
    Matrix keys;         // R x D, W_attn h_r
    Matrix attention;    // C x R, rows sum to 1
    Matrix pooled;       // C x D, attention-weighted h_r
    Matrix features;     // C x D, f_c = pooled (.) classifier weights
    std::vector<double> scores;        // clamped sigmoid outputs
    std::vector<bool> score_clamped;   // true where the clamp was active
};

SarlForward forward_sarl(const ParamStore& store, const SarlParams& params, const Matrix& regions);

// Accumulates parameter gradients given dLoss/dFeatures (C x D, may be empty)
// and dLoss/dScores (size C, may be empty).
void backward_sarl(ParamStore& store, const SarlParams& params, const Matrix& regions,
                   const SarlForward& fwd, const Matrix& d_features, const std::vector<double>& d_scores);

struct BceResult {
    double loss = 0.0;
    bool skipped = false;          // no known labels
    std::vector<double> d_scores;  // dLoss/dScores
};

// Negated mean log-likelihood over the known (non-zero) labels.
BceResult partial_bce(const std::vector<double>& scores, const LabelVector& labels);

double clamp_score(double p);

}  // namespace sst
