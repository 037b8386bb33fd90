#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sst/datagen.hpp"
#include "sst/numerics.hpp"

namespace sst {

struct IstDims {
    std::size_t feature_dim = 0;  // D; the predictor input is 2D
    std::size_t hidden1 = 0;
    std::size_t hidden2 = 0;
};

// Pairwise co-occurrence predictor: three affine layers 2D -> hidden1 (ReLU)
// -> hidden2 (ReLU) -> 1 (sigmoid) applied to [f_i, f_j].
class IstPredictor {
public:
    IstPredictor() = default;
    IstPredictor(ParamStore& store, const IstDims& dims, std::uint64_t seed);
    static IstPredictor bind(const ParamStore& store, const IstDims& dims);

    const IstDims& dims() const { return dims_; }
    std::vector<ParamId> ids() const { return {w1, b1, w2, b2, w3, b3}; }

    ParamId w1, b1, w2, b2, w3, b3;

private:
    IstDims dims_;
};

using CategoryPair = std::pair<std::size_t, std::size_t>;

// Per-image co-occurrence matrix. Entry (i, j) is the predicted probability
// that i co-occurs with j. The diagonal is unused and left at 0.
struct CooccurrenceMatrix {
    Matrix probs;
    std::size_t pairs_evaluated = 0;
};

// Cached forward pass over a chosen list of ordered pairs.
struct PairForward {
    std::vector<CategoryPair> pairs;
    Matrix left;     // C x hidden1, W1[:, :D] f_c
    Matrix right;    // C x hidden1, W1[:, D:] f_c
    Matrix hidden1;  // pairs x hidden1, post-ReLU
    Matrix hidden2;  // pairs x hidden2, post-ReLU
    std::vector<double> probs;
    std::vector<bool> clamped;
};

PairForward forward_pairs(const ParamStore& store, const IstPredictor& predictor, const Matrix& features,
                          std::vector<CategoryPair> pairs);

// Accumulates predictor gradients and returns dLoss/dFeatures (C x D).
Matrix backward_pairs(ParamStore& store, const IstPredictor& predictor, const Matrix& features,
                      const PairForward& fwd, const std::vector<double>& d_probs);

// Writes the evaluated pairs into a C x C matrix.
CooccurrenceMatrix to_matrix(const PairForward& fwd, std::size_t categories);

// Every ordered pair i != j.
CooccurrenceMatrix predict_cooccurrence(const ParamStore& store, const IstPredictor& predictor,
                                        const Matrix& features);

// For each unknown i: positive iff sum over known positives j of P(i, j) >= threshold.
// Known labels are copied through.
LabelVector generate_intra_pseudo(const Matrix& cooccurrence, const LabelVector& labels, double threshold);

struct IstLossConfig {
    double gamma_pos = 1.0;  // gamma_1
    double gamma_neg = 2.0;  // gamma_2
    double margin = 0.05;    // m
};

struct IstLossResult {
    double loss = 0.0;
    std::size_t pairs = 0;  // fully-known ordered pairs that contributed
    Matrix d_probs;         // dLoss/dP, C x C
};

// Asymmetric loss over ordered pairs where both labels are known. A pair is
// positive when both labels are +1.
IstLossResult ist_loss(const Matrix& cooccurrence, const LabelVector& labels, const IstLossConfig& cfg);

// Pairs needed to train and generate for one image: fully-known pairs (loss)
// and (unknown, known-positive) pairs (generation).
std::vector<CategoryPair> pairs_for_training(const LabelVector& labels, bool need_loss, bool need_generation);

}  // namespace sst
