#include "sst/ist.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sst/model.hpp"

namespace sst {

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Matrix m(rows, cols);
    for (auto& v : m.data()) v = dist(rng);
    return m;
}

// Splits W1 (hidden1 x 2D) into the halves acting on f_i and f_j.
std::pair<Matrix, Matrix> split_first_layer(const Matrix& w1, std::size_t D) {
    Matrix left(w1.rows(), D), right(w1.rows(), D);
    for (std::size_t r = 0; r < w1.rows(); ++r) {
        for (std::size_t d = 0; d < D; ++d) {
            left(r, d) = w1(r, d);
            right(r, d) = w1(r, D + d);
        }
    }
    return {std::move(left), std::move(right)};
}

}  // namespace

IstPredictor::IstPredictor(ParamStore& store, const IstDims& dims, std::uint64_t seed) : dims_(dims) {
    if (dims.feature_dim == 0 || dims.hidden1 == 0 || dims.hidden2 == 0) {
        throw Error("IstPredictor: all dimensions must be positive");
    }
    std::mt19937_64 rng(seed);
    const auto in = 2 * dims.feature_dim;
    w1 = store.add("ist.w1", gaussian(dims.hidden1, in, std::sqrt(2.0 / static_cast<double>(in)), rng));
    b1 = store.add("ist.b1", Matrix(1, dims.hidden1, 0.01));
    w2 = store.add("ist.w2", gaussian(dims.hidden2, dims.hidden1, std::sqrt(2.0 / static_cast<double>(dims.hidden1)), rng));
    b2 = store.add("ist.b2", Matrix(1, dims.hidden2, 0.01));
    w3 = store.add("ist.w3", gaussian(1, dims.hidden2, 0.01, rng));
    b3 = store.add("ist.b3", Matrix(1, 1, 0.0));
}

IstPredictor IstPredictor::bind(const ParamStore& store, const IstDims& dims) {
    IstPredictor p;
    p.dims_ = dims;
    p.w1 = store.id("ist.w1");
    p.b1 = store.id("ist.b1");
    p.w2 = store.id("ist.w2");
    p.b2 = store.id("ist.b2");
    p.w3 = store.id("ist.w3");
    p.b3 = store.id("ist.b3");
    return p;
}

PairForward forward_pairs(const ParamStore& store, const IstPredictor& predictor, const Matrix& features,
                          std::vector<CategoryPair> pairs) {
    const auto& dims = predictor.dims();
    if (features.cols() != dims.feature_dim) throw Error("ist: feature width does not match predictor");
    const std::size_t C = features.rows();
    for (const auto& [i, j] : pairs) {
        if (i >= C || j >= C) throw Error("ist: pair index out of range");
    }

    PairForward f;
    f.pairs = std::move(pairs);
    const auto [wl, wr] = split_first_layer(store.value(predictor.w1), dims.feature_dim);
    f.left = matmul_nt(features, wl);
    f.right = matmul_nt(features, wr);

    const auto& b1 = store.value(predictor.b1);
    const auto& w2 = store.value(predictor.w2);
    const auto& b2 = store.value(predictor.b2);
    const auto& w3 = store.value(predictor.w3);
    const double b3 = store.value(predictor.b3)[0];

    const std::size_t n = f.pairs.size();
    f.hidden1 = Matrix(n, dims.hidden1);
    f.hidden2 = Matrix(n, dims.hidden2);
    f.probs.resize(n);
    f.clamped.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto [i, j] = f.pairs[k];
        auto h1 = f.hidden1.row(k);
        for (std::size_t u = 0; u < dims.hidden1; ++u) h1[u] = std::max(0.0, f.left(i, u) + f.right(j, u) + b1[u]);
        auto h2 = f.hidden2.row(k);
        for (std::size_t u = 0; u < dims.hidden2; ++u) h2[u] = std::max(0.0, dot(w2.row(u), h1) + b2[u]);
        const double p = sigmoid(dot(w3.row(0), h2) + b3);
        f.probs[k] = clamp_score(p);
        f.clamped[k] = f.probs[k] != p;
    }
    return f;
}

Matrix backward_pairs(ParamStore& store, const IstPredictor& predictor, const Matrix& features,
                      const PairForward& fwd, const std::vector<double>& d_probs) {
    const auto& dims = predictor.dims();
    const std::size_t C = features.rows(), D = dims.feature_dim;
    const auto& w2 = store.value(predictor.w2);
    const auto& w3 = store.value(predictor.w3);
    auto& gw2 = store.grad(predictor.w2);
    auto& gb2 = store.grad(predictor.b2);
    auto& gw3 = store.grad(predictor.w3);
    auto& gb3 = store.grad(predictor.b3);
    auto& gb1 = store.grad(predictor.b1);

    Matrix d_left(C, dims.hidden1), d_right(C, dims.hidden1);
    std::vector<double> d_h2(dims.hidden2), d_h1(dims.hidden1);
    for (std::size_t k = 0; k < fwd.pairs.size(); ++k) {
        if (d_probs[k] == 0.0 || fwd.clamped[k]) continue;
        const double p = fwd.probs[k];
        const double d_logit = d_probs[k] * p * (1.0 - p);
        auto h2 = fwd.hidden2.row(k);
        auto h1 = fwd.hidden1.row(k);
        axpy(d_logit, h2, gw3.row(0));
        gb3[0] += d_logit;

        std::fill(d_h1.begin(), d_h1.end(), 0.0);
        for (std::size_t u = 0; u < dims.hidden2; ++u) {
            d_h2[u] = h2[u] > 0.0 ? d_logit * w3[u] : 0.0;
            if (d_h2[u] == 0.0) continue;
            axpy(d_h2[u], h1, gw2.row(u));
            gb2[u] += d_h2[u];
            axpy(d_h2[u], w2.row(u), d_h1);
        }
        const auto [i, j] = fwd.pairs[k];
        for (std::size_t u = 0; u < dims.hidden1; ++u) {
            if (h1[u] <= 0.0) continue;
            gb1[u] += d_h1[u];
            d_left(i, u) += d_h1[u];
            d_right(j, u) += d_h1[u];
        }
    }

    // left = F * Wl^T, right = F * Wr^T
    const auto [wl, wr] = split_first_layer(store.value(predictor.w1), D);
    Matrix gl(dims.hidden1, D), gr(dims.hidden1, D);
    add_matmul_tn(d_left, features, gl);
    add_matmul_tn(d_right, features, gr);
    auto& gw1 = store.grad(predictor.w1);
    for (std::size_t r = 0; r < dims.hidden1; ++r) {
        for (std::size_t d = 0; d < D; ++d) {
            gw1(r, d) += gl(r, d);
            gw1(r, D + d) += gr(r, d);
        }
    }
    Matrix d_features = matmul(d_left, wl);
    const Matrix d_from_right = matmul(d_right, wr);
    for (std::size_t k = 0; k < d_features.size(); ++k) d_features[k] += d_from_right[k];
    return d_features;
}

CooccurrenceMatrix to_matrix(const PairForward& fwd, std::size_t categories) {
    CooccurrenceMatrix out{Matrix(categories, categories), fwd.pairs.size()};
    for (std::size_t k = 0; k < fwd.pairs.size(); ++k) {
        out.probs(fwd.pairs[k].first, fwd.pairs[k].second) = fwd.probs[k];
    }
    return out;
}

CooccurrenceMatrix predict_cooccurrence(const ParamStore& store, const IstPredictor& predictor,
                                        const Matrix& features) {
    const std::size_t C = features.rows();
    std::vector<CategoryPair> pairs;
    pairs.reserve(C * (C - 1));
    for (std::size_t i = 0; i < C; ++i) {
        for (std::size_t j = 0; j < C; ++j) {
            if (i != j) pairs.emplace_back(i, j);
        }
    }
    return to_matrix(forward_pairs(store, predictor, features, std::move(pairs)), C);
}

LabelVector generate_intra_pseudo(const Matrix& cooccurrence, const LabelVector& labels, double threshold) {
    const std::size_t C = labels.size();
    if (cooccurrence.rows() != C || cooccurrence.cols() != C) throw Error("generate_intra_pseudo: shape mismatch");
    if (!(threshold > 0.0)) throw Error("generate_intra_pseudo: threshold must be positive");
    LabelVector out = labels;
    for (std::size_t i = 0; i < C; ++i) {
        if (labels[i] != 0) continue;
        double evidence = 0.0;
        for (std::size_t j = 0; j < C; ++j) {
            if (labels[j] == 1) evidence += cooccurrence(i, j);
        }
        if (evidence >= threshold) out[i] = 1;
    }
    return out;
}

IstLossResult ist_loss(const Matrix& cooccurrence, const LabelVector& labels, const IstLossConfig& cfg) {
    const std::size_t C = labels.size();
    if (cooccurrence.rows() != C || cooccurrence.cols() != C) throw Error("ist_loss: shape mismatch");
    IstLossResult out;
    out.d_probs = Matrix(C, C);
    for (std::size_t i = 0; i < C; ++i) {
        if (labels[i] == 0) continue;
        for (std::size_t j = 0; j < C; ++j) {
            if (i == j || labels[j] == 0) continue;
            const double p = clamp_score(cooccurrence(i, j));
            ++out.pairs;
            if (labels[i] == 1 && labels[j] == 1) {
                const double weight = std::pow(1.0 - p, cfg.gamma_pos);
                const double d_weight =
                    cfg.gamma_pos == 0.0 ? 0.0 : -cfg.gamma_pos * std::pow(1.0 - p, cfg.gamma_pos - 1.0);
                out.loss -= weight * std::log(p);
                out.d_probs(i, j) = -(d_weight * std::log(p) + weight / p);
            } else {
                const double q = p - cfg.margin;
                if (q <= 0.0) continue;
                const double weight = std::pow(q, cfg.gamma_neg);
                const double d_weight = cfg.gamma_neg == 0.0 ? 0.0 : cfg.gamma_neg * std::pow(q, cfg.gamma_neg - 1.0);
                out.loss -= weight * std::log(1.0 - q);
                out.d_probs(i, j) = -(d_weight * std::log(1.0 - q) - weight / (1.0 - q));
            }
        }
    }
    return out;
}

std::vector<CategoryPair> pairs_for_training(const LabelVector& labels, bool need_loss, bool need_generation) {
    const std::size_t C = labels.size();
    std::vector<CategoryPair> pairs;
    for (std::size_t i = 0; i < C; ++i) {
        for (std::size_t j = 0; j < C; ++j) {
            if (i == j) continue;
            const bool loss_pair = need_loss && labels[i] != 0 && labels[j] != 0;
            const bool gen_pair = need_generation && labels[i] == 0 && labels[j] == 1;
            if (loss_pair || gen_pair) pairs.emplace_back(i, j);
        }
    }
    return pairs;
}

}  // namespace sst
