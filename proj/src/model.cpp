#include "sst/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace sst {

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Matrix m(rows, cols);
    for (auto& v : m.data()) v = dist(rng);
    return m;
}

void relu_inplace(Matrix& m) {
    for (auto& v : m.data()) v = std::max(0.0, v);
}

// out = x * w^T + b, with b a 1 x out_dim row.
Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
    Matrix out = matmul_nt(x, w);
    for (std::size_t r = 0; r < out.rows(); ++r) axpy(1.0, b.row(0), out.row(r));
    return out;
}

// Backprop through out = x w^T + b given dOut; returns dX.
Matrix affine_backward(const Matrix& x, const Matrix& d_out, const Matrix& w, Matrix& d_w, Matrix& d_b) {
    add_matmul_tn(d_out, x, d_w);
    for (std::size_t r = 0; r < d_out.rows(); ++r) axpy(1.0, d_out.row(r), d_b.row(0));
    return matmul(d_out, w);
}

}  // namespace

double clamp_score(double p) { return std::clamp(p, kScoreEps, 1.0 - kScoreEps); }

SarlParams::SarlParams(ParamStore& store, const SarlDims& dims, std::uint64_t seed) : dims_(dims) {
    if (dims.categories == 0 || dims.raw_dim == 0 || dims.hidden_dim == 0 || dims.feature_dim == 0) {
        throw Error("SarlParams: all dimensions must be positive");
    }
    std::mt19937_64 rng(seed);
    const auto C = dims.categories, Dr = dims.raw_dim, H = dims.hidden_dim, D = dims.feature_dim;
    backbone_w1 = store.add("sarl.backbone.w1", gaussian(H, Dr, std::sqrt(2.0 / static_cast<double>(Dr)), rng));
    backbone_b1 = store.add("sarl.backbone.b1", Matrix(1, H, -0.2));
    backbone_w2 = store.add("sarl.backbone.w2", gaussian(D, H, std::sqrt(2.0 / static_cast<double>(H)), rng));
    backbone_b2 = store.add("sarl.backbone.b2", Matrix(1, D, 0.0));
    category_embeddings = store.add("sarl.category_embeddings", gaussian(C, D, 1.0 / std::sqrt(static_cast<double>(D)), rng));
    attention_projection = store.add("sarl.attention_projection", gaussian(D, D, 1.0 / std::sqrt(static_cast<double>(D)), rng));
    classifier_w = store.add("sarl.classifier.w", gaussian(C, D, 0.1, rng));
    classifier_b = store.add("sarl.classifier.b", Matrix(1, C, 0.0));
}

SarlParams SarlParams::bind(const ParamStore& store, const SarlDims& dims) {
    SarlParams p;
    p.dims_ = dims;
    p.backbone_w1 = store.id("sarl.backbone.w1");
    p.backbone_b1 = store.id("sarl.backbone.b1");
    p.backbone_w2 = store.id("sarl.backbone.w2");
    p.backbone_b2 = store.id("sarl.backbone.b2");
    p.category_embeddings = store.id("sarl.category_embeddings");
    p.attention_projection = store.id("sarl.attention_projection");
    p.classifier_w = store.id("sarl.classifier.w");
    p.classifier_b = store.id("sarl.classifier.b");
    return p;
}

std::vector<ParamId> SarlParams::ids() const {
    return {backbone_w1, backbone_b1, backbone_w2, backbone_b2,
            category_embeddings, attention_projection, classifier_w, classifier_b};
}

SarlForward forward_sarl(const ParamStore& store, const SarlParams& params, const Matrix& regions) {
    const auto& dims = params.dims();
    if (regions.rows() == 0) throw Error("forward_sarl: sample has no regions");
    if (regions.cols() != dims.raw_dim) throw Error("forward_sarl: region width does not match D_raw");

    SarlForward f;
    f.hidden1 = affine(regions, store.value(params.backbone_w1), store.value(params.backbone_b1));
    relu_inplace(f.hidden1);
    f.region_repr = affine(f.hidden1, store.value(params.backbone_w2), store.value(params.backbone_b2));
    f.keys = matmul_nt(f.region_repr, store.value(params.attention_projection));

    f.attention = matmul_nt(store.value(params.category_embeddings), f.keys);
    for (std::size_t c = 0; c < f.attention.rows(); ++c) {
        auto row = f.attention.row(c);
        const double top = *std::max_element(row.begin(), row.end());
        double total = 0.0;
        for (auto& v : row) {
            v = std::exp(v - top);
            total += v;
        }
        for (auto& v : row) v /= total;
    }
    f.pooled = matmul(f.attention, f.region_repr);
    f.features = f.pooled;
    const auto& cw = store.value(params.classifier_w);
    for (std::size_t k = 0; k < f.features.size(); ++k) f.features[k] *= cw[k];

    const auto& cb = store.value(params.classifier_b);
    f.scores.resize(dims.categories);
    f.score_clamped.resize(dims.categories);
    for (std::size_t c = 0; c < dims.categories; ++c) {
        const auto row = f.features.row(c);
        const double p = sigmoid(std::accumulate(row.begin(), row.end(), 0.0) + cb[c]);
        f.scores[c] = clamp_score(p);
        f.score_clamped[c] = f.scores[c] != p;
    }
    return f;
}

void backward_sarl(ParamStore& store, const SarlParams& params, const Matrix& regions,
                   const SarlForward& fwd, const Matrix& d_features_in, const std::vector<double>& d_scores) {
    const auto& dims = params.dims();
    const auto C = dims.categories, D = dims.feature_dim;

    Matrix d_features = d_features_in.empty() ? Matrix(C, D) : d_features_in;
    if (!d_scores.empty()) {
        auto& gb = store.grad(params.classifier_b);
        for (std::size_t c = 0; c < C; ++c) {
            if (d_scores[c] == 0.0 || fwd.score_clamped[c]) continue;
            const double p = fwd.scores[c];
            const double d_logit = d_scores[c] * p * (1.0 - p);
            gb[c] += d_logit;
            for (auto& v : d_features.row(c)) v += d_logit;
        }
    }

    // features = pooled (.) classifier weights
    const auto& cw = store.value(params.classifier_w);
    auto& gw = store.grad(params.classifier_w);
    Matrix d_pooled(C, D);
    for (std::size_t k = 0; k < d_features.size(); ++k) {
        gw[k] += d_features[k] * fwd.pooled[k];
        d_pooled[k] = d_features[k] * cw[k];
    }

    // pooled = attention * region_repr
    Matrix d_attention = matmul_nt(d_pooled, fwd.region_repr);  // C x R
    Matrix d_region(fwd.region_repr.rows(), D);
    add_matmul_tn(fwd.attention, d_pooled, d_region);

    // softmax rows
    Matrix d_logits(C, fwd.attention.cols());
    for (std::size_t c = 0; c < C; ++c) {
        const double inner = dot(fwd.attention.row(c), d_attention.row(c));
        for (std::size_t r = 0; r < fwd.attention.cols(); ++r) {
            d_logits(c, r) = fwd.attention(c, r) * (d_attention(c, r) - inner);
        }
    }

    // logits = E * keys^T
    const auto& emb = store.value(params.category_embeddings);
    const Matrix d_emb = matmul(d_logits, fwd.keys);
    auto& g_emb = store.grad(params.category_embeddings);
    for (std::size_t k = 0; k < g_emb.size(); ++k) g_emb[k] += d_emb[k];
    Matrix d_keys(fwd.keys.rows(), D);
    add_matmul_tn(d_logits, emb, d_keys);

    // keys = region_repr * W_attn^T
    const auto& wa = store.value(params.attention_projection);
    add_matmul_tn(d_keys, fwd.region_repr, store.grad(params.attention_projection));
    Matrix d_from_keys = matmul(d_keys, wa);
    for (std::size_t k = 0; k < d_region.size(); ++k) d_region[k] += d_from_keys[k];

    Matrix d_hidden1 = affine_backward(fwd.hidden1, d_region, store.value(params.backbone_w2),
                                       store.grad(params.backbone_w2), store.grad(params.backbone_b2));
    for (std::size_t k = 0; k < d_hidden1.size(); ++k) {
        if (fwd.hidden1[k] <= 0.0) d_hidden1[k] = 0.0;
    }
    affine_backward(regions, d_hidden1, store.value(params.backbone_w1), store.grad(params.backbone_w1),
                    store.grad(params.backbone_b1));
}

BceResult partial_bce(const std::vector<double>& scores, const LabelVector& labels) {
    if (scores.size() != labels.size()) throw Error("partial_bce: score/label length mismatch");
    BceResult out;
    out.d_scores.assign(scores.size(), 0.0);
    const auto known = known_count(labels);
    if (known == 0) {
        out.skipped = true;
        return out;
    }
    const double scale = 1.0 / static_cast<double>(known);
    double total = 0.0;
    for (std::size_t c = 0; c < scores.size(); ++c) {
        const double p = clamp_score(scores[c]);
        if (labels[c] == 1) {
            total += std::log(p);
            out.d_scores[c] = -scale / p;
        } else if (labels[c] == -1) {
            total += std::log(1.0 - p);
            out.d_scores[c] = scale / (1.0 - p);
        }
    }
    out.loss = -scale * total;
    return out;
}

}  // namespace sst
