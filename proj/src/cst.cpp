#include "sst/cst.hpp"

#include <optional>

namespace sst {

CosineResult cosine_similarity(std::span<const double> f, std::span<const double> g) {
    if (f.size() != g.size()) throw Error("cosine_similarity: length mismatch");
    const double nf = norm(f), ng = norm(g);
    if (nf == 0.0 || ng == 0.0) return {0.0, true};
    return {dot(f, g) / (nf * ng), false};
}

void cosine_backward(std::span<const double> f, std::span<const double> g, double upstream,
                     std::span<double> d_f, std::span<double> d_g) {
    const double nf = norm(f), ng = norm(g);
    if (nf == 0.0 || ng == 0.0) return;
    const double s = dot(f, g) / (nf * ng);
    for (std::size_t k = 0; k < f.size(); ++k) {
        d_f[k] += upstream * (g[k] / (nf * ng) - s * f[k] / (nf * nf));
        d_g[k] += upstream * (f[k] / (nf * ng) - s * g[k] / (ng * ng));
    }
}

ExemplarMemory::ExemplarMemory(std::size_t categories, std::size_t capacity)
    : capacity_(capacity), buckets_(categories) {
    if (capacity == 0) throw Error("ExemplarMemory: capacity must be positive");
}

std::size_t ExemplarMemory::total_size() const {
    std::size_t n = 0;
    for (const auto& b : buckets_) n += b.size();
    return n;
}

void ExemplarMemory::push(std::size_t category, std::uint64_t sample_id, std::span<const double> feature) {
    auto& bucket = buckets_.at(category);
    bucket.push_back({sample_id, std::vector<double>(feature.begin(), feature.end())});
    while (bucket.size() > capacity_) bucket.pop_front();
}

void update_memory(ExemplarMemory& memory, const Matrix& features, const LabelVector& labels,
                   std::uint64_t sample_id) {
    if (labels.size() != memory.categories() || features.rows() != labels.size()) {
        throw Error("update_memory: category count mismatch");
    }
    for (std::size_t c = 0; c < labels.size(); ++c) {
        if (labels[c] == 1) memory.push(c, sample_id, features.row(c));
    }
}

std::vector<std::optional<double>> mean_exemplar_similarity(const Matrix& features, const ExemplarMemory& memory) {
    if (features.rows() != memory.categories()) throw Error("mean_exemplar_similarity: category count mismatch");
    std::vector<std::optional<double>> out(features.rows());
    for (std::size_t c = 0; c < features.rows(); ++c) {
        const auto& bucket = memory.bucket(c);
        if (bucket.empty()) continue;
        double total = 0.0;
        for (const auto& e : bucket) total += cosine_similarity(features.row(c), e.feature).value;
        out[c] = total / static_cast<double>(bucket.size());
    }
    return out;
}

LabelVector generate_cross_pseudo(const Matrix& features, const LabelVector& labels, const ExemplarMemory& memory,
                                  double threshold) {
    if (labels.size() != features.rows()) throw Error("generate_cross_pseudo: category count mismatch");
    LabelVector out = labels;
    const auto sims = mean_exemplar_similarity(features, memory);
    for (std::size_t c = 0; c < labels.size(); ++c) {
        if (labels[c] == 0 && sims[c] && *sims[c] >= threshold) out[c] = 1;
    }
    return out;
}

CstLossResult cst_loss(std::span<const Matrix> features, std::span<const LabelVector> labels) {
    if (features.size() != labels.size()) throw Error("cst_loss: batch size mismatch");
    CstLossResult out;
    for (const auto& f : features) out.d_features.emplace_back(f.rows(), f.cols());
    if (features.size() < 2) return out;

    struct Triple {
        std::size_t n, m, c;
        double sign;  // +1 pushes together (loss 1 - s), -1 pushes apart (loss 1 + s)
    };
    std::vector<Triple> triples;
    for (std::size_t n = 0; n < features.size(); ++n) {
        for (std::size_t m = n + 1; m < features.size(); ++m) {
            if (labels[n].size() != labels[m].size() || features[n].rows() != labels[n].size()) {
                throw Error("cst_loss: inconsistent category counts");
            }
            for (std::size_t c = 0; c < labels[n].size(); ++c) {
                if (labels[n][c] == 0 || labels[m][c] == 0) continue;
                const bool both_pos = labels[n][c] == 1 && labels[m][c] == 1;
                triples.push_back({n, m, c, both_pos ? 1.0 : -1.0});
            }
        }
    }
    if (triples.empty()) return out;

    const double scale = 1.0 / static_cast<double>(triples.size());
    double total = 0.0;
    for (const auto& t : triples) {
        const auto fn = features[t.n].row(t.c);
        const auto fm = features[t.m].row(t.c);
        const double s = cosine_similarity(fn, fm).value;
        total += 1.0 - t.sign * s;
        cosine_backward(fn, fm, -t.sign * scale, out.d_features[t.n].row(t.c), out.d_features[t.m].row(t.c));
    }
    out.triples = triples.size();
    out.loss = total * scale;
    return out;
}

}  // namespace sst
