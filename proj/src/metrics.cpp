#include "sst/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace sst {

namespace {

double f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::optional<double> average_precision(std::span<const double> scores, std::span<const std::int8_t> gt) {
    if (scores.size() != gt.size()) throw Error("average_precision: length mismatch");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::size_t hits = 0;
    double total = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (gt[order[k]] == 1) {
            ++hits;
            total += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    }
    if (hits == 0) return std::nullopt;
    return total / static_cast<double>(hits);
}

EvalResult classification_metrics(const Matrix& scores, std::span<const LabelVector> gt, double tau) {
    const std::size_t N = scores.rows(), C = scores.cols();
    if (gt.size() != N) throw Error("classification_metrics: sample count mismatch");
    for (const auto& g : gt) {
        if (g.size() != C) throw Error("classification_metrics: category count mismatch");
    }
    if (!(tau > 0.0 && tau < 1.0)) throw Error("classification_metrics: tau must lie in (0, 1)");

    EvalResult r;
    r.ap.resize(C);
    r.n_correct.assign(C, 0);
    r.n_predicted.assign(C, 0);
    r.n_truth.assign(C, 0);

    std::vector<double> column(N);
    std::vector<std::int8_t> truth(N);
    double ap_sum = 0.0;
    std::size_t ap_count = 0;
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t n = 0; n < N; ++n) {
            column[n] = scores(n, c);
            truth[n] = gt[n][c];
            const bool pred = column[n] >= tau;
            const bool pos = truth[n] == 1;
            r.n_predicted[c] += pred;
            r.n_truth[c] += pos;
            r.n_correct[c] += pred && pos;
        }
        r.ap[c] = average_precision(column, truth);
        if (r.ap[c]) {
            ap_sum += *r.ap[c];
            ++ap_count;
        }
    }
    r.categories_without_positives = C - ap_count;
    r.map = ap_count == 0 ? 0.0 : ap_sum / static_cast<double>(ap_count);

    const auto total = [](const std::vector<std::size_t>& v) { return std::accumulate(v.begin(), v.end(), std::size_t{0}); };
    r.op = ratio(total(r.n_correct), total(r.n_predicted));
    r.orec = ratio(total(r.n_correct), total(r.n_truth));
    r.of1 = f1(r.op, r.orec);

    double cp_sum = 0.0, cr_sum = 0.0;
    std::size_t cp_count = 0, cr_count = 0;
    for (std::size_t c = 0; c < C; ++c) {
        if (r.n_predicted[c] > 0) {
            cp_sum += ratio(r.n_correct[c], r.n_predicted[c]);
            ++cp_count;
        }
        if (r.n_truth[c] > 0) {
            cr_sum += ratio(r.n_correct[c], r.n_truth[c]);
            ++cr_count;
        }
    }
    r.categories_without_predictions = C - cp_count;
    r.cp = cp_count == 0 ? 0.0 : cp_sum / static_cast<double>(cp_count);
    r.cr = cr_count == 0 ? 0.0 : cr_sum / static_cast<double>(cr_count);
    r.cf1 = f1(r.cp, r.cr);
    return r;
}

EvalResult average_over_proportions(const std::map<double, EvalResult>& results) {
    if (results.empty()) throw Error("average_over_proportions: no results");
    EvalResult avg;
    const double k = static_cast<double>(results.size());
    const std::size_t C = results.begin()->second.ap.size();
    std::vector<double> ap_sum(C, 0.0);
    std::vector<std::size_t> ap_count(C, 0);
    for (const auto& [prop, r] : results) {
        avg.map += r.map / k;
        avg.op += r.op / k;
        avg.orec += r.orec / k;
        avg.of1 += r.of1 / k;
        avg.cp += r.cp / k;
        avg.cr += r.cr / k;
        avg.cf1 += r.cf1 / k;
        for (std::size_t c = 0; c < std::min(C, r.ap.size()); ++c) {
            if (r.ap[c]) {
                ap_sum[c] += *r.ap[c];
                ++ap_count[c];
            }
        }
    }
    avg.ap.resize(C);
    for (std::size_t c = 0; c < C; ++c) {
        if (ap_count[c] > 0) avg.ap[c] = ap_sum[c] / static_cast<double>(ap_count[c]);
    }
    return avg;
}

std::optional<double> PseudoQuality::base_rate() const {
    if (unknown_positions == 0) return std::nullopt;
    return ratio(unknown_true_positives, unknown_positions);
}

PseudoQuality& PseudoQuality::operator+=(const PseudoQuality& o) {
    unknown_positions += o.unknown_positions;
    unknown_true_positives += o.unknown_true_positives;
    pseudo_positives += o.pseudo_positives;
    correct += o.correct;
    refresh();
    return *this;
}

void PseudoQuality::refresh() {
    precision = pseudo_positives > 0 ? std::optional(ratio(correct, pseudo_positives)) : std::nullopt;
    recall = unknown_true_positives > 0 ? std::optional(ratio(correct, unknown_true_positives)) : std::nullopt;
}

PseudoQuality pseudo_quality(std::span<const LabelVector> pseudo, std::span<const LabelVector> full_labels,
                             std::span<const LabelVector> known_labels) {
    if (pseudo.size() != full_labels.size() || pseudo.size() != known_labels.size()) {
        throw Error("pseudo_quality: sample count mismatch");
    }
    PseudoQuality q;
    for (std::size_t n = 0; n < pseudo.size(); ++n) {
        const auto& p = pseudo[n];
        const auto& full = full_labels[n];
        const auto& known = known_labels[n];
        if (p.size() != full.size() || p.size() != known.size()) throw Error("pseudo_quality: category count mismatch");
        for (std::size_t c = 0; c < p.size(); ++c) {
            if (known[c] != 0) continue;
            ++q.unknown_positions;
            const bool truth = full[c] == 1;
            const bool guessed = p[c] == 1;
            q.unknown_true_positives += truth;
            q.pseudo_positives += guessed;
            q.correct += truth && guessed;
        }
    }
    q.refresh();
    return q;
}

}  // namespace sst
