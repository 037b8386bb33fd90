#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "sst/datagen.hpp"
#include "sst/numerics.hpp"

namespace sst {

// Non-interpolated AP: mean over positives of precision at that positive's
// rank. Ranking is by descending score with ties kept in input order.
// Returns nullopt when there are no positives.
std::optional<double> average_precision(std::span<const double> scores, std::span<const std::int8_t> gt);

struct EvalResult {
    std::vector<std::optional<double>> ap;  // per category; nullopt = no positives
    double map = 0.0;
    double op = 0.0, orec = 0.0, of1 = 0.0;
    double cp = 0.0, cr = 0.0, cf1 = 0.0;
    std::vector<std::size_t> n_correct;    // N^c_i
    std::vector<std::size_t> n_predicted;  // N^p_i
    std::vector<std::size_t> n_truth;      // N^g_i
    std::size_t categories_without_positives = 0;    // excluded from mAP and CR
    std::size_t categories_without_predictions = 0;  // excluded from CP
};

// scores: N x C, gt: N label vectors over {-1, +1}. A score >= tau predicts positive.
EvalResult classification_metrics(const Matrix& scores, std::span<const LabelVector> gt, double tau = 0.5);

// Unweighted mean of every scalar metric (and of per-category AP where
// present) across the given known-label proportions.
EvalResult average_over_proportions(const std::map<double, EvalResult>& results);

// Pseudo-label quality restricted to positions unknown during training.
struct PseudoQuality {
    std::size_t unknown_positions = 0;
    std::size_t unknown_true_positives = 0;
    std::size_t pseudo_positives = 0;
    std::size_t correct = 0;
    std::optional<double> precision;  // absent with no pseudo positives
    std::optional<double> recall;     // absent with no withheld positives

    // Fraction of unknown positions that are truly positive.
    std::optional<double> base_rate() const;
    // Recomputes precision and recall from the counts.
    void refresh();
    PseudoQuality& operator+=(const PseudoQuality& other);
};

PseudoQuality pseudo_quality(std::span<const LabelVector> pseudo, std::span<const LabelVector> full_labels,
                             std::span<const LabelVector> known_labels);

}  // namespace sst
