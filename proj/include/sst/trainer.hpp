#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sst/cst.hpp"
#include "sst/datagen.hpp"
#include "sst/ist.hpp"
#include "sst/metrics.hpp"
#include "sst/model.hpp"
#include "sst/numerics.hpp"

namespace sst {

enum class CooccurrenceSource { learned, statistical };

std::string to_string(CooccurrenceSource s);
CooccurrenceSource cooccurrence_source_from_string(const std::string& s);

struct ModelConfig {
    std::size_t hidden_dim = 32;   // H, backbone width
    std::size_t feature_dim = 32;  // D
    std::size_t ist_hidden1 = 32;
    std::size_t ist_hidden2 = 64;
};

struct TrainingConfig {
    std::size_t epochs = 20;
    std::size_t warmup_epochs = 5;
    double threshold_start = 0.95;
    double threshold_step = 0.025;
    double intra_threshold_min = 0.75;
    double inter_threshold_min = 0.75;
    double lambda_ist = 10.0;
    double lambda_cst = 0.05;
    IstLossConfig ist_loss;
    std::size_t batch_size = 32;
    AdamConfig optimizer;
    // Learning rate is multiplied by lr_decay_factor every lr_decay_every
    // epochs; 0 disables the schedule.
    std::size_t lr_decay_every = 0;
    double lr_decay_factor = 0.1;
    bool use_ist = true;
    // When false the co-occurrence loss trains only the pair predictor and
    // the category features are treated as constants for it.
    bool ist_feature_gradient = false;
    bool use_cst = true;
    CooccurrenceSource cooccurrence_source = CooccurrenceSource::learned;
    std::size_t memory_capacity = 32;
    ModelConfig model;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ThresholdState {
    bool enabled = false;
    double intra = 1.0;
    double inter = 1.0;
};

// Warmup epochs disable generation outright. Afterwards the thresholds start
// at threshold_start and drop by threshold_step per epoch down to their
// minima. Values are snapped to a 1e-9 grid so the decimal schedule is exact.
ThresholdState threshold_at_epoch(std::size_t epoch, const TrainingConfig& cfg);

// SARL network plus the pairwise co-occurrence predictor, all in one store.
struct SstModel {
    SarlParams sarl;
    IstPredictor ist;

    static SstModel create(ParamStore& store, std::size_t categories, std::size_t raw_dim,
                           const ModelConfig& cfg, std::uint64_t seed);
    static SstModel bind(const ParamStore& store, std::size_t categories, std::size_t raw_dim,
                         const ModelConfig& cfg);
};

struct LossComponents {
    double total = 0.0;
    double cls = 0.0;
    double ist = 0.0;
    double cst = 0.0;
};

struct BatchResult {
    LossComponents loss;
    std::vector<Matrix> features;           // per sample, detached
    std::vector<LabelVector> intra_pseudo;  // y-hat
    std::vector<LabelVector> cross_pseudo;  // y-tilde
};

// Everything the batch loss reads besides the parameters.
struct LossContext {
    const TrainingConfig* cfg = nullptr;
    const ExemplarMemory* memory = nullptr;
    const Matrix* statistical = nullptr;  // required for the statistical source
    std::size_t epoch = 1;
};

// L = L_cls + lambda_1 L_ist + lambda_2 L_cst for one batch. L_cls and L_ist are
// averaged over the batch; L_cst is already a mean over triples.
BatchResult total_loss(const ParamStore& store, const SstModel& model, std::span<const Sample* const> batch,
                       const LossContext& ctx);

// Same value, and accumulates dL/dparams into the store's gradients.
BatchResult total_loss_backward(ParamStore& store, const SstModel& model, std::span<const Sample* const> batch,
                                const LossContext& ctx);

// Global conditional co-occurrence over known labels:
// (i, j) = #(y_i = 1 and y_j = 1) / max(1, #(y_j = 1)).
Matrix statistical_cooccurrence(std::span<const Sample> dataset);

struct EpochRecord {
    std::size_t epoch = 0;
    double learning_rate = 0.0;
    ThresholdState thresholds;
    LossComponents loss;  // batch means
    PseudoQuality intra_quality;
    PseudoQuality cross_quality;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    std::optional<EvalResult> final_metrics;
};

nlohmann::json to_json(const EpochRecord& r);
nlohmann::json to_json(const EvalResult& r);
nlohmann::json to_json(const PseudoQuality& q);

struct FitResult {
    ParamStore store;
    SstModel model;
    ExemplarMemory memory;
    Matrix statistical;  // empty unless the statistical source is used
    TrainReport report;
};

// Full training loop. Deterministic given (dataset, cfg).
FitResult fit(std::span<const Sample> dataset, const TrainingConfig& cfg);

// Inference uses the SARL branch only; returns N x C scores.
Matrix predict_scores(const ParamStore& store, const SstModel& model, std::span<const Sample> dataset);

// Memory holding the last `capacity` known-positive features per category,
// computed with the given parameters in dataset order.
ExemplarMemory build_memory(const ParamStore& store, const SstModel& model, std::span<const Sample> dataset,
                            std::size_t capacity);

struct PseudoSweepPoint {
    double threshold = 0.0;
    std::vector<LabelVector> intra;
    std::vector<LabelVector> cross;
    PseudoQuality intra_quality;
    PseudoQuality cross_quality;
};

// Pseudo labels over the whole dataset at fixed thresholds, for a frozen
// model. Uses the learned predictor unless `statistical` is given.
PseudoSweepPoint generate_pseudo_labels(const ParamStore& store, const SstModel& model,
                                        std::span<const Sample> dataset, const ExemplarMemory& memory,
                                        double intra_threshold, double inter_threshold,
                                        const Matrix* statistical = nullptr);

}  // namespace sst
