#include "sst/trainer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

namespace sst {

using nlohmann::json;

std::string to_string(CooccurrenceSource s) {
    return s == CooccurrenceSource::learned ? "learned" : "statistical";
}

CooccurrenceSource cooccurrence_source_from_string(const std::string& s) {
    if (s == "learned") return CooccurrenceSource::learned;
    if (s == "statistical") return CooccurrenceSource::statistical;
    throw Error("unknown co-occurrence source '" + s + "' (expected learned or statistical)");
}

void TrainingConfig::validate() const {
    if (epochs == 0) throw Error("config: epochs must be positive");
    if (batch_size == 0) throw Error("config: batch_size must be positive");
    if (threshold_start < intra_threshold_min || threshold_start < inter_threshold_min) {
        throw Error("config: threshold_start must be >= both threshold minima");
    }
    if (!(intra_threshold_min > 0.0) || !(inter_threshold_min > 0.0)) {
        throw Error("config: threshold minima must be positive");
    }
    if (threshold_step < 0.0) throw Error("config: threshold_step must be non-negative");
    if (ist_loss.gamma_pos < 0.0 || ist_loss.gamma_neg < 0.0) throw Error("config: gammas must be non-negative");
    if (ist_loss.margin < 0.0 || ist_loss.margin >= 1.0) throw Error("config: margin must lie in [0, 1)");
    if (lambda_ist < 0.0 || lambda_cst < 0.0) throw Error("config: loss weights must be non-negative");
    if (memory_capacity == 0) throw Error("config: memory_capacity must be positive");
    if (lr_decay_factor <= 0.0) throw Error("config: lr_decay_factor must be positive");
}

ThresholdState threshold_at_epoch(std::size_t epoch, const TrainingConfig& cfg) {
    if (epoch == 0) throw Error("threshold_at_epoch: epochs are 1-based");
    if (epoch <= cfg.warmup_epochs) return {};
    const double steps = static_cast<double>(epoch - cfg.warmup_epochs - 1);
    const double raw = cfg.threshold_start - steps * cfg.threshold_step;
    const auto snap = [](double v) { return std::round(v * 1e9) / 1e9; };
    return {true, snap(std::max(cfg.intra_threshold_min, raw)), snap(std::max(cfg.inter_threshold_min, raw))};
}

SstModel SstModel::create(ParamStore& store, std::size_t categories, std::size_t raw_dim, const ModelConfig& cfg,
                          std::uint64_t seed) {
    SstModel m;
    m.sarl = SarlParams(store, {categories, raw_dim, cfg.hidden_dim, cfg.feature_dim}, derive_seed(seed, 1));
    m.ist = IstPredictor(store, {cfg.feature_dim, cfg.ist_hidden1, cfg.ist_hidden2}, derive_seed(seed, 2));
    return m;
}

SstModel SstModel::bind(const ParamStore& store, std::size_t categories, std::size_t raw_dim, const ModelConfig& cfg) {
    return {SarlParams::bind(store, {categories, raw_dim, cfg.hidden_dim, cfg.feature_dim}),
            IstPredictor::bind(store, {cfg.feature_dim, cfg.ist_hidden1, cfg.ist_hidden2})};
}

namespace {

// Shared by the value-only and gradient paths; `grads` is null for value-only.
BatchResult run_batch(const ParamStore& store, ParamStore* grads, const SstModel& model,
                      std::span<const Sample* const> batch, const LossContext& ctx) {
    const auto& cfg = *ctx.cfg;
    const std::size_t B = batch.size();
    if (B == 0) throw Error("total_loss: empty batch");
    const std::size_t C = model.sarl.dims().categories;
    const auto thresholds = threshold_at_epoch(ctx.epoch, cfg);
    const bool learned = cfg.cooccurrence_source == CooccurrenceSource::learned;
    const bool ist_loss_on = cfg.use_ist && learned;
    const bool intra_gen = cfg.use_ist && thresholds.enabled;
    const bool cross_gen = cfg.use_cst && thresholds.enabled;
    if (intra_gen && !learned && (ctx.statistical == nullptr || ctx.statistical->rows() != C)) {
        throw Error("total_loss: statistical co-occurrence matrix missing");
    }
    if (cross_gen && ctx.memory == nullptr) throw Error("total_loss: exemplar memory missing");

    const double inv_b = 1.0 / static_cast<double>(B);
    BatchResult out;
    std::vector<SarlForward> fwd(B);
    std::vector<PairForward> pair_fwd(B);
    std::vector<std::vector<double>> pair_grads(B);
    std::vector<std::vector<double>> d_scores(B, std::vector<double>(C, 0.0));
    std::vector<LabelVector> known(B);

    for (std::size_t n = 0; n < B; ++n) {
        const Sample& s = *batch[n];
        const LabelVector& y = s.partial_labels;
        if (y.size() != C) throw Error("total_loss: label length does not match the model");
        known[n] = y;
        fwd[n] = forward_sarl(store, model.sarl, s.regions);

        LabelVector intra = y;
        if (cfg.use_ist) {
            const bool learned_gen = intra_gen && learned;
            if (ist_loss_on || learned_gen) {
                pair_fwd[n] = forward_pairs(store, model.ist, fwd[n].features,
                                            pairs_for_training(y, ist_loss_on, learned_gen));
            }
            const Matrix probs = to_matrix(pair_fwd[n], C).probs;
            if (intra_gen) intra = generate_intra_pseudo(learned ? probs : *ctx.statistical, y, thresholds.intra);
            if (ist_loss_on) {
                const auto il = ist_loss(probs, y, cfg.ist_loss);
                out.loss.ist += il.loss * inv_b;
                auto& pg = pair_grads[n];
                pg.resize(pair_fwd[n].pairs.size());
                for (std::size_t k = 0; k < pg.size(); ++k) {
                    const auto [i, j] = pair_fwd[n].pairs[k];
                    pg[k] = cfg.lambda_ist * inv_b * il.d_probs(i, j);
                }
            }
        }
        LabelVector cross = y;
        if (cross_gen) cross = generate_cross_pseudo(fwd[n].features, y, *ctx.memory, thresholds.inter);

        for (const LabelVector* target : std::array<const LabelVector*, 3>{&y, &intra, &cross}) {
            const auto bce = partial_bce(fwd[n].scores, *target);
            out.loss.cls += bce.loss * inv_b;
            axpy(inv_b, bce.d_scores, d_scores[n]);
        }
        out.intra_pseudo.push_back(std::move(intra));
        out.cross_pseudo.push_back(std::move(cross));
        out.features.push_back(fwd[n].features);
    }

    CstLossResult cst;
    if (cfg.use_cst) {
        cst = cst_loss(out.features, known);
        out.loss.cst = cst.loss;
    }
    out.loss.total = out.loss.cls + cfg.lambda_ist * out.loss.ist + cfg.lambda_cst * out.loss.cst;

    if (grads != nullptr) {
        for (std::size_t n = 0; n < B; ++n) {
            Matrix d_features(C, model.sarl.dims().feature_dim);
            if (ist_loss_on && !pair_fwd[n].pairs.empty()) {
                Matrix d_pair = backward_pairs(*grads, model.ist, fwd[n].features, pair_fwd[n], pair_grads[n]);
                if (cfg.ist_feature_gradient) d_features = std::move(d_pair);
            }
            if (cfg.use_cst && cfg.lambda_cst != 0.0) {
                const auto& dc = cst.d_features[n];
                for (std::size_t k = 0; k < dc.size(); ++k) d_features[k] += cfg.lambda_cst * dc[k];
            }
            backward_sarl(*grads, model.sarl, batch[n]->regions, fwd[n], d_features, d_scores[n]);
        }
    }
    return out;
}

}  // namespace

BatchResult total_loss(const ParamStore& store, const SstModel& model, std::span<const Sample* const> batch,
                       const LossContext& ctx) {
    return run_batch(store, nullptr, model, batch, ctx);
}

BatchResult total_loss_backward(ParamStore& store, const SstModel& model, std::span<const Sample* const> batch,
                                const LossContext& ctx) {
    return run_batch(store, &store, model, batch, ctx);
}

Matrix statistical_cooccurrence(std::span<const Sample> dataset) {
    if (dataset.empty()) throw Error("statistical_cooccurrence: empty dataset");
    const std::size_t C = dataset.front().partial_labels.size();
    Matrix joint(C, C);
    std::vector<double> positives(C, 0.0);
    for (const auto& s : dataset) {
        const auto& y = s.partial_labels;
        if (y.size() != C) throw Error("statistical_cooccurrence: inconsistent label lengths");
        for (std::size_t j = 0; j < C; ++j) {
            if (y[j] != 1) continue;
            positives[j] += 1.0;
            for (std::size_t i = 0; i < C; ++i) {
                if (y[i] == 1) joint(i, j) += 1.0;
            }
        }
    }
    for (std::size_t i = 0; i < C; ++i) {
        for (std::size_t j = 0; j < C; ++j) joint(i, j) /= std::max(1.0, positives[j]);
    }
    return joint;
}

json to_json(const PseudoQuality& q) {
    json j{{"unknown_positions", q.unknown_positions},
           {"unknown_true_positives", q.unknown_true_positives},
           {"pseudo_positives", q.pseudo_positives},
           {"correct", q.correct}};
    j["precision"] = q.precision ? json(*q.precision) : json(nullptr);
    j["recall"] = q.recall ? json(*q.recall) : json(nullptr);
    return j;
}

json to_json(const EpochRecord& r) {
    return {{"epoch", r.epoch},
            {"learning_rate", r.learning_rate},
            {"pseudo_enabled", r.thresholds.enabled},
            {"theta_intra", r.thresholds.intra},
            {"theta_inter", r.thresholds.inter},
            {"loss_total", r.loss.total},
            {"loss_cls", r.loss.cls},
            {"loss_ist", r.loss.ist},
            {"loss_cst", r.loss.cst},
            {"ist_pseudo", to_json(r.intra_quality)},
            {"cst_pseudo", to_json(r.cross_quality)}};
}

json to_json(const EvalResult& r) {
    json ap = json::array();
    for (const auto& a : r.ap) ap.push_back(a ? json(*a) : json(nullptr));
    return {{"mAP", r.map}, {"OP", r.op}, {"OR", r.orec}, {"OF1", r.of1}, {"CP", r.cp}, {"CR", r.cr},
            {"CF1", r.cf1}, {"ap", ap}, {"categories_without_positives", r.categories_without_positives},
            {"categories_without_predictions", r.categories_without_predictions}};
}

FitResult fit(std::span<const Sample> dataset, const TrainingConfig& cfg) {
    cfg.validate();
    if (dataset.empty()) throw Error("fit: empty dataset");
    const std::size_t C = dataset.front().partial_labels.size();
    const std::size_t raw_dim = dataset.front().regions.cols();
    for (const auto& s : dataset) {
        if (s.partial_labels.size() != C || s.regions.cols() != raw_dim) throw Error("fit: inconsistent dataset shapes");
    }

    FitResult res;
    res.model = SstModel::create(res.store, C, raw_dim, cfg.model, derive_seed(cfg.seed, 100));
    const bool learned = cfg.cooccurrence_source == CooccurrenceSource::learned;
    if (!cfg.use_ist || !learned) {
        for (auto pid : res.model.ist.ids()) res.store.set_frozen(pid, true);
    }
    if (cfg.use_ist && !learned) res.statistical = statistical_cooccurrence(dataset);
    res.memory = ExemplarMemory(C, cfg.memory_capacity);

    AdamState adam(res.store, cfg.optimizer);
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        AdamConfig opt = cfg.optimizer;
        if (cfg.lr_decay_every > 0) {
            opt.learning_rate *= std::pow(cfg.lr_decay_factor, static_cast<double>((epoch - 1) / cfg.lr_decay_every));
        }
        adam.set_learning_rate(opt.learning_rate);

        std::mt19937_64 rng(derive_seed(cfg.seed, 200, epoch));
        std::shuffle(order.begin(), order.end(), rng);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.learning_rate = opt.learning_rate;
        rec.thresholds = threshold_at_epoch(epoch, cfg);
        const LossContext ctx{&cfg, &res.memory, res.statistical.empty() ? nullptr : &res.statistical, epoch};

        std::size_t batches = 0;
        std::vector<const Sample*> batch;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            batch.clear();
            for (std::size_t k = start; k < std::min(order.size(), start + cfg.batch_size); ++k) {
                batch.push_back(&dataset[order[k]]);
            }
            auto br = total_loss_backward(res.store, res.model, batch, ctx);
            if (!std::isfinite(br.loss.total)) {
                throw Error("fit: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batches + 1));
            }
            adam_step(res.store, adam);
            res.store.zero_grads();

            if (cfg.use_cst) {
                for (std::size_t n = 0; n < batch.size(); ++n) {
                    update_memory(res.memory, br.features[n], batch[n]->partial_labels, batch[n]->id);
                }
            }
            if (rec.thresholds.enabled) {
                std::vector<LabelVector> full, partial;
                for (const auto* s : batch) {
                    full.push_back(s->full_labels);
                    partial.push_back(s->partial_labels);
                }
                if (cfg.use_ist) rec.intra_quality += pseudo_quality(br.intra_pseudo, full, partial);
                if (cfg.use_cst) rec.cross_quality += pseudo_quality(br.cross_pseudo, full, partial);
            }
            rec.loss.total += br.loss.total;
            rec.loss.cls += br.loss.cls;
            rec.loss.ist += br.loss.ist;
            rec.loss.cst += br.loss.cst;
            ++batches;
        }
        const double inv = 1.0 / static_cast<double>(batches);
        rec.loss.total *= inv;
        rec.loss.cls *= inv;
        rec.loss.ist *= inv;
        rec.loss.cst *= inv;
        res.report.epochs.push_back(rec);
    }
    return res;
}

Matrix predict_scores(const ParamStore& store, const SstModel& model, std::span<const Sample> dataset) {
    const std::size_t C = model.sarl.dims().categories;
    Matrix scores(dataset.size(), C);
    for (std::size_t n = 0; n < dataset.size(); ++n) {
        const auto f = forward_sarl(store, model.sarl, dataset[n].regions);
        std::copy(f.scores.begin(), f.scores.end(), scores.row(n).begin());
    }
    return scores;
}

ExemplarMemory build_memory(const ParamStore& store, const SstModel& model, std::span<const Sample> dataset,
                            std::size_t capacity) {
    ExemplarMemory memory(model.sarl.dims().categories, capacity);
    for (const auto& s : dataset) {
        if (std::none_of(s.partial_labels.begin(), s.partial_labels.end(), [](auto v) { return v == 1; })) continue;
        const auto f = forward_sarl(store, model.sarl, s.regions);
        update_memory(memory, f.features, s.partial_labels, s.id);
    }
    return memory;
}

PseudoSweepPoint generate_pseudo_labels(const ParamStore& store, const SstModel& model,
                                        std::span<const Sample> dataset, const ExemplarMemory& memory,
                                        double intra_threshold, double inter_threshold, const Matrix* statistical) {
    PseudoSweepPoint pt;
    pt.threshold = intra_threshold;
    const std::size_t C = model.sarl.dims().categories;
    std::vector<LabelVector> full, partial;
    for (const auto& s : dataset) {
        const auto f = forward_sarl(store, model.sarl, s.regions);
        if (statistical != nullptr) {
            pt.intra.push_back(generate_intra_pseudo(*statistical, s.partial_labels, intra_threshold));
        } else {
            const auto pf = forward_pairs(store, model.ist, f.features, pairs_for_training(s.partial_labels, false, true));
            pt.intra.push_back(generate_intra_pseudo(to_matrix(pf, C).probs, s.partial_labels, intra_threshold));
        }
        pt.cross.push_back(generate_cross_pseudo(f.features, s.partial_labels, memory, inter_threshold));
        full.push_back(s.full_labels);
        partial.push_back(s.partial_labels);
    }
    pt.intra_quality = pseudo_quality(pt.intra, full, partial);
    pt.cross_quality = pseudo_quality(pt.cross, full, partial);
    return pt;
}

}  // namespace sst
