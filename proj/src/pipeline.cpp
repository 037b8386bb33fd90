#include "sst/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sst/checkpoint.hpp"

namespace sst {

using nlohmann::json;

std::string to_string(Variant v) {
    switch (v) {
        case Variant::baseline: return "baseline";
        case Variant::ist: return "ist";
        case Variant::ist_stat: return "ist-stat";
        case Variant::cst: return "cst";
        case Variant::sst: return "sst";
    }
    return "unknown";
}

Variant variant_from_string(const std::string& name) {
    for (auto v : all_variants()) {
        if (to_string(v) == name) return v;
    }
    throw Error("unknown variant '" + name + "' (expected baseline, ist, ist-stat, cst or sst)");
}

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> v{Variant::baseline, Variant::ist, Variant::ist_stat, Variant::cst, Variant::sst};
    return v;
}

TrainingConfig apply_variant(TrainingConfig cfg, Variant v) {
    cfg.use_ist = v == Variant::ist || v == Variant::ist_stat || v == Variant::sst;
    cfg.use_cst = v == Variant::cst || v == Variant::sst;
    cfg.cooccurrence_source = v == Variant::ist_stat ? CooccurrenceSource::statistical : CooccurrenceSource::learned;
    return cfg;
}

Benchmark make_benchmark(const WorldConfig& cfg, std::uint64_t seed) {
    Benchmark b;
    b.world = sample_world(derive_seed(seed, 11), cfg.categories, cfg.raw_dim, cfg.link_density, cfg.noise_sigma,
                           cfg.distractor_rate);
    const auto data_seed = derive_seed(seed, 12);
    b.train = make_dataset(b.world, cfg.train_samples, cfg.known_proportion, data_seed, 0);
    b.test = make_dataset(b.world, cfg.test_samples, 1.0, data_seed, cfg.train_samples);
    return b;
}

ExperimentResult run_experiment(const RunConfig& cfg, const Benchmark& bench) {
    TrainingConfig tc = cfg.training;
    tc.seed = cfg.seed;
    ExperimentResult out{{}, {}, {}, fit(bench.train, tc)};
    const auto& f = out.fit;

    const Matrix scores = predict_scores(f.store, f.model, bench.test);
    std::vector<LabelVector> gt;
    for (const auto& s : bench.test) gt.push_back(s.full_labels);
    out.test = classification_metrics(scores, gt, cfg.decision_threshold);

    const auto final_thresholds = threshold_at_epoch(std::max<std::size_t>(tc.epochs, tc.warmup_epochs + 1), tc);
    const auto memory = build_memory(f.store, f.model, bench.train, tc.memory_capacity);
    const auto pt = generate_pseudo_labels(f.store, f.model, bench.train, memory, final_thresholds.intra,
                                           final_thresholds.inter, f.statistical.empty() ? nullptr : &f.statistical);
    out.intra = pt.intra_quality;
    out.cross = pt.cross_quality;
    return out;
}

void save_run(const std::filesystem::path& dir, const RunConfig& cfg, const FitResult& fit,
              const std::optional<EvalResult>& final_metrics) {
    std::filesystem::create_directories(dir);
    const auto& dims = fit.model.sarl.dims();
    const CheckpointHeader header{kCheckpointFormatVersion, dims.categories, dims.feature_dim, dims.raw_dim, cfg.seed};
    save_checkpoint(dir / "checkpoint.json", header, fit.store, json{{"config", to_json(cfg)}});

    std::ofstream out(dir / "train_report.jsonl");
    if (!out) throw Error("cannot write train report in '" + dir.string() + "'");
    out << json{{"type", "config"}, {"config", to_json(cfg)}}.dump() << '\n';
    for (const auto& rec : fit.report.epochs) {
        json j = to_json(rec);
        j["type"] = "epoch";
        out << j.dump() << '\n';
    }
    if (final_metrics) out << json{{"type", "final"}, {"metrics", to_json(*final_metrics)}}.dump() << '\n';
}

LoadedModel load_model(const std::filesystem::path& checkpoint) {
    const json doc = load_json_file(checkpoint);
    LoadedModel m;
    try {
        m.config = run_config_from_json(doc.at("extra").at("config"));
    } catch (const json::exception& e) {
        throw Error("checkpoint '" + checkpoint.string() + "' carries no run configuration: " + e.what());
    }
    const auto header = read_checkpoint_header(doc);
    m.model = SstModel::create(m.store, header.categories, header.regions_dim, m.config.training.model, 0);
    checkpoint_from_json(doc, {kCheckpointFormatVersion, header.categories, m.config.training.model.feature_dim,
                               header.regions_dim, header.seed},
                         m.store);
    return m;
}

std::string evaluation_csv(const std::map<double, EvalResult>& results) {
    std::ostringstream os;
    os << "known_proportion,mAP,OP,OR,OF1,CP,CR,CF1\n";
    const auto row = [&os](const std::string& label, const EvalResult& r) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", label.c_str(), r.map, r.op, r.orec,
                      r.of1, r.cp, r.cr, r.cf1);
        os << buf;
    };
    for (const auto& [prop, r] : results) {
        char label[32];
        std::snprintf(label, sizeof label, "%.2f", prop);
        row(label, r);
    }
    if (!results.empty()) row("average", average_over_proportions(results));
    return os.str();
}

}  // namespace sst
