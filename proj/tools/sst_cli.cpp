// Command-line entry point: data generation, training, evaluation, ablation
// grids and pseudo-label diagnostics.

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sst/checkpoint.hpp"
#include "sst/config.hpp"
#include "sst/cst.hpp"
#include "sst/datagen.hpp"
#include "sst/ist.hpp"
#include "sst/metrics.hpp"
#include "sst/pipeline.hpp"
#include "sst/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw sst::Error("cannot open '" + path.string() + "' for writing");
    out << text;
}

sst::RunConfig config_or_default(const std::string& path) {
    return path.empty() ? sst::RunConfig::bench_small() : sst::load_run_config(path);
}

fs::path data_file(const fs::path& data, const char* name) {
    return fs::is_directory(data) ? data / name : data;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

struct GenDataArgs {
    std::uint64_t seed = 0;
    std::size_t categories = 20;
    std::size_t samples = 2500;
    double known_prop = 0.1;
    double test_fraction = 0.2;
    std::string config;
    std::string out;
};

int cmd_gen_data(const GenDataArgs& a) {
    auto cfg = config_or_default(a.config);
    cfg.seed = a.seed;
    cfg.world.categories = a.categories;
    cfg.world.known_proportion = a.known_prop;
    if (!(a.test_fraction >= 0.0 && a.test_fraction < 1.0)) throw sst::Error("--test-fraction must lie in [0, 1)");
    cfg.world.test_samples = static_cast<std::size_t>(std::llround(a.test_fraction * static_cast<double>(a.samples)));
    cfg.world.train_samples = a.samples - cfg.world.test_samples;
    if (cfg.world.train_samples == 0) throw sst::Error("--samples leaves no training samples");

    const auto bench = sst::make_benchmark(cfg.world, cfg.seed);
    const fs::path out(a.out);
    fs::create_directories(out);
    sst::write_dataset(out / "train.jsonl", bench.train);
    sst::write_dataset(out / "test.jsonl", bench.test);
    json world = sst::world_to_json(bench.world);
    world["seed"] = cfg.seed;
    world["known_proportion"] = cfg.world.known_proportion;
    write_text(out / "world.json", world.dump() + "\n");
    std::cout << "wrote " << bench.train.size() << " train and " << bench.test.size() << " test samples to "
              << out.string() << "\n";
    return 0;
}

struct TrainArgs {
    std::string config;
    std::string data;
    std::string out_dir;
    std::vector<std::string> ablate;
};

void apply_ablation(sst::TrainingConfig& t, const std::string& flag) {
    if (flag == "no-ist") {
        t.use_ist = false;
    } else if (flag == "no-cst") {
        t.use_cst = false;
    } else {
        t = sst::apply_variant(t, sst::variant_from_string(flag));
    }
}

int cmd_train(const TrainArgs& a) {
    auto cfg = config_or_default(a.config);
    for (const auto& flag : a.ablate) apply_ablation(cfg.training, flag);
    cfg.training.seed = cfg.seed;

    const fs::path data(a.data);
    const auto train = sst::read_dataset(data_file(data, "train.jsonl"));
    if (train.empty()) throw sst::Error("training set is empty");
    if (fs::is_directory(data) && fs::exists(data / "world.json")) {
        const auto world = sst::load_json_file(data / "world.json");
        if (world.contains("known_proportion")) cfg.world.known_proportion = world["known_proportion"].get<double>();
    } else {
        const double c = static_cast<double>(train.front().partial_labels.size());
        cfg.world.known_proportion = static_cast<double>(sst::known_count(train.front().partial_labels)) / c;
    }
    cfg.world.categories = train.front().partial_labels.size();
    cfg.world.raw_dim = train.front().regions.cols();

    auto result = sst::fit(train, cfg.training);
    std::optional<sst::EvalResult> metrics;
    if (fs::is_directory(data) && fs::exists(data / "test.jsonl")) {
        const auto test = sst::read_dataset(data / "test.jsonl");
        std::vector<sst::LabelVector> gt;
        for (const auto& s : test) gt.push_back(s.full_labels);
        metrics = sst::classification_metrics(sst::predict_scores(result.store, result.model, test), gt,
                                              cfg.decision_threshold);
        std::cout << "test mAP " << fmt(metrics->map) << "\n";
    }
    sst::save_run(a.out_dir, cfg, result, metrics);
    std::cout << "wrote checkpoint and report to " << a.out_dir << "\n";
    return 0;
}

struct EvaluateArgs {
    std::vector<std::string> checkpoints;
    std::string data;
    std::string out;
};

int cmd_evaluate(const EvaluateArgs& a) {
    const auto test = sst::read_dataset(data_file(a.data, "test.jsonl"));
    std::vector<sst::LabelVector> gt;
    for (const auto& s : test) gt.push_back(s.full_labels);
    std::map<double, sst::EvalResult> results;
    for (const auto& ck : a.checkpoints) {
        if (!fs::exists(ck)) throw sst::Error("checkpoint '" + ck + "' does not exist");
        const auto loaded = sst::load_model(ck);
        const double prop = loaded.config.world.known_proportion;
        if (results.count(prop)) throw sst::Error("two checkpoints share known proportion " + fmt(prop));
        results[prop] = sst::classification_metrics(sst::predict_scores(loaded.store, loaded.model, test), gt,
                                                    loaded.config.decision_threshold);
    }
    write_text(a.out, sst::evaluation_csv(results));
    std::cout << "wrote " << results.size() + 1 << " rows to " << a.out << "\n";
    return 0;
}

std::string pseudo_summary(const sst::PseudoQuality& q) {
    return std::to_string(q.pseudo_positives) + " at precision " + (q.precision ? fmt(*q.precision) : "n/a") +
           " (base rate " + (q.base_rate() ? fmt(*q.base_rate()) : "n/a") + ")";
}

struct AblateArgs {
    std::string config;
    std::vector<std::string> grid;
    std::size_t seeds = 1;
    double known_prop = -1.0;
    std::string out;
};

int cmd_ablate(const AblateArgs& a) {
    auto cfg = config_or_default(a.config);
    if (a.known_prop > 0.0) cfg.world.known_proportion = a.known_prop;
    if (a.seeds == 0) throw sst::Error("--seeds must be positive");
    std::vector<sst::Variant> rows;
    if (a.grid.empty()) {
        rows = sst::all_variants();
    } else {
        for (const auto& g : a.grid) rows.push_back(sst::variant_from_string(g));
    }

    std::vector<sst::Benchmark> benches;
    for (std::size_t s = 0; s < a.seeds; ++s) benches.push_back(sst::make_benchmark(cfg.world, cfg.seed + s));

    std::ostringstream csv;
    csv << "variant,known_proportion,mean_mAP";
    for (std::size_t s = 0; s < a.seeds; ++s) csv << ",mAP_seed" << cfg.seed + s;
    csv << ",mean_OF1,mean_CF1\n";
    for (auto v : rows) {
        std::vector<double> maps;
        double of1 = 0.0, cf1 = 0.0;
        for (std::size_t s = 0; s < a.seeds; ++s) {
            auto run = cfg;
            run.seed = cfg.seed + s;
            run.training = sst::apply_variant(cfg.training, v);
            const auto r = sst::run_experiment(run, benches[s]);
            maps.push_back(r.test.map);
            of1 += r.test.of1 / static_cast<double>(a.seeds);
            cf1 += r.test.cf1 / static_cast<double>(a.seeds);
            std::cerr << sst::to_string(v) << " seed " << run.seed << ": mAP " << fmt(r.test.map) << ", ist pseudo "
                      << pseudo_summary(r.intra) << ", cst pseudo " << pseudo_summary(r.cross) << "\n";
        }
        double mean = 0.0;
        for (double m : maps) mean += m / static_cast<double>(maps.size());
        csv << sst::to_string(v) << "," << fmt(cfg.world.known_proportion) << "," << fmt(mean);
        for (double m : maps) csv << "," << fmt(m);
        csv << "," << fmt(of1) << "," << fmt(cf1) << "\n";
    }
    write_text(a.out, csv.str());
    std::cout << "wrote " << rows.size() << " rows to " << a.out << "\n";
    return 0;
}

struct DiagnoseArgs {
    std::string module;
    std::string checkpoint;
    std::string data;
    std::string out;
    std::size_t limit = 20;
    std::size_t bins = 20;
};

int cmd_pseudo_diagnose(const DiagnoseArgs& a) {
    const auto loaded = sst::load_model(a.checkpoint);
    const auto train = sst::read_dataset(data_file(a.data, "train.jsonl"));
    std::ostringstream csv;
    if (a.module == "ist") {
        csv << "sample_id,i,j,probability,known_i,known_j,truth_i,truth_j\n";
        for (std::size_t n = 0; n < std::min(a.limit, train.size()); ++n) {
            const auto& s = train[n];
            const auto f = sst::forward_sarl(loaded.store, loaded.model.sarl, s.regions);
            const auto P = sst::predict_cooccurrence(loaded.store, loaded.model.ist, f.features);
            for (std::size_t i = 0; i < P.probs.rows(); ++i) {
                for (std::size_t j = 0; j < P.probs.cols(); ++j) {
                    if (i == j) continue;
                    csv << s.id << "," << i << "," << j << "," << fmt(P.probs(i, j)) << ","
                        << int(s.partial_labels[i]) << "," << int(s.partial_labels[j]) << ","
                        << int(s.full_labels[i]) << "," << int(s.full_labels[j]) << "\n";
                }
            }
        }
    } else if (a.module == "cst") {
        if (a.bins == 0) throw sst::Error("--bins must be positive");
        const std::size_t C = loaded.model.sarl.dims().categories;
        const auto memory = sst::build_memory(loaded.store, loaded.model, train, loaded.config.training.memory_capacity);
        // histogram[c][bin] = {withheld positives, withheld negatives}
        std::vector<std::vector<std::array<std::size_t, 2>>> hist(C, std::vector<std::array<std::size_t, 2>>(a.bins));
        for (const auto& s : train) {
            const auto f = sst::forward_sarl(loaded.store, loaded.model.sarl, s.regions);
            const auto sims = sst::mean_exemplar_similarity(f.features, memory);
            for (std::size_t c = 0; c < C; ++c) {
                if (s.partial_labels[c] != 0 || !sims[c]) continue;
                const double u = (*sims[c] + 1.0) / 2.0;
                const auto bin = std::min(a.bins - 1, static_cast<std::size_t>(u * static_cast<double>(a.bins)));
                ++hist[c][bin][s.full_labels[c] == 1 ? 0 : 1];
            }
        }
        csv << "category,bin_low,bin_high,withheld_positive,withheld_negative\n";
        for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t b = 0; b < a.bins; ++b) {
                const double lo = -1.0 + 2.0 * static_cast<double>(b) / static_cast<double>(a.bins);
                const double hi = -1.0 + 2.0 * static_cast<double>(b + 1) / static_cast<double>(a.bins);
                csv << c << "," << fmt(lo) << "," << fmt(hi) << "," << hist[c][b][0] << "," << hist[c][b][1] << "\n";
            }
        }
    } else {
        throw sst::Error("--module must be ist or cst");
    }
    write_text(a.out, csv.str());
    std::cout << "wrote " << a.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-label training from partially known labels"};
    app.require_subcommand(1);

    GenDataArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic world with train/test datasets");
    gen_cmd->add_option("--seed", gen.seed, "Seed for world and samples");
    gen_cmd->add_option("--categories", gen.categories, "Number of categories C");
    gen_cmd->add_option("--samples", gen.samples, "Total samples (train + test)");
    gen_cmd->add_option("--known-prop", gen.known_prop, "Proportion of known training labels per image");
    gen_cmd->add_option("--test-fraction", gen.test_fraction, "Fraction of samples held out as test set");
    gen_cmd->add_option("--config", gen.config, "Run configuration (JSON) for the remaining world parameters");
    gen_cmd->add_option("--out", gen.out, "Output directory")->required();

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Train a model on a generated dataset");
    train_cmd->add_option("--config", train.config, "Run configuration (JSON)");
    train_cmd->add_option("--data", train.data, "Dataset directory or train.jsonl")->required();
    train_cmd->add_option("--out-dir,--out", train.out_dir, "Run output directory")->required();
    train_cmd->add_option("--ablate", train.ablate, "no-ist, no-cst, or a variant name (baseline, ist, ist-stat, cst, sst)");

    EvaluateArgs eval;
    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate checkpoints (one per known proportion)");
    eval_cmd->add_option("--checkpoint", eval.checkpoints, "Checkpoint file; repeat for several proportions")->required();
    eval_cmd->add_option("--data", eval.data, "Dataset directory or test.jsonl")->required();
    eval_cmd->add_option("--out", eval.out, "Output CSV")->required();

    AblateArgs abl;
    auto* abl_cmd = app.add_subcommand("ablate", "Run the ablation grid and write a comparison CSV");
    abl_cmd->add_option("--config", abl.config, "Run configuration (JSON)");
    abl_cmd->add_option("--grid", abl.grid, "Rows to run (default: all)")->delimiter(',');
    abl_cmd->add_option("--seeds", abl.seeds, "Number of seeds per row");
    abl_cmd->add_option("--known-prop", abl.known_prop, "Override the known-label proportion");
    abl_cmd->add_option("--out", abl.out, "Output CSV")->required();

    DiagnoseArgs diag;
    auto* diag_cmd = app.add_subcommand("pseudo-diagnose", "Dump co-occurrence matrices or similarity histograms");
    diag_cmd->add_option("--module", diag.module, "ist or cst")->required();
    diag_cmd->add_option("--checkpoint", diag.checkpoint, "Checkpoint file")->required();
    diag_cmd->add_option("--data", diag.data, "Dataset directory or train.jsonl")->required();
    diag_cmd->add_option("--out", diag.out, "Output CSV")->required();
    diag_cmd->add_option("--limit", diag.limit, "Images to dump (ist)");
    diag_cmd->add_option("--bins", diag.bins, "Histogram bins (cst)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen_cmd->parsed()) return cmd_gen_data(gen);
        if (train_cmd->parsed()) return cmd_train(train);
        if (eval_cmd->parsed()) return cmd_evaluate(eval);
        if (abl_cmd->parsed()) return cmd_ablate(abl);
        if (diag_cmd->parsed()) return cmd_pseudo_diagnose(diag);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
