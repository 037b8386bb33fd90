#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sst/config.hpp"
#include "sst/datagen.hpp"
#include "sst/trainer.hpp"

namespace sst {

// Ablation rows: partial-BCE baseline, IST only, IST with the statistical
// co-occurrence matrix, CST only, and the full framework.
enum class Variant { baseline, ist, ist_stat, cst, sst };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);
const std::vector<Variant>& all_variants();
TrainingConfig apply_variant(TrainingConfig cfg, Variant v);

struct Benchmark {
    World world;
    Dataset train;  // partial labels at world.known_proportion
    Dataset test;   // partial labels equal full labels
};

// World, train and test sets derived from one seed.
Benchmark make_benchmark(const WorldConfig& cfg, std::uint64_t seed);

struct ExperimentResult {
    EvalResult test;
    // Pseudo labels from the final model over the training set at the final
    // epoch's thresholds.
    PseudoQuality intra;
    PseudoQuality cross;
    FitResult fit;
};

ExperimentResult run_experiment(const RunConfig& cfg, const Benchmark& bench);

struct LoadedModel {
    RunConfig config;
    ParamStore store;
    SstModel model;
};

// Writes checkpoint.json and train_report.jsonl into `dir`.
void save_run(const std::filesystem::path& dir, const RunConfig& cfg, const FitResult& fit,
              const std::optional<EvalResult>& final_metrics);
LoadedModel load_model(const std::filesystem::path& checkpoint);

// CSV with header known_proportion,mAP,OP,OR,OF1,CP,CR,CF1 and a final
// "average" row.
std::string evaluation_csv(const std::map<double, EvalResult>& results);

}  // namespace sst
