#include "sst/config.hpp"

#include <functional>
#include <map>
#include <string>

#include "sst/checkpoint.hpp"

namespace sst {

using nlohmann::json;

namespace {

// One entry per config key: how to write it and how to read it back.
struct Field {
    std::function<json(const RunConfig&)> get;
    std::function<void(RunConfig&, const json&)> set;
};

template <typename T, typename Accessor>
Field field(Accessor acc) {
    return {[acc](const RunConfig& c) { return json(acc(c)); },
            [acc](RunConfig& c, const json& v) { acc(c) = v.get<T>(); }};
}

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> f;
        f["seed"] = field<std::uint64_t>([](auto& c) -> auto& { return c.seed; });
        f["decision_threshold"] = field<double>([](auto& c) -> auto& { return c.decision_threshold; });

        f["categories"] = field<std::size_t>([](auto& c) -> auto& { return c.world.categories; });
        f["raw_dim"] = field<std::size_t>([](auto& c) -> auto& { return c.world.raw_dim; });
        f["link_density"] = field<double>([](auto& c) -> auto& { return c.world.link_density; });
        f["noise_sigma"] = field<double>([](auto& c) -> auto& { return c.world.noise_sigma; });
        f["distractor_rate"] = field<double>([](auto& c) -> auto& { return c.world.distractor_rate; });
        f["train_samples"] = field<std::size_t>([](auto& c) -> auto& { return c.world.train_samples; });
        f["test_samples"] = field<std::size_t>([](auto& c) -> auto& { return c.world.test_samples; });
        f["known_proportion"] = field<double>([](auto& c) -> auto& { return c.world.known_proportion; });

        f["epochs"] = field<std::size_t>([](auto& c) -> auto& { return c.training.epochs; });
        f["warmup_epochs"] = field<std::size_t>([](auto& c) -> auto& { return c.training.warmup_epochs; });
        f["threshold_start"] = field<double>([](auto& c) -> auto& { return c.training.threshold_start; });
        f["threshold_step"] = field<double>([](auto& c) -> auto& { return c.training.threshold_step; });
        f["intra_threshold_min"] = field<double>([](auto& c) -> auto& { return c.training.intra_threshold_min; });
        f["inter_threshold_min"] = field<double>([](auto& c) -> auto& { return c.training.inter_threshold_min; });
        f["lambda_ist"] = field<double>([](auto& c) -> auto& { return c.training.lambda_ist; });
        f["lambda_cst"] = field<double>([](auto& c) -> auto& { return c.training.lambda_cst; });
        f["gamma_pos"] = field<double>([](auto& c) -> auto& { return c.training.ist_loss.gamma_pos; });
        f["gamma_neg"] = field<double>([](auto& c) -> auto& { return c.training.ist_loss.gamma_neg; });
        f["margin"] = field<double>([](auto& c) -> auto& { return c.training.ist_loss.margin; });
        f["batch_size"] = field<std::size_t>([](auto& c) -> auto& { return c.training.batch_size; });
        f["learning_rate"] = field<double>([](auto& c) -> auto& { return c.training.optimizer.learning_rate; });
        f["beta1"] = field<double>([](auto& c) -> auto& { return c.training.optimizer.beta1; });
        f["beta2"] = field<double>([](auto& c) -> auto& { return c.training.optimizer.beta2; });
        f["adam_epsilon"] = field<double>([](auto& c) -> auto& { return c.training.optimizer.epsilon; });
        f["weight_decay"] = field<double>([](auto& c) -> auto& { return c.training.optimizer.weight_decay; });
        f["lr_decay_every"] = field<std::size_t>([](auto& c) -> auto& { return c.training.lr_decay_every; });
        f["lr_decay_factor"] = field<double>([](auto& c) -> auto& { return c.training.lr_decay_factor; });
        f["use_ist"] = field<bool>([](auto& c) -> auto& { return c.training.use_ist; });
        f["ist_feature_gradient"] = field<bool>([](auto& c) -> auto& { return c.training.ist_feature_gradient; });
        f["use_cst"] = field<bool>([](auto& c) -> auto& { return c.training.use_cst; });
        f["memory_capacity"] = field<std::size_t>([](auto& c) -> auto& { return c.training.memory_capacity; });
        f["hidden_dim"] = field<std::size_t>([](auto& c) -> auto& { return c.training.model.hidden_dim; });
        f["feature_dim"] = field<std::size_t>([](auto& c) -> auto& { return c.training.model.feature_dim; });
        f["ist_hidden1"] = field<std::size_t>([](auto& c) -> auto& { return c.training.model.ist_hidden1; });
        f["ist_hidden2"] = field<std::size_t>([](auto& c) -> auto& { return c.training.model.ist_hidden2; });
        f["cooccurrence_source"] = {
            [](const RunConfig& c) { return json(to_string(c.training.cooccurrence_source)); },
            [](RunConfig& c, const json& v) {
                c.training.cooccurrence_source = cooccurrence_source_from_string(v.get<std::string>());
            }};
        return f;
    }();
    return table;
}

}  // namespace

RunConfig RunConfig::bench_small() {
    RunConfig c;
    c.world = WorldConfig{};
    c.training = TrainingConfig{};
    c.training.optimizer.learning_rate = 5e-3;
    return c;
}

json to_json(const RunConfig& cfg) {
    json j = json::object();
    for (const auto& [key, f] : fields()) j[key] = f.get(cfg);
    return j;
}

RunConfig run_config_from_json(const json& j) {
    if (!j.is_object()) throw Error("config: expected a JSON object");
    RunConfig cfg;
    const auto& table = fields();
    for (const auto& [key, value] : j.items()) {
        auto it = table.find(key);
        if (it == table.end()) throw Error("config: unknown key '" + key + "'");
        try {
            it->second.set(cfg, value);
        } catch (const json::exception&) {
            throw Error("config: invalid value for key '" + key + "'");
        }
    }
    cfg.training.seed = cfg.seed;
    cfg.training.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) { return run_config_from_json(load_json_file(path)); }

}  // namespace sst
