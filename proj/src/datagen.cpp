#include "sst/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

namespace sst {

using nlohmann::json;

void validate_labels(const LabelVector& labels) {
    for (auto v : labels) {
        if (v != -1 && v != 0 && v != 1) throw Error("label outside {-1, 0, +1}");
    }
}

std::size_t known_count(const LabelVector& labels) {
    return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](auto v) { return v != 0; }));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
    std::uint64_t z = base ^ (stream * 0x9E3779B97F4A7C15ULL) ^ (index * 0xD1B54A32D192ED03ULL);
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

World sample_world(std::uint64_t seed, std::size_t categories, std::size_t raw_dim,
                   double link_density, double noise_sigma, double distractor_rate) {
    if (categories < 2 || raw_dim < 2) throw Error("sample_world: need C >= 2 and D_raw >= 2");
    if (!(link_density >= 0.0 && link_density < 1.0)) throw Error("sample_world: link_density must lie in [0, 1)");
    if (noise_sigma < 0.0 || distractor_rate < 0.0) throw Error("sample_world: negative noise or distractor rate");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    World w;
    w.categories = categories;
    w.raw_dim = raw_dim;
    w.noise_sigma = noise_sigma;
    w.distractor_rate = distractor_rate;

    w.prototypes = Matrix(categories, raw_dim);
    for (std::size_t c = 0; c < categories; ++c) {
        auto row = w.prototypes.row(c);
        double n = 0.0;
        while (n < 1e-6) {
            for (auto& v : row) v = gauss(rng);
            n = norm(row);
        }
        for (auto& v : row) v /= n;
    }

    w.gt_cooccurrence = Matrix(categories, categories);
    for (std::size_t i = 0; i < categories; ++i) {
        w.gt_cooccurrence(i, i) = 1.0;
        for (std::size_t j = i + 1; j < categories; ++j) {
            const bool linked = unit(rng) < link_density;
            const double v = linked ? 0.6 + 0.35 * unit(rng) : 0.1 * unit(rng);
            w.gt_cooccurrence(i, j) = v;
            w.gt_cooccurrence(j, i) = v;
        }
    }

    w.base_rates.resize(categories);
    for (auto& r : w.base_rates) r = 0.02 + 0.06 * unit(rng);
    return w;
}

Sample sample_image(const World& world, std::uint64_t seed) {
    const std::size_t C = world.categories;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Sample s;
    s.full_labels.assign(C, -1);
    std::size_t positives = 0;
    while (positives == 0) {
        std::vector<bool> seeded(C, false);
        for (std::size_t c = 0; c < C; ++c) seeded[c] = unit(rng) < world.base_rates[c];
        std::vector<bool> positive = seeded;
        for (std::size_t j = 0; j < C; ++j) {
            if (seeded[j]) continue;
            double best = 0.0;
            for (std::size_t i = 0; i < C; ++i) {
                if (seeded[i]) best = std::max(best, world.gt_cooccurrence(i, j));
            }
            positive[j] = unit(rng) < 0.5 * best;
        }
        positives = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
        for (std::size_t c = 0; c < C; ++c) s.full_labels[c] = positive[c] ? 1 : -1;
    }

    std::poisson_distribution<int> distractors(world.distractor_rate);
    const std::size_t extra = world.distractor_rate > 0.0 ? static_cast<std::size_t>(distractors(rng)) : 0;
    s.regions = Matrix(positives + extra, world.raw_dim);
    std::size_t r = 0;
    for (std::size_t c = 0; c < C; ++c) {
        if (s.full_labels[c] != 1) continue;
        auto row = s.regions.row(r++);
        auto proto = world.prototypes.row(c);
        for (std::size_t d = 0; d < world.raw_dim; ++d) row[d] = proto[d] + world.noise_sigma * gauss(rng);
    }
    for (; r < s.regions.rows(); ++r) {
        for (auto& v : s.regions.row(r)) v = world.noise_sigma * gauss(rng);
    }
    s.partial_labels = s.full_labels;
    return s;
}

LabelVector drop_labels(const LabelVector& full_labels, double known_proportion, std::uint64_t seed) {
    if (!(known_proportion > 0.0 && known_proportion <= 1.0)) {
        throw Error("drop_labels: known proportion must lie in (0, 1]");
    }
    const std::size_t C = full_labels.size();
    const auto k = std::min<std::size_t>(
        C, std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(known_proportion * static_cast<double>(C)))));
    std::vector<std::size_t> order(C);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    LabelVector out(C, 0);
    for (std::size_t i = 0; i < k; ++i) out[order[i]] = full_labels[order[i]];
    return out;
}

Dataset make_dataset(const World& world, std::size_t count, double known_proportion,
                     std::uint64_t seed, std::uint64_t first_id) {
    Dataset data;
    data.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t id = first_id + i;
        Sample s = sample_image(world, derive_seed(seed, 1, id));
        s.id = id;
        data.push_back(std::move(s));
    }
    return with_known_proportion(std::move(data), known_proportion, seed);
}

Dataset with_known_proportion(Dataset data, double known_proportion, std::uint64_t seed) {
    for (auto& s : data) {
        s.partial_labels = known_proportion >= 1.0
                               ? s.full_labels
                               : drop_labels(s.full_labels, known_proportion, derive_seed(seed, 2, s.id));
    }
    return data;
}

json sample_to_json(const Sample& s) {
    json regions = json::array();
    for (std::size_t r = 0; r < s.regions.rows(); ++r) {
        auto row = s.regions.row(r);
        regions.push_back(std::vector<double>(row.begin(), row.end()));
    }
    std::vector<int> full(s.full_labels.begin(), s.full_labels.end());
    std::vector<int> partial(s.partial_labels.begin(), s.partial_labels.end());
    return {{"id", s.id}, {"regions", std::move(regions)}, {"full_labels", full}, {"partial_labels", partial}};
}

Sample sample_from_json(const json& j) {
    Sample s;
    try {
        s.id = j.at("id").get<std::uint64_t>();
        const auto rows = j.at("regions").get<std::vector<std::vector<double>>>();
        if (rows.empty()) throw Error("sample " + std::to_string(s.id) + " has no regions");
        const std::size_t width = rows.front().size();
        s.regions = Matrix(rows.size(), width);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != width) throw Error("sample " + std::to_string(s.id) + " has ragged regions");
            std::copy(rows[r].begin(), rows[r].end(), s.regions.row(r).begin());
        }
        for (int v : j.at("full_labels").get<std::vector<int>>()) s.full_labels.push_back(static_cast<std::int8_t>(v));
        for (int v : j.at("partial_labels").get<std::vector<int>>()) s.partial_labels.push_back(static_cast<std::int8_t>(v));
    } catch (const json::exception& e) {
        throw Error(std::string("malformed sample record: ") + e.what());
    }
    validate_labels(s.full_labels);
    validate_labels(s.partial_labels);
    if (s.full_labels.size() != s.partial_labels.size()) throw Error("sample label lengths differ");
    return s;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    for (const auto& s : data) out << sample_to_json(s).dump() << '\n';
}

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset '" + path.string() + "'");
    Dataset data;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            data.push_back(sample_from_json(json::parse(line)));
        } catch (const json::parse_error& e) {
            throw Error("cannot parse dataset line " + std::to_string(data.size() + 1) + ": " + e.what());
        }
    }
    return data;
}

json world_to_json(const World& w) {
    return {{"categories", w.categories},
            {"raw_dim", w.raw_dim},
            {"noise_sigma", w.noise_sigma},
            {"distractor_rate", w.distractor_rate},
            {"base_rates", w.base_rates},
            {"prototypes", w.prototypes.data()},
            {"gt_cooccurrence", w.gt_cooccurrence.data()}};
}

World world_from_json(const json& j) {
    World w;
    w.categories = j.at("categories").get<std::size_t>();
    w.raw_dim = j.at("raw_dim").get<std::size_t>();
    w.noise_sigma = j.at("noise_sigma").get<double>();
    w.distractor_rate = j.at("distractor_rate").get<double>();
    w.base_rates = j.at("base_rates").get<std::vector<double>>();
    w.prototypes = Matrix(w.categories, w.raw_dim, j.at("prototypes").get<std::vector<double>>());
    w.gt_cooccurrence = Matrix(w.categories, w.categories, j.at("gt_cooccurrence").get<std::vector<double>>());
    return w;
}

}  // namespace sst
