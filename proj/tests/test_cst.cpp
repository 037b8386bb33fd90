#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "sst/cst.hpp"

using sst::ExemplarMemory;
using sst::LabelVector;
using sst::Matrix;
using sst::ParamStore;

TEST_CASE("cosine similarity special cases") {
    const std::vector<double> f{0.3, -1.2, 2.0}, neg{-0.3, 1.2, -2.0};
    CHECK(std::abs(sst::cosine_similarity(f, f).value - 1.0) < 1e-15);
    CHECK(std::abs(sst::cosine_similarity(f, neg).value + 1.0) < 1e-15);
    const std::vector<double> a{1.0, 0.0, 0.0}, b{0.0, 5.0, 0.0};
    CHECK(sst::cosine_similarity(a, b).value == 0.0);
    const std::vector<double> zero{0.0, 0.0, 0.0};
    const auto d = sst::cosine_similarity(f, zero);
    CHECK(d.degenerate);
    CHECK(d.value == 0.0);
}

TEST_CASE("cosine similarity ignores positive rescaling") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix m = fixtures::random_matrix(2, 6, rng);
        std::vector<double> scaled(m.row(0).begin(), m.row(0).end());
        for (auto& v : scaled) v *= 3.7;
        CHECK(sst::cosine_similarity(scaled, m.row(1)).value ==
              doctest::Approx(sst::cosine_similarity(m.row(0), m.row(1)).value).epsilon(1e-13));
    }
}

TEST_CASE("memory buckets are first-in first-out") {
    ExemplarMemory mem(2, 2);
    const std::vector<double> a{1, 2}, b{3, 4}, c{5, 6};
    mem.push(0, 10, a);
    mem.push(0, 11, b);
    CHECK(mem.bucket(0).front().feature == a);
    mem.push(0, 12, c);
    REQUIRE(mem.bucket(0).size() == 2);
    CHECK(mem.bucket(0)[0].sample_id == 11);
    CHECK(mem.bucket(0)[0].feature == b);
    CHECK(mem.bucket(0)[1].feature == c);
    CHECK(mem.bucket(1).empty());
    CHECK(mem.total_size() == 2);
    CHECK_THROWS_AS(ExemplarMemory(2, 0), sst::Error);
}

TEST_CASE("memory stores only known positives") {
    ExemplarMemory mem(3, 4);
    const Matrix f(3, 2, {1, 2, 3, 4, 5, 6});
    sst::update_memory(mem, f, {0, -1, 0}, 1);
    CHECK(mem.total_size() == 0);
    sst::update_memory(mem, f, {1, -1, 1}, 2);
    CHECK(mem.bucket(0).size() == 1);
    CHECK(mem.bucket(1).empty());
    CHECK(mem.bucket(2).front().feature == std::vector<double>{5, 6});
}

TEST_CASE("cross-image pseudo labels") {
    const Matrix f(1, 2, {1.0, 0.0});
    SUBCASE("mean similarity above the threshold") {
        ExemplarMemory mem(1, 4);
        mem.push(0, 1, std::vector<double>{0.9, std::sqrt(1.0 - 0.81)});
        mem.push(0, 2, std::vector<double>{0.7, std::sqrt(1.0 - 0.49)});
        CHECK(std::abs(*sst::mean_exemplar_similarity(f, mem)[0] - 0.8) < 1e-12);
        CHECK(sst::generate_cross_pseudo(f, {0}, mem, 0.75) == LabelVector{1});
        CHECK(sst::generate_cross_pseudo(f, {0}, mem, 0.85) == LabelVector{0});
        CHECK(sst::generate_cross_pseudo(f, {-1}, mem, 0.75) == LabelVector{-1});
    }
    SUBCASE("empty memory copies the known labels") {
        ExemplarMemory mem(3, 4);
        const Matrix g(3, 2, 1.0);
        CHECK(sst::generate_cross_pseudo(g, {0, 1, -1}, mem, -1.0) == LabelVector{0, 1, -1});
    }
    SUBCASE("the threshold is inclusive") {
        ExemplarMemory mem(1, 4);
        mem.push(0, 1, std::vector<double>{2.0, 0.0});
        mem.push(0, 2, std::vector<double>{0.5, 0.0});
        CHECK(sst::generate_cross_pseudo(f, {0}, mem, 1.0) == LabelVector{1});
    }
}

TEST_CASE("cross-image pseudo labels shrink as the threshold rises") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        ExemplarMemory mem(5, 3);
        for (int k = 0; k < 8; ++k) {
            sst::update_memory(mem, fixtures::random_matrix(5, 4, rng), fixtures::random_partial(5, rng), k);
        }
        const Matrix f = fixtures::random_matrix(5, 4, rng);
        const auto y = fixtures::random_partial(5, rng);
        LabelVector prev = sst::generate_cross_pseudo(f, y, mem, -1.0);
        for (double theta = -0.9; theta <= 1.0; theta += 0.1) {
            const auto cur = sst::generate_cross_pseudo(f, y, mem, theta);
            for (std::size_t c = 0; c < 5; ++c) {
                if (y[c] != 0) CHECK(cur[c] == y[c]);
                if (cur[c] == 1) CHECK(prev[c] == 1);
            }
            prev = cur;
        }
    }
}

TEST_CASE("ranking loss examples") {
    const Matrix f(1, 3, {0.5, -1.0, 2.0});
    const Matrix g(1, 3, {2.0, 1.0, 0.0});
    SUBCASE("aligned positives") {
        const std::vector<Matrix> feats{f, f};
        const std::vector<LabelVector> y{{1}, {1}};
        CHECK(std::abs(sst::cst_loss(feats, y).loss) < 1e-15);
    }
    SUBCASE("aligned mismatch") {
        const std::vector<Matrix> feats{f, f};
        const std::vector<LabelVector> y{{1}, {-1}};
        CHECK(std::abs(sst::cst_loss(feats, y).loss - 2.0) < 1e-15);
    }
    SUBCASE("orthogonal positives") {
        const std::vector<Matrix> feats{f, g};
        const std::vector<LabelVector> y{{1}, {1}};
        CHECK(sst::cst_loss(feats, y).loss == 1.0);
    }
    SUBCASE("no contributing triples") {
        const std::vector<Matrix> feats{f, g};
        const std::vector<LabelVector> y{{0}, {1}};
        const auto r = sst::cst_loss(feats, y);
        CHECK(r.loss == 0.0);
        CHECK(r.triples == 0);
        CHECK(sst::cst_loss(std::vector<Matrix>{f}, std::vector<LabelVector>{{1}}).loss == 0.0);
    }
}

TEST_CASE("ranking loss averages over sample pairs and categories") {
    std::mt19937_64 rng(3);
    const std::vector<Matrix> feats{fixtures::random_matrix(3, 4, rng), fixtures::random_matrix(3, 4, rng),
                                    fixtures::random_matrix(3, 4, rng)};
    const std::vector<LabelVector> y{{1, -1, 0}, {1, 1, 0}, {-1, 0, 1}};
    double total = 0.0;
    std::size_t triples = 0;
    for (std::size_t n = 0; n < 3; ++n) {
        for (std::size_t m = n + 1; m < 3; ++m) {
            for (std::size_t c = 0; c < 3; ++c) {
                if (y[n][c] == 0 || y[m][c] == 0) continue;
                const double s = sst::cosine_similarity(feats[n].row(c), feats[m].row(c)).value;
                total += (y[n][c] == 1 && y[m][c] == 1) ? 1.0 - s : 1.0 + s;
                ++triples;
            }
        }
    }
    const auto r = sst::cst_loss(feats, y);
    CHECK(r.triples == triples);
    CHECK(std::abs(r.loss - total / static_cast<double>(triples)) < 1e-14);
}

TEST_CASE("ranking loss ignores positive rescaling of features") {
    std::mt19937_64 rng(4);
    std::vector<Matrix> feats{fixtures::random_matrix(4, 5, rng), fixtures::random_matrix(4, 5, rng),
                              fixtures::random_matrix(4, 5, rng)};
    const std::vector<LabelVector> y{{1, -1, 1, 0}, {1, 1, -1, 1}, {-1, 1, 1, 1}};
    const double before = sst::cst_loss(feats, y).loss;
    for (auto& v : feats[1].row(2)) v *= 0.01;
    for (auto& v : feats[0].data()) v *= 42.0;
    CHECK(sst::cst_loss(feats, y).loss == doctest::Approx(before).epsilon(1e-13));
}

TEST_CASE("ranking loss gradient with respect to the features") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        ParamStore store;
        std::vector<sst::ParamId> ids;
        std::vector<LabelVector> y;
        for (int n = 0; n < 4; ++n) {
            ids.push_back(store.add("f" + std::to_string(n), fixtures::random_matrix(6, 8, rng)));
            y.push_back(fixtures::random_partial(6, rng));
        }
        const auto gather = [&](const ParamStore& s) {
            std::vector<Matrix> out;
            for (auto id : ids) out.push_back(s.value(id));
            return out;
        };
        const auto loss = [&](const ParamStore& s) { return sst::cst_loss(gather(s), y).loss; };
        const auto r = sst::cst_loss(gather(store), y);
        for (std::size_t n = 0; n < ids.size(); ++n) store.grad(ids[n]) = r.d_features[n];
        CHECK(sst::finite_diff_check(loss, store) < 1e-4);
    }
}
