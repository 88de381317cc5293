#include "doctest.h"

#include "capsum/error.hpp"
#include "capsum/selector.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace capsum;

namespace {

std::vector<LabeledFeature> random_batch(std::mt19937_64& rng, int d, int n) {
    std::normal_distribution<float> n01;
    std::vector<LabeledFeature> batch(static_cast<std::size_t>(n));
    for (auto& ex : batch) {
        ex.feature.resize(static_cast<std::size_t>(d));
        for (auto& x : ex.feature) x = n01(rng);
        ex.label = static_cast<int>(rng() % 2);
    }
    return batch;
}

ExamStream random_stream(std::mt19937_64& rng, int n, int d) {
    std::normal_distribution<float> n01;
    std::vector<std::vector<float>> feats(static_cast<std::size_t>(n), std::vector<float>(static_cast<std::size_t>(d)));
    for (auto& f : feats)
        for (auto& x : f) x = n01(rng);
    return test::make_stream(feats);
}

}  // namespace

TEST_CASE("zero head scores 0.5") {
    const auto head = SelectorHead::zeros(3, 4);
    const std::vector<float> x{1.0f, -2.0f, 7.0f};
    CHECK(score_frame(head, x) == 0.5);
}

TEST_CASE("hand-set one-unit head gives logistic(2)") {
    auto head = SelectorHead::zeros(1, 1);
    head.w1 = {1.0};
    head.w2 = {2.0};
    const std::vector<float> x{1.0f};
    CHECK(score_frame(head, x) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-15));
    CHECK(score_frame(head, x) == doctest::Approx(0.8808).epsilon(1e-4));
}

TEST_CASE("score_frame rejects a wrong feature length") {
    const auto head = SelectorHead::zeros(3, 2);
    const std::vector<float> x{1.0f};
    CHECK_THROWS_AS(score_frame(head, x), DataError);
}

TEST_CASE("screen boundaries") {
    std::mt19937_64 rng(1);
    const auto s = random_stream(rng, 50, 4);
    const auto head = SelectorHead::initialized(4, 8, 2);
    CHECK(screen(s, head, 0.0).size() == 50);
    CHECK(screen(s, head, 1.0).size() == 0);
    CHECK_THROWS_AS(screen(s, head, 1.0001), ConfigError);
    CHECK_THROWS_AS(screen(s, head, -0.1), ConfigError);
}

TEST_CASE("screen is monotone in tau_s and keeps stream order") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u;
    for (int trial = 0; trial < 200; ++trial) {
        const auto s = random_stream(rng, 40, 6);
        const auto head = SelectorHead::initialized(6, 5, rng());
        double lo = u(rng), hi = u(rng);
        if (lo > hi) std::swap(lo, hi);
        const auto a = screen(s, head, lo);
        const auto b = screen(s, head, hi);
        CHECK(std::is_sorted(a.frame_indices.begin(), a.frame_indices.end()));
        CHECK(std::adjacent_find(a.frame_indices.begin(), a.frame_indices.end()) == a.frame_indices.end());
        CHECK(std::includes(a.frame_indices.begin(), a.frame_indices.end(), b.frame_indices.begin(),
                            b.frame_indices.end()));
        for (double sc : b.scores) CHECK(sc >= hi);
    }
}

TEST_CASE("bce closed forms") {
    SUBCASE("zero head, y = 1 gives ln 2") {
        const std::vector<LabeledFeature> batch{{{0.3f, -1.0f}, 1}};
        const auto lg = bce_loss_and_grad(SelectorHead::zeros(2, 3), batch);
        CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    }
    SUBCASE("perfect fit has vanishing loss and gradient") {
        auto head = SelectorHead::zeros(2, 3);
        head.b2 = 60.0;
        const std::vector<LabeledFeature> batch{{{1.0f, 2.0f}, 1}, {{-1.0f, 0.5f}, 1}};
        const auto lg = bce_loss_and_grad(head, batch);
        CHECK(lg.loss >= 0.0);
        CHECK(lg.loss < 1e-9);
        for (double g : lg.gradient.flatten()) CHECK(std::abs(g) < 1e-9);
    }
    SUBCASE("empty batch") {
        CHECK_THROWS_AS(bce_loss_and_grad(SelectorHead::zeros(2, 3), {}), DataError);
    }
}

TEST_CASE("analytic gradient matches central differences") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 2 + static_cast<int>(rng() % 5);
        const int h = 1 + static_cast<int>(rng() % 6);
        const auto head = SelectorHead::initialized(d, h, rng());
        const auto batch = random_batch(rng, d, 1 + static_cast<int>(rng() % 8));
        CHECK(oracle::gradient_check(head, batch) < 1e-4);
    }
}

TEST_CASE("training separates a linearly separable toy set") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    std::vector<LabeledFeature> data;
    while (data.size() < 200) {
        const float x = u(rng), y = u(rng);
        if (std::abs(x + y) < 0.2f) continue;
        data.push_back({{x, y}, x + y > 0 ? 1 : 0});
    }
    TrainOptions opts;
    opts.hidden_dim = 8;
    opts.epochs = 200;
    opts.learning_rate = 0.5;
    opts.batch_size = 32;
    opts.seed = 3;
    const auto trained = train_head(data, opts);
    CHECK(evaluate_head(trained.head, data, 0.5).accuracy == 1.0);
    CHECK(trained.meta.final_loss < bce_loss_and_grad(SelectorHead::initialized(2, 8, 3), data).loss);
}

TEST_CASE("epochs = 0 returns the seeded initialization") {
    std::mt19937_64 rng(4);
    const auto data = random_batch(rng, 3, 10);
    TrainOptions opts;
    opts.hidden_dim = 4;
    opts.epochs = 0;
    opts.seed = 77;
    CHECK(train_head(data, opts).head == SelectorHead::initialized(3, 4, 77));
}

TEST_CASE("training is deterministic per seed") {
    std::mt19937_64 rng(4);
    const auto data = random_batch(rng, 3, 40);
    TrainOptions opts;
    opts.hidden_dim = 4;
    opts.epochs = 5;
    opts.batch_size = 7;
    opts.seed = 5;
    CHECK(train_head(data, opts).head == train_head(data, opts).head);
    auto other = opts;
    other.seed = 6;
    CHECK_FALSE(train_head(data, opts).head == train_head(data, other).head);
}

TEST_CASE("training errors") {
    std::mt19937_64 rng(4);
    auto data = random_batch(rng, 3, 10);
    TrainOptions opts;
    opts.epochs = 3;
    SUBCASE("one class only") {
        for (auto& ex : data) ex.label = 1;
        CHECK_THROWS_AS(train_head(data, opts), DataError);
    }
    SUBCASE("divergence names the epoch") {
        data[0].label = 0;
        data[1].label = 1;
        data[2].feature.assign(data[2].feature.size(), std::numeric_limits<float>::infinity());
        try {
            train_head(data, opts);
            FAIL("expected TrainingError");
        } catch (const TrainingError& e) {
            CHECK(e.epoch() >= 1);
            CHECK(e.epoch() <= opts.epochs);
        }
    }
}

TEST_CASE("head JSON round-trip") {
    TrainedHead t{SelectorHead::initialized(5, 3, 8), {8, 2, 0.25, 16, 0.125}};
    const auto back = head_from_json(head_to_json(t));
    CHECK(back.head == t.head);
    CHECK(back.meta == t.meta);
    auto j = head_to_json(t);
    j["w1"].erase(0);
    CHECK_THROWS_AS(head_from_json(j), DataError);
}
