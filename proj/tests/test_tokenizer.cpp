#include "doctest.h"

#include "capsum/error.hpp"
#include "capsum/tokenizer.hpp"
#include "helpers.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace capsum;

namespace {

CandidateSet all_of(const ExamStream& s) {
    CandidateSet c;
    for (const auto& f : s.frames) {
        c.frame_indices.push_back(f.frame_index);
        c.scores.push_back(1.0);
    }
    return c;
}

TokenizerOptions raw(double lambda) {
    TokenizerOptions o;
    o.lambda_time = lambda;
    o.normalize_visual = false;
    return o;
}

}  // namespace

TEST_CASE("temporal embedding at position 0 alternates 0, 1") {
    for (int d : {2, 8, 384}) {
        const auto e = temporal_embedding(0.0, d);
        for (int k = 0; k < d; ++k) CHECK(e[static_cast<std::size_t>(k)] == (k % 2 == 0 ? 0.0 : 1.0));
    }
}

TEST_CASE("temporal embedding squared norm is d/2") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1e5);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 2 * (1 + static_cast<int>(rng() % 200));
        const auto e = temporal_embedding(u(rng), d);
        double sq = 0.0;
        for (double v : e) sq += v * v;
        CHECK(sq == doctest::Approx(d / 2.0).epsilon(1e-12));
    }
}

TEST_CASE("temporal embedding first pair at position pi") {
    const auto e = temporal_embedding(std::numbers::pi, 16);
    CHECK(std::abs(e[0]) < 1e-12);
    CHECK(std::abs(e[1] + 1.0) < 1e-12);
}

TEST_CASE("temporal embedding rejects odd dimensions and bad bases") {
    CHECK_THROWS_AS(temporal_embedding(1.0, 7), ConfigError);
    CHECK_THROWS_AS(temporal_embedding(1.0, 8, 1.0), ConfigError);
    CHECK_THROWS_AS(temporal_embedding(-1.0, 8), DataError);
}

TEST_CASE("single candidate yields one token with the feature as visual half") {
    const auto s = test::make_stream({{0.5f, -2.0f, 3.0f, 1.0f}});
    const auto tokens = tokenize(all_of(s), s, raw(1.0));
    REQUIRE(tokens.size() == 1);
    REQUIRE(tokens[0].vector.size() == 8);
    for (int i = 0; i < 4; ++i) CHECK(tokens[0].vector[static_cast<std::size_t>(i)] == s.frames[0].feature[static_cast<std::size_t>(i)]);
}

TEST_CASE("lambda_time = 0 zeroes the temporal half") {
    const auto s = test::make_stream({{1.0f, 0.0f}, {0.0f, 1.0f}}, {}, {0.0, 5000.0});
    const auto tokens = tokenize(all_of(s), s, raw(0.0));
    for (const auto& t : tokens) {
        CHECK(t.vector[2] == 0.0);
        CHECK(t.vector[3] == 0.0);
    }
    CHECK(token_affinity(tokens[0], tokens[1]) == 0.0);  // orthogonal visual halves
}

TEST_CASE("identical features far apart in time have affinity below 1") {
    const auto s = test::make_stream({{1.0f, 2.0f, 3.0f, 4.0f}, {1.0f, 2.0f, 3.0f, 4.0f}}, {}, {0.0, 10000.0});
    const auto o = raw(1.0);
    const auto tokens = tokenize(all_of(s), s, o);
    const double a = token_affinity(tokens[0], tokens[1]);

    // Direct evaluation: shared visual part v.v plus the dot of the two embeddings.
    const auto e0 = temporal_embedding(0.0, 4), e1 = temporal_embedding(10000.0 / o.time_scale_sec, 4);
    const double vv = 1 + 4 + 9 + 16;
    double ee = 0.0;
    for (int i = 0; i < 4; ++i) ee += e0[static_cast<std::size_t>(i)] * e1[static_cast<std::size_t>(i)];
    const double expected = (vv + ee) / (vv + 2.0);
    CHECK(a == doctest::Approx(expected).epsilon(1e-12));
    CHECK(a < 1.0);
    CHECK(a > (vv - 2.0) / (vv + 2.0));
}

TEST_CASE("token invariants on random candidates") {
    std::mt19937_64 rng(13);
    std::normal_distribution<float> n01;
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 2 * (1 + static_cast<int>(rng() % 8));
        const int n = 1 + static_cast<int>(rng() % 10);
        std::vector<std::vector<float>> feats(static_cast<std::size_t>(n), std::vector<float>(static_cast<std::size_t>(d)));
        for (auto& f : feats)
            for (auto& x : f) x = n01(rng);
        std::vector<double> ts;
        double t = 0;
        for (int i = 0; i < n; ++i) ts.push_back(t += 100 * u(rng));
        const auto s = test::make_stream(feats, {}, ts);
        const double lambda = u(rng);
        const auto a = tokenize(all_of(s), s, raw(lambda));
        const auto b = tokenize(all_of(s), s, raw(lambda));
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(a[k].vector == b[k].vector);
            double sq = 0.0;
            for (int i = d; i < 2 * d; ++i) sq += a[k].vector[static_cast<std::size_t>(i)] * a[k].vector[static_cast<std::size_t>(i)];
            CHECK(sq == doctest::Approx(lambda * lambda * d / 2.0).epsilon(1e-12));
            for (int i = 0; i < d; ++i) CHECK(a[k].vector[static_cast<std::size_t>(i)] == s.frames[k].feature[static_cast<std::size_t>(i)]);
        }
    }
}

TEST_CASE("default options balance both halves") {
    const auto s = test::make_stream({{3.0f, 4.0f, 0.0f, 0.0f}}, {}, {120.0});
    const auto tok = tokenize(all_of(s), s, TokenizerOptions{}).front();
    double vis = 0.0, tmp = 0.0;
    for (int i = 0; i < 4; ++i) vis += tok.vector[static_cast<std::size_t>(i)] * tok.vector[static_cast<std::size_t>(i)];
    for (int i = 4; i < 8; ++i) tmp += tok.vector[static_cast<std::size_t>(i)] * tok.vector[static_cast<std::size_t>(i)];
    CHECK(vis == doctest::Approx(1.0));
    CHECK(tmp == doctest::Approx(1.0));
}

TEST_CASE("frame-index positions") {
    const auto s = test::make_stream({{1.0f, 0.0f}, {1.0f, 0.0f}}, {}, {0.0, 0.5});
    auto o = raw(1.0);
    o.position_source = PositionSource::FrameIndex;
    const auto tokens = tokenize(all_of(s), s, o);
    CHECK(tokens[1].vector[2] == doctest::Approx(std::sin(1.0)));
    CHECK(tokens[1].vector[3] == doctest::Approx(std::cos(1.0)));
}

TEST_CASE("affinity closed forms") {
    SpatioTemporalToken a{0, 0.0, {1.0, 2.0, 3.0, 4.0}};
    CHECK(token_affinity(a, a) == doctest::Approx(1.0).epsilon(1e-15));
    SpatioTemporalToken z{1, 0.0, {0.0, 0.0, 0.0, 0.0}};
    CHECK(token_affinity(a, z) == 0.0);
}
