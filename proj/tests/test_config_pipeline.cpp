#include "doctest.h"

#include "capsum/error.hpp"
#include "capsum/pipeline.hpp"

#include <atomic>
#include <filesystem>
#include <set>
#include <stdexcept>

using namespace capsum;
namespace fs = std::filesystem;

namespace {

RunConfig smoke_config(const fs::path& out) {
    auto c = load_config(fs::path(CAPSUM_FIXTURE_DIR) / "smoke.jsonc");
    c.paths.out_dir = out.string();
    return c;
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("capsum_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("config requires a matching schema version") {
    CHECK_THROWS_AS(config_from_json(json::object()), ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"schema_version", 2}}), ConfigError);
    CHECK_NOTHROW(config_from_json(json{{"schema_version", 1}}));
}

TEST_CASE("config rejects unknown keys and bad values") {
    CHECK_THROWS_AS(config_from_json(json{{"schema_version", 1}, {"colour", 1}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"schema_version", 1}, {"weaver", {{"sigma", 1}}}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"schema_version", 1}, {"selector", {{"tau_s", 1.5}}}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"schema_version", 1}, {"selector", {{"tau_s", "high"}}}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"schema_version", 1}, {"simulator", {{"frames", 3}}}}), ConfigError);
    CHECK_THROWS_AS(
        config_from_json(json{{"schema_version", 1}, {"weaver", {{"sigma_coarse", 0.9}, {"sigma_fine", 0.5}}}}),
        ConfigError);
}

TEST_CASE("config JSON round-trip") {
    auto c = config_from_json(json{{"schema_version", 1},
                                   {"seed", 42},
                                   {"tokenizer", {{"lambda_time", 0.25}, {"position_source", "frame_index"}}},
                                   {"converger", {{"medoid_metric", "cosine"}}}});
    CHECK(c.seed == 42);
    CHECK(*c.tokenizer.lambda_time == 0.25);
    CHECK(c.converger.medoid_metric == MedoidMetric::Cosine);
    CHECK(config_to_json(config_from_json(config_to_json(c))) == config_to_json(c));
    CHECK_FALSE(config_from_json(json{{"schema_version", 1}, {"tokenizer", {{"lambda_time", "auto"}}}}).tokenizer.lambda_time);
}

TEST_CASE("config files may carry comments") {
    const auto c = load_config(fs::path(CAPSUM_FIXTURE_DIR) / "smoke.jsonc");
    CHECK(c.seed == 7);
    CHECK(c.corpus.eval_exams == 2);
    CHECK(c.simulator.feature_dim == 32);
    CHECK_THROWS_AS(load_config("/nonexistent/config.jsonc"), ConfigError);
}

TEST_CASE("default paths resolve under out_dir") {
    RunConfig c;
    c.paths.out_dir = "runs/x";
    CHECK(c.exam_dir() == fs::path("runs/x/exams"));
    CHECK(c.head_path() == fs::path("runs/x/selector_head.json"));
    c.paths.summary_dir = "elsewhere";
    CHECK(c.summary_dir() == fs::path("elsewhere"));
}

TEST_CASE("exam seeds are distinct across corpora") {
    CHECK(exam_seed(1, 0) != exam_seed(1, 1));
    CHECK(exam_seed(1, 0) != train_exam_seed(1, 0));
    CHECK(exam_seed(1, 0) == exam_seed(1, 0));
}

TEST_CASE("variant names") {
    for (auto v : {Variant::Full, Variant::NoWeaver, Variant::NoConverger, Variant::FrameByFrame}) {
        CHECK(variant_from_string(to_string(v)) == v);
    }
    CHECK_THROWS_AS(variant_from_string("bogus"), ConfigError);
}

TEST_CASE("parallel_for visits every index once and rethrows the lowest failure") {
    for (int workers : {1, 3, 8}) {
        std::vector<std::atomic<int>> hits(50);
        parallel_for(50, workers, [&](std::size_t i) { ++hits[i]; });
        for (const auto& h : hits) CHECK(h.load() == 1);

        try {
            parallel_for(20, workers, [](std::size_t i) {
                if (i == 7 || i == 13) throw std::runtime_error(std::to_string(i));
            });
            FAIL("expected an exception");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()) == "7");
        }
    }
}

TEST_CASE("every variant yields a valid summary on a small exam") {
    LogLine::set_enabled(false);
    auto cfg = smoke_config(scratch("variants"));
    const auto train = simulate_corpus(cfg, true);
    const auto head = train_selector(train, cfg).trained.head;
    const auto exams = simulate_corpus(cfg);
    REQUIRE(exams.size() == 2);
    CHECK(exams[0].stream.patient_id == "exam-000");
    for (auto v : {Variant::Full, Variant::NoWeaver, Variant::NoConverger, Variant::FrameByFrame}) {
        const auto r = summarize(exams[0].stream, head, cfg, v);
        CHECK(validate_summary(r.summary).empty());
        CHECK(r.summary.patient_id == "exam-000");
        if (v != Variant::FrameByFrame) CHECK(r.stats.candidates == r.hierarchy.candidate_count());
    }
}

TEST_CASE("noiseless exams are summarized exactly") {
    LogLine::set_enabled(false);
    auto cfg = smoke_config(scratch("noiseless"));
    std::vector<std::vector<double>> eye(12, std::vector<double>(12, 0.0));
    for (int i = 0; i < 12; ++i) eye[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0;
    cfg.simulator.confusion = eye;
    cfg.simulator.dist_concentration = 0.0;
    cfg.simulator.blur_fraction = 0.0;
    cfg.simulator.mimic_bursts_per_hour = 0.0;
    cfg.simulator.sigma_vis = 0.0;
    cfg.simulator.drift_norm = 0.0;
    cfg.simulator.views_per_event = {1, 1};
    cfg.simulator.min_event_gap_sec = 400.0;
    const double c_fps = cfg.simulator.frames_per_sec;
    const auto exams = simulate_corpus(cfg);
    const auto head = train_selector(simulate_corpus(cfg, true), cfg).trained.head;
    for (const auto& ex : exams) {
        const auto r = summarize(ex.stream, head, cfg);
        const std::vector<DiagnosticSummary> s{r.summary};
        const std::vector<AnnotationSet> a{ex.annotations};
        const auto results = evaluate_patients(s, a, cfg.evaluation);
        CHECK(*lesion_metrics(results).detection_rate == 1.0);
        CHECK(r.summary.entries.size() == ex.annotations.findings.size());

        // One event per 300 s bin: the ablations have nothing to get wrong.
        std::set<long> bins;
        for (const auto& e : ex.truth.events) {
            bins.insert(static_cast<long>(e.first_frame / c_fps / 300.0));
            REQUIRE(static_cast<long>(e.first_frame / c_fps / 300.0) == static_cast<long>(e.last_frame / c_fps / 300.0));
        }
        REQUIRE(bins.size() == ex.truth.events.size());
        for (auto v : {Variant::NoWeaver, Variant::NoConverger}) {
            const auto other = summarize(ex.stream, head, cfg, v).summary;
            REQUIRE(other.entries.size() == r.summary.entries.size());
            for (std::size_t i = 0; i < other.entries.size(); ++i) {
                CHECK(other.entries[i].frame_index == r.summary.entries[i].frame_index);
                CHECK(other.entries[i].label == r.summary.entries[i].label);
            }
        }
    }
}

TEST_CASE("consistency comparison pairs patients by id") {
    const auto entry = [](double t, LabelId l) {
        SummaryEntry e;
        e.timestamp_sec = t;
        e.label = {l, "c", false};
        e.confidence = 0.9;
        return e;
    };
    std::vector<DiagnosticSummary> a, b;
    for (int p = 0; p < 8; ++p) {
        const std::string id = "p" + std::to_string(p);
        a.push_back({id, {entry(0, 0), entry(20, 0), entry(40, 0)}});
        b.push_back({id, {entry(0, 0), entry(20, 1), entry(40 + p, 0)}});
    }
    std::reverse(b.begin(), b.end());
    EvalParams params;
    params.tau_grid_sec = {30.0, 60.0};
    const auto c = compare_consistency(a, b, params, "x", "y");
    REQUIRE(c.per_tau.size() == 2);
    CHECK(*c.per_tau[0].a.pooled_rate == 0.0);
    CHECK(*c.per_tau[0].b.pooled_rate == 1.0);
    CHECK(c.per_tau[0].paired_patients == 8);
    CHECK(c.per_tau[0].wilcoxon.conclusive);
    CHECK(c.per_tau[0].wilcoxon.w_minus == 36.0);
    CHECK(c.intervals_a.empty());
    CHECK(c.intervals_b.size() == 16);
    CHECK(consistency_to_json(c)["method_a"] == "x");
    const std::vector<InconsistencyAtTau> rows{c.per_tau[0].a};
    CHECK(inconsistency_csv(rows, "x") == "x,30,0,16\n");
}

TEST_CASE("command round trip is deterministic across worker counts") {
    LogLine::set_enabled(false);
    std::string first;
    for (int workers : {1, 2}) {
        auto cfg = smoke_config(scratch("cmd" + std::to_string(workers)));
        cfg.workers = workers;
        cmd_simulate(cfg);
        cmd_train_selector(cfg);
        cmd_summarize(cfg, Variant::Full, true);
        const auto table = cmd_evaluate(cfg, "full");
        CHECK(table.find("full") != std::string::npos);
        CHECK(fs::exists(cfg.out_dir() / "report.json"));
        CHECK(fs::exists(cfg.out_dir() / "switch_cdf.csv"));
        CHECK(fs::exists(cfg.out_dir() / "contexts"));

        std::string all;
        for (const auto& f : list_files(cfg.summary_dir(), ".json")) all += read_text_file(f);
        all += read_text_file(cfg.out_dir() / "report.json");
        if (workers == 1) {
            first = all;
        } else {
            CHECK(all == first);
        }
    }
}

TEST_CASE("missing inputs are data errors") {
    LogLine::set_enabled(false);
    auto cfg = smoke_config(scratch("missing"));
    CHECK_THROWS_AS(cmd_summarize(cfg), DataError);
    CHECK_THROWS_AS(list_files(cfg.out_dir() / "nothing", ".json"), DataError);
}

TEST_CASE("shipped default config equals the built-in defaults") {
    const auto c = load_config(fs::path(CAPSUM_FIXTURE_DIR) / ".." / ".." / "configs" / "default.jsonc");
    CHECK(config_to_json(c) == config_to_json(RunConfig{}));
}
