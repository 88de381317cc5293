#include "doctest.h"

#include "capsum/error.hpp"
#include "capsum/eval.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <random>

using namespace capsum;
using capsum::test::entry;
using capsum::test::lbl;
using capsum::test::summary_of;

namespace {

AnnotationSet findings_of(std::vector<std::pair<double, LabelId>> fs, std::string id = "p") {
    AnnotationSet a;
    a.patient_id = std::move(id);
    for (auto [t, l] : fs) a.findings.push_back({lbl(l), t});
    return a;
}

DiagnosticSummary random_summary(std::mt19937_64& rng, int n, int labels, double span) {
    std::uniform_int_distribution<int> t(0, static_cast<int>(span));
    std::vector<SummaryEntry> es;
    for (int i = 0; i < n; ++i) es.push_back(entry(t(rng), static_cast<LabelId>(rng() % static_cast<unsigned>(labels))));
    std::sort(es.begin(), es.end(), [](const SummaryEntry& a, const SummaryEntry& b) { return a.timestamp_sec < b.timestamp_sec; });
    return summary_of(es);
}

AnnotationSet random_findings(std::mt19937_64& rng, int n, int labels, double span) {
    std::uniform_int_distribution<int> t(0, static_cast<int>(span));
    AnnotationSet a;
    a.patient_id = "p";
    for (int i = 0; i < n; ++i) a.findings.push_back({lbl(static_cast<LabelId>(rng() % static_cast<unsigned>(labels))), static_cast<double>(t(rng))});
    return a;
}

std::vector<PatientEvaluation> load_fixture(json& expected) {
    const auto j = read_json_file(std::filesystem::path(CAPSUM_FIXTURE_DIR) / "eval_fixture.json");
    expected = j.at("expected");
    std::vector<DiagnosticSummary> s;
    std::vector<AnnotationSet> a;
    for (const auto& p : j.at("patients")) {
        s.push_back(summary_from_json(p.at("summary")));
        a.push_back(annotations_from_json(p.at("annotations")));
    }
    return evaluate_patients(s, a);
}

double frac(const json& e, const char* key) { return e.at(key)[0].get<double>() / e.at(key)[1].get<double>(); }

}  // namespace

TEST_CASE("conflict rule examples") {
    CHECK(apply_conflict_rule(summary_of({entry(0, 0), entry(15, 1)})) == std::vector<bool>{true, true});
    CHECK(apply_conflict_rule(summary_of({entry(0, 0), entry(25, 1)})) == std::vector<bool>{false, false});
    CHECK(apply_conflict_rule(summary_of({entry(0, 0), entry(20, 1)})) == std::vector<bool>{true, true});
    CHECK(apply_conflict_rule(summary_of({entry(0, 0), entry(10, 0), entry(40, 1)})) ==
          std::vector<bool>{false, false, false});
}

TEST_CASE("conflict rule on nearby entries") {
    CHECK(apply_conflict_rule(summary_of({entry(100, 0), entry(110, 8)})) == std::vector<bool>{true, true});
    CHECK(apply_conflict_rule(summary_of({entry(100, 0), entry(110, 0)})) == std::vector<bool>{false, false});
    CHECK(apply_conflict_rule(summary_of({entry(0, 0), entry(15, 1), entry(30, 0)})) ==
          std::vector<bool>{true, true, true});
}

TEST_CASE("conflict rule equals the all-pairs check") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 500; ++trial) {
        const auto s = random_summary(rng, static_cast<int>(rng() % 12), 3, 200);
        const auto got = apply_conflict_rule(s, 20.0);
        for (std::size_t i = 0; i < s.entries.size(); ++i) {
            bool want = false;
            for (std::size_t j = 0; j < s.entries.size(); ++j)
                if (i != j && std::abs(s.entries[i].timestamp_sec - s.entries[j].timestamp_sec) <= 20.0 &&
                    s.entries[i].label.id != s.entries[j].label.id)
                    want = true;
            CHECK(got[i] == want);
        }
    }
}

TEST_CASE("exact hit and out-of-window entry") {
    const auto a = findings_of({{1000, 0}});
    auto m = match_patient(summary_of({entry(1000, 0)}), a);
    CHECK(m.entries[0].status == MatchStatus::MatchedCorrect);
    CHECK(*m.entries[0].time_error_sec == 0.0);
    m = match_patient(summary_of({entry(1301, 0)}), a);
    CHECK(m.entries[0].status == MatchStatus::Unmatched);
    CHECK_FALSE(m.finding_entry[0]);
    m = match_patient(summary_of({entry(1300, 0)}), a);
    CHECK(m.entries[0].status == MatchStatus::MatchedCorrect);
}

TEST_CASE("greedy matching takes the closest pair first") {
    // Entry 0 is closest to finding 1, so finding 0 goes to entry 1.
    const auto a = findings_of({{100, 0}, {200, 1}});
    const auto m = match_patient(summary_of({entry(190, 1), entry(260, 0)}), a);
    CHECK(*m.finding_entry[1] == 0);
    CHECK(*m.finding_entry[0] == 1);
    CHECK(m.entries[1].status == MatchStatus::MatchedCorrect);
    CHECK(*m.entries[1].time_error_sec == 160.0);
}

TEST_CASE("greedy matching equals the step-by-step oracle") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
        const double span = 200 + static_cast<double>(rng() % 2000);
        const auto s = random_summary(rng, static_cast<int>(rng() % 10), 4, span);
        const auto a = random_findings(rng, static_cast<int>(rng() % 6), 4, span);
        const EvalParams p;
        CHECK(match_patient(s, a, p) == oracle::greedy_match(s, a, p.match_window_sec, p.conflict_window_sec));
    }
}

TEST_CASE("greedy_match rejects mismatched flags") {
    CHECK_THROWS_AS(greedy_match(summary_of({entry(0, 0)}), {}, findings_of({})), DataError);
}

TEST_CASE("three-patient fixture") {
    json e;
    const auto results = load_fixture(e);
    const auto lesion = lesion_metrics(results);
    const auto key = keyframe_metrics(results);
    const auto pat = patient_metrics(results);
    CHECK(*lesion.detection_rate == doctest::Approx(frac(e, "detection_rate")));
    CHECK(*lesion.sensitivity == doctest::Approx(frac(e, "sensitivity")));
    CHECK(*lesion.specificity == doctest::Approx(frac(e, "specificity")));
    CHECK(*key.time_error_sec == doctest::Approx(frac(e, "time_error_sec")));
    CHECK(*key.redundancy == doctest::Approx(frac(e, "redundancy")));
    CHECK(*pat.diagnostic_yield == doctest::Approx(frac(e, "diagnostic_yield")));
    CHECK(*pat.detection_rate == doctest::Approx(frac(e, "patient_detection_rate")));
    std::vector<DiagnosticSummary> sums;
    for (const auto& r : results) sums.push_back(r.summary);
    CHECK(*inconsistency_rate(sums, 60.0) == doctest::Approx(frac(e, "inconsistency_60")));

    const auto report = build_report(results);
    CHECK(report.findings == 5);
    CHECK(report.selected == 10);
    CHECK(report.conflict_invalid == 2);
    CHECK(report.redundant == 2);
    const auto j = report_to_json(report);
    CHECK(j["counts"]["matched"] == 4);
    CHECK(report_table(report, "x").find("Diagnostic Yield") != std::string::npos);
}

TEST_CASE("lesion metric definitions") {
    SUBCASE("perfect summary") {
        const std::vector<DiagnosticSummary> s{summary_of({entry(100, 0), entry(2000, 3)})};
        const std::vector<AnnotationSet> a{findings_of({{100, 0}, {2000, 3}})};
        const auto l = lesion_metrics(evaluate_patients(s, a));
        CHECK(*l.detection_rate == 1.0);
        CHECK(*l.sensitivity == 1.0);
        CHECK(*l.specificity == 1.0);
    }
    SUBCASE("a wrong label counts for sensitivity only") {
        const std::vector<DiagnosticSummary> s{summary_of({entry(100, 1)})};
        const std::vector<AnnotationSet> a{findings_of({{100, 0}})};
        const auto l = lesion_metrics(evaluate_patients(s, a));
        CHECK(*l.detection_rate == 0.0);
        CHECK(*l.sensitivity == 1.0);
    }
    SUBCASE("single correct match 42 s away") {
        const std::vector<DiagnosticSummary> s{summary_of({entry(1042, 0)})};
        const std::vector<AnnotationSet> a{findings_of({{1000, 0}})};
        const auto k = keyframe_metrics(evaluate_patients(s, a));
        CHECK(*k.time_error_sec == 42.0);
        CHECK(*k.redundancy == 0.0);
    }
    SUBCASE("five selected, two matched") {
        const std::vector<DiagnosticSummary> s{
            summary_of({entry(0, 0), entry(1000, 0), entry(5000, 0), entry(6000, 0), entry(7000, 0)})};
        const std::vector<AnnotationSet> a{findings_of({{0, 0}, {1000, 0}})};
        CHECK(*keyframe_metrics(evaluate_patients(s, a)).redundancy == doctest::Approx(0.6));
    }
}

TEST_CASE("patient metrics equal a brute-force recount") {
    std::mt19937_64 rng(404);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<DiagnosticSummary> s;
        std::vector<AnnotationSet> a;
        for (int p = 0; p < 40; ++p) {
            auto sm = random_summary(rng, static_cast<int>(rng() % 6), 3, 3000);
            auto an = random_findings(rng, static_cast<int>(rng() % 4), 3, 3000);
            sm.patient_id = an.patient_id = "p" + std::to_string(100 + p);
            s.push_back(sm);
            a.push_back(an);
        }
        const auto results = evaluate_patients(s, a);
        std::size_t with = 0, all = 0, any = 0;
        for (const auto& r : results) {
            if (r.annotations.findings.empty()) continue;
            ++with;
            std::size_t ok = 0;
            for (std::size_t f = 0; f < r.annotations.findings.size(); ++f) {
                for (std::size_t e = 0; e < r.match.entries.size(); ++e) {
                    if (r.match.entries[e].finding == f && r.match.entries[e].status == MatchStatus::MatchedCorrect) ++ok;
                }
            }
            all += ok == r.annotations.findings.size();
            any += ok > 0;
        }
        const auto m = patient_metrics(results);
        if (with == 0) {
            CHECK_FALSE(m.diagnostic_yield);
            continue;
        }
        CHECK(*m.diagnostic_yield == static_cast<double>(all) / static_cast<double>(with));
        CHECK(*m.detection_rate == static_cast<double>(any) / static_cast<double>(with));
    }
}

TEST_CASE("inconsistency equals an exhaustive pair scan") {
    std::mt19937_64 rng(55);
    for (int trial = 0; trial < 200; ++trial) {
        const auto s = random_summary(rng, static_cast<int>(rng() % 20), 3, 1000);
        const double tau = 5.0 + static_cast<double>(rng() % 200);
        std::size_t q = 0, d = 0;
        for (std::size_t i = 0; i + 1 < s.entries.size(); ++i) {
            if (s.entries[i + 1].timestamp_sec - s.entries[i].timestamp_sec > tau) continue;
            ++q;
            d += s.entries[i + 1].label.id != s.entries[i].label.id;
        }
        const auto r = inconsistency_rate(s, tau);
        if (q == 0) {
            CHECK_FALSE(r);
        } else {
            CHECK(*r == static_cast<double>(d) / static_cast<double>(q));
        }
    }
}

TEST_CASE("metric closed forms") {
    SUBCASE("redundancy 0.6 from 10 entries and 4 matches") {
        std::vector<SummaryEntry> es;
        for (int i = 0; i < 10; ++i) es.push_back(entry(1000.0 * i, 0));
        const auto a = findings_of({{0, 0}, {1000, 0}, {2000, 0}, {3000, 0}});
        const std::vector<DiagnosticSummary> s{summary_of(es)};
        const std::vector<AnnotationSet> as{a};
        CHECK(*keyframe_metrics(evaluate_patients(s, as)).redundancy == doctest::Approx(0.6));
    }
    SUBCASE("time error averages correctly labeled matches") {
        const std::vector<DiagnosticSummary> s{summary_of({entry(30, 0), entry(1054, 1), entry(5000, 2)})};
        const std::vector<AnnotationSet> as{findings_of({{0, 0}, {1000, 1}, {5100, 3}})};
        CHECK(*keyframe_metrics(evaluate_patients(s, as)).time_error_sec == doctest::Approx(42.0));
    }
    SUBCASE("patient metrics") {
        const std::vector<DiagnosticSummary> s{summary_of({entry(0, 0), entry(1000, 1)}, "a"),
                                               summary_of({entry(0, 0), entry(1000, 2)}, "b"),
                                               summary_of({}, "c"), summary_of({entry(5, 0)}, "d")};
        const std::vector<AnnotationSet> as{findings_of({{0, 0}, {1000, 1}}, "a"), findings_of({{0, 0}, {1000, 1}}, "b"),
                                            findings_of({{0, 0}}, "c"), findings_of({}, "d")};
        const auto m = patient_metrics(evaluate_patients(s, as));
        CHECK(*m.diagnostic_yield == doctest::Approx(1.0 / 3.0));
        CHECK(*m.detection_rate == doctest::Approx(2.0 / 3.0));
    }
    SUBCASE("no findings anywhere") {
        const std::vector<DiagnosticSummary> s{summary_of({})};
        const std::vector<AnnotationSet> as{findings_of({})};
        const auto r = evaluate_patients(s, as);
        CHECK_FALSE(lesion_metrics(r).sensitivity);
        CHECK_FALSE(keyframe_metrics(r).redundancy);
        CHECK_FALSE(patient_metrics(r).diagnostic_yield);
    }
}

TEST_CASE("evaluate_patients pairs by id") {
    const std::vector<DiagnosticSummary> s{summary_of({}, "a")};
    const std::vector<AnnotationSet> missing{findings_of({}, "b")};
    CHECK_THROWS_AS(evaluate_patients(s, missing), DataError);
    const std::vector<AnnotationSet> dup{findings_of({}, "a"), findings_of({}, "a")};
    CHECK_THROWS_AS(evaluate_patients(s, dup), DataError);
}

TEST_CASE("inconsistency closed forms") {
    const auto s = summary_of({entry(10, 0), entry(30, 1), entry(50, 0)});
    CHECK(*inconsistency_rate(s, 30.0) == 1.0);
    CHECK_FALSE(inconsistency_rate(s, 10.0));
    CHECK(*inconsistency_rate(summary_of({entry(0, 0), entry(5, 0), entry(7, 1)}), 30.0) == 0.5);
    CHECK_FALSE(inconsistency_rate(summary_of({}), 30.0));
    CHECK(*inconsistency_rate(summary_of({entry(0, 2), entry(10, 2), entry(20, 2)}), 30.0) == 0.0);
}

TEST_CASE("switch interval distribution") {
    const std::vector<DiagnosticSummary> s{summary_of({entry(0, 0), entry(30, 1), entry(100, 1), entry(160, 0)})};
    const SwitchIntervalCdf cdf(s);
    CHECK(cdf.intervals() == std::vector<double>{30.0, 60.0});
    CHECK(*cdf(29.0) == 0.0);
    CHECK(*cdf(30.0) == 0.5);
    CHECK(*cdf(60.0) == 1.0);
    const std::vector<DiagnosticSummary> none{summary_of({entry(0, 0), entry(5, 0)})};
    CHECK_FALSE(SwitchIntervalCdf(none)(100.0));
}

TEST_CASE("switch CDF is a step function") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<DiagnosticSummary> s;
        for (int k = 0; k < 3; ++k) s.push_back(random_summary(rng, static_cast<int>(rng() % 15), 3, 1000));
        const SwitchIntervalCdf cdf(s);
        std::size_t total = 0;
        for (const auto& x : s) total += switch_intervals(x).size();
        CHECK(cdf.switch_count() == total);
        if (total == 0) continue;
        double prev = 0.0;
        for (double x = 0.0; x <= 1000.0; x += 25.0) {
            CHECK(*cdf(x) >= prev);
            prev = *cdf(x);
        }
        CHECK(*cdf(1000.0) == 1.0);
    }
}

TEST_CASE("Wilcoxon signed-rank") {
    SUBCASE("identical samples are inconclusive") {
        const std::vector<double> a{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
        const auto r = wilcoxon_signed_rank(a, a);
        CHECK_FALSE(r.conclusive);
        CHECK(r.n_nonzero == 0);
    }
    SUBCASE("ten consistent improvements") {
        std::vector<double> a, b;
        for (int i = 0; i < 10; ++i) {
            a.push_back(0.5 + 0.01 * i);
            b.push_back(0.1);
        }
        const auto r = wilcoxon_signed_rank(a, b);
        CHECK(r.conclusive);
        CHECK(r.w_plus == 55.0);
        CHECK(r.p_value < 0.01);
        CHECK(oracle::wilcoxon_exact_p(10, r.w_plus) == doctest::Approx(2.0 / 1024.0));
    }
    SUBCASE("five differences are too few") {
        const std::vector<double> a{1, 2, 3, 4, 5}, b{0, 0, 0, 0, 0};
        CHECK_FALSE(wilcoxon_signed_rank(a, b).conclusive);
    }
    SUBCASE("length mismatch") {
        const std::vector<double> a{1, 2}, b{1};
        CHECK_THROWS_AS(wilcoxon_signed_rank(a, b), DataError);
    }
}

TEST_CASE("Wilcoxon rank sums and normal approximation against exact enumeration") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> a(8), b(8, 0.0);
        for (auto& x : a) x = n01(rng) + 0.3;
        const auto r = wilcoxon_signed_rank(a, b);
        CHECK(r.w_plus + r.w_minus == 36.0);
        std::vector<double> mags;
        for (double x : a) mags.push_back(std::abs(x));
        std::sort(mags.begin(), mags.end());
        double wp = 0.0;
        for (double x : a)
            if (x > 0) wp += static_cast<double>(std::lower_bound(mags.begin(), mags.end(), std::abs(x)) - mags.begin() + 1);
        CHECK(r.w_plus == wp);
        CHECK(std::abs(r.p_value - oracle::wilcoxon_exact_p(8, r.w_plus)) < 0.03);
    }
}

TEST_CASE("evaluation invariants on random cohorts") {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<DiagnosticSummary> s;
        std::vector<AnnotationSet> a;
        const int patients = 1 + static_cast<int>(rng() % 5);
        for (int p = 0; p < patients; ++p) {
            auto sm = random_summary(rng, static_cast<int>(rng() % 10), 4, 3000);
            auto an = random_findings(rng, static_cast<int>(rng() % 5), 4, 3000);
            sm.patient_id = an.patient_id = "p" + std::to_string(p);
            s.push_back(sm);
            a.push_back(an);
        }
        const auto results = evaluate_patients(s, a);
        const auto l = lesion_metrics(results);
        if (l.detection_rate) CHECK(*l.detection_rate <= *l.sensitivity);
        for (const auto& r : results) {
            std::size_t matched_findings = 0;
            for (const auto& f : r.match.finding_entry) matched_findings += f.has_value();
            CHECK(matched_findings == r.match.matched());
        }

        auto s2 = s;
        auto a2 = a;
        std::shuffle(s2.begin(), s2.end(), rng);
        std::shuffle(a2.begin(), a2.end(), rng);
        CHECK(report_to_json(build_report(evaluate_patients(s2, a2))) == report_to_json(build_report(results)));

        std::size_t prev = 0;
        for (double tau : {10.0, 30.0, 60.0, 120.0, 300.0, 600.0}) {
            std::size_t q = 0;
            for (const auto& x : s) q += inconsistency_counts(x, tau).qualifying;
            CHECK(q >= prev);
            prev = q;
        }
    }
}
