#pragma once

#include "capsum/io.hpp"
#include "capsum/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace capsum {

struct EvalParams {
    double match_window_sec = 300.0;
    double conflict_window_sec = 20.0;
    std::vector<double> tau_grid_sec{30.0, 60.0, 120.0, 300.0, 600.0};

    void validate() const;
};

enum class MatchStatus { MatchedCorrect, MatchedWrongLabel, ConflictInvalid, Redundant, Unmatched };

const char* to_string(MatchStatus status);

struct EntryMatch {
    MatchStatus status = MatchStatus::Unmatched;
    std::optional<std::size_t> finding;  // set for matched entries
    std::optional<double> time_error_sec;

    friend bool operator==(const EntryMatch&, const EntryMatch&) = default;
};

struct MatchResult {
    std::vector<EntryMatch> entries;                        // one per summary entry
    std::vector<std::optional<std::size_t>> finding_entry;  // matched entry per finding

    std::size_t selected() const { return entries.size(); }
    std::size_t count(MatchStatus status) const;
    std::size_t matched() const { return count(MatchStatus::MatchedCorrect) + count(MatchStatus::MatchedWrongLabel); }

    friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

// Flags every entry that has another entry within `window_sec` carrying a different
// label. Flagged entries stay selected but cannot match.
std::vector<bool> apply_conflict_rule(const DiagnosticSummary& summary, double window_sec = 20.0);

// Greedy one-to-one temporal matching. All (eligible entry, finding) pairs within the
// window are taken in ascending |dt| (then entry index, then finding index) and
// accepted when both sides are still free. Leftover eligible entries with a finding in
// the window are redundant, the rest unmatched.
MatchResult greedy_match(const DiagnosticSummary& summary, const std::vector<bool>& conflict_flags,
                         const AnnotationSet& annotations, double window_sec = 300.0);

MatchResult match_patient(const DiagnosticSummary& summary, const AnnotationSet& annotations,
                          const EvalParams& params = {});

struct PatientEvaluation {
    std::string patient_id;
    DiagnosticSummary summary;
    AnnotationSet annotations;
    MatchResult match;
};

struct LesionMetrics {
    std::optional<double> detection_rate;
    std::optional<double> sensitivity;
    std::optional<double> specificity;
};

struct KeyframeMetrics {
    std::optional<double> time_error_sec;
    std::optional<double> redundancy;
};

struct PatientMetrics {
    std::optional<double> diagnostic_yield;
    std::optional<double> detection_rate;
};

LesionMetrics lesion_metrics(std::span<const PatientEvaluation> results);
KeyframeMetrics keyframe_metrics(std::span<const PatientEvaluation> results);
PatientMetrics patient_metrics(std::span<const PatientEvaluation> results);

struct PairCounts {
    std::size_t qualifying = 0;  // consecutive pairs with dt <= tau
    std::size_t differing = 0;   // of those, pairs with different labels
};

PairCounts inconsistency_counts(const DiagnosticSummary& summary, double tau_sec);
// Fraction of qualifying consecutive pairs with different labels; empty when no pair qualifies.
std::optional<double> inconsistency_rate(const DiagnosticSummary& summary, double tau_sec);
// Pooled over all summaries.
std::optional<double> inconsistency_rate(std::span<const DiagnosticSummary> summaries, double tau_sec);

// Time gaps of consecutive entry pairs whose labels differ.
std::vector<double> switch_intervals(const DiagnosticSummary& summary);

class SwitchIntervalCdf {
public:
    explicit SwitchIntervalCdf(std::span<const DiagnosticSummary> summaries);

    const std::vector<double>& intervals() const { return intervals_; }  // ascending
    std::size_t switch_count() const { return intervals_.size(); }
    std::optional<double> operator()(double x) const;

private:
    std::vector<double> intervals_;
};

struct WilcoxonResult {
    bool conclusive = false;
    std::size_t n_nonzero = 0;
    double w_plus = 0.0;  // sum of ranks of positive differences a - b
    double w_minus = 0.0;
    double z = 0.0;
    double p_value = 1.0;  // two-sided, normal approximation with continuity correction
};

// Paired signed-rank test on a - b. Zero differences are dropped, tied magnitudes get
// average ranks. Fewer than 6 non-zero differences is reported as inconclusive.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

struct InconsistencyAtTau {
    double tau_sec = 0.0;
    std::optional<double> pooled_rate;
    std::size_t qualifying_pairs = 0;
};

struct EvalReport {
    std::size_t patients = 0;
    std::size_t findings = 0;
    std::size_t selected = 0;
    std::size_t matched = 0;
    std::size_t matched_correct = 0;
    std::size_t conflict_invalid = 0;
    std::size_t redundant = 0;
    std::size_t unmatched = 0;
    LesionMetrics lesion;
    KeyframeMetrics keyframe;
    PatientMetrics patient;
    std::vector<InconsistencyAtTau> inconsistency;
    std::vector<double> switch_intervals;
};

std::vector<PatientEvaluation> evaluate_patients(std::span<const DiagnosticSummary> summaries,
                                                 std::span<const AnnotationSet> annotations,
                                                 const EvalParams& params = {});

EvalReport build_report(std::span<const PatientEvaluation> results, const EvalParams& params = {});

json report_to_json(const EvalReport& report);
// Plain-text table in the usual column order: lesion-level rates, keyframe time error
// and redundancy, then patient-level yield and detection rate.
std::string report_table(const EvalReport& report, const std::string& method = "method");

}  // namespace capsum
