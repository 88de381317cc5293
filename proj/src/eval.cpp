#include "capsum/eval.hpp"

#include "capsum/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

namespace capsum {

void EvalParams::validate() const {
    if (!(match_window_sec > 0.0)) throw ConfigError("match_window_sec must be positive");
    if (!(conflict_window_sec >= 0.0)) throw ConfigError("conflict_window_sec must be non-negative");
    for (double t : tau_grid_sec) {
        if (!(t > 0.0)) throw ConfigError("tau grid values must be positive");
    }
}

const char* to_string(MatchStatus status) {
    switch (status) {
        case MatchStatus::MatchedCorrect: return "matched_correct";
        case MatchStatus::MatchedWrongLabel: return "matched_wrong_label";
        case MatchStatus::ConflictInvalid: return "conflict_invalid";
        case MatchStatus::Redundant: return "redundant";
        case MatchStatus::Unmatched: return "unmatched";
    }
    return "unknown";
}

std::size_t MatchResult::count(MatchStatus status) const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [&](const EntryMatch& e) { return e.status == status; }));
}

std::vector<bool> apply_conflict_rule(const DiagnosticSummary& summary, double window_sec) {
    const auto& e = summary.entries;
    std::vector<bool> flagged(e.size(), false);
    // Entries are sorted by time, so only a forward window needs scanning.
    for (std::size_t i = 0; i < e.size(); ++i) {
        for (std::size_t j = i + 1; j < e.size() && e[j].timestamp_sec - e[i].timestamp_sec <= window_sec; ++j) {
            if (e[i].label.id != e[j].label.id) {
                flagged[i] = true;
                flagged[j] = true;
            }
        }
    }
    return flagged;
}

MatchResult greedy_match(const DiagnosticSummary& summary, const std::vector<bool>& conflict_flags,
                         const AnnotationSet& annotations, double window_sec) {
    const auto& entries = summary.entries;
    const auto& findings = annotations.findings;
    if (conflict_flags.size() != entries.size()) throw DataError("conflict flags do not match the summary");

    struct Pair {
        double dt;
        std::size_t entry;
        std::size_t finding;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (conflict_flags[i]) continue;
        for (std::size_t f = 0; f < findings.size(); ++f) {
            const double dt = std::abs(entries[i].timestamp_sec - findings[f].keyframe_timestamp_sec);
            if (dt <= window_sec) pairs.push_back({dt, i, f});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        return std::tie(a.dt, a.entry, a.finding) < std::tie(b.dt, b.entry, b.finding);
    });

    MatchResult out;
    out.entries.resize(entries.size());
    out.finding_entry.assign(findings.size(), std::nullopt);
    std::vector<bool> entry_used(entries.size(), false);
    std::vector<bool> in_window(entries.size(), false);
    for (const auto& p : pairs) {
        in_window[p.entry] = true;
        if (entry_used[p.entry] || out.finding_entry[p.finding]) continue;
        entry_used[p.entry] = true;
        out.finding_entry[p.finding] = p.entry;
        auto& m = out.entries[p.entry];
        m.status = entries[p.entry].label.id == findings[p.finding].label.id ? MatchStatus::MatchedCorrect
                                                                              : MatchStatus::MatchedWrongLabel;
        m.finding = p.finding;
        m.time_error_sec = p.dt;
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (conflict_flags[i]) {
            out.entries[i].status = MatchStatus::ConflictInvalid;
        } else if (!entry_used[i]) {
            // Every in-window finding of a leftover entry is already taken.
            out.entries[i].status = in_window[i] ? MatchStatus::Redundant : MatchStatus::Unmatched;
        }
    }
    return out;
}

MatchResult match_patient(const DiagnosticSummary& summary, const AnnotationSet& annotations,
                          const EvalParams& params) {
    const auto flags = apply_conflict_rule(summary, params.conflict_window_sec);
    return greedy_match(summary, flags, annotations, params.match_window_sec);
}

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

LesionMetrics lesion_metrics(std::span<const PatientEvaluation> results) {
    std::size_t findings = 0, correct = 0, hit = 0, correct_entries = 0, unique_predicted = 0;
    for (const auto& r : results) {
        const auto& m = r.match;
        findings += m.finding_entry.size();
        for (const auto& fe : m.finding_entry) {
            if (!fe) continue;
            ++hit;
            if (m.entries[*fe].status == MatchStatus::MatchedCorrect) ++correct;
        }
        correct_entries += m.count(MatchStatus::MatchedCorrect);
        unique_predicted += m.selected() - m.count(MatchStatus::Redundant);
    }
    return {ratio(correct, findings), ratio(hit, findings), ratio(correct_entries, unique_predicted)};
}

KeyframeMetrics keyframe_metrics(std::span<const PatientEvaluation> results) {
    double err_sum = 0.0;
    std::size_t err_n = 0, selected = 0, matched = 0;
    for (const auto& r : results) {
        for (const auto& e : r.match.entries) {
            if (e.status == MatchStatus::MatchedCorrect) {
                err_sum += *e.time_error_sec;
                ++err_n;
            }
        }
        selected += r.match.selected();
        matched += r.match.matched();
    }
    KeyframeMetrics out;
    if (err_n > 0) out.time_error_sec = err_sum / static_cast<double>(err_n);
    out.redundancy = ratio(selected - matched, selected);
    return out;
}

PatientMetrics patient_metrics(std::span<const PatientEvaluation> results) {
    std::size_t patients = 0, all_found = 0, any_found = 0;
    for (const auto& r : results) {
        const auto& m = r.match;
        if (m.finding_entry.empty()) continue;  // nothing reported for this patient
        ++patients;
        std::size_t correct = 0;
        for (const auto& fe : m.finding_entry) {
            if (fe && m.entries[*fe].status == MatchStatus::MatchedCorrect) ++correct;
        }
        if (correct == m.finding_entry.size()) ++all_found;
        if (correct > 0) ++any_found;
    }
    return {ratio(all_found, patients), ratio(any_found, patients)};
}

PairCounts inconsistency_counts(const DiagnosticSummary& summary, double tau_sec) {
    PairCounts c;
    const auto& e = summary.entries;
    for (std::size_t i = 1; i < e.size(); ++i) {
        if (e[i].timestamp_sec - e[i - 1].timestamp_sec <= tau_sec) {
            ++c.qualifying;
            if (e[i].label.id != e[i - 1].label.id) ++c.differing;
        }
    }
    return c;
}

std::optional<double> inconsistency_rate(const DiagnosticSummary& summary, double tau_sec) {
    const auto c = inconsistency_counts(summary, tau_sec);
    return ratio(c.differing, c.qualifying);
}

std::optional<double> inconsistency_rate(std::span<const DiagnosticSummary> summaries, double tau_sec) {
    PairCounts total;
    for (const auto& s : summaries) {
        const auto c = inconsistency_counts(s, tau_sec);
        total.qualifying += c.qualifying;
        total.differing += c.differing;
    }
    return ratio(total.differing, total.qualifying);
}

std::vector<double> switch_intervals(const DiagnosticSummary& summary) {
    std::vector<double> out;
    const auto& e = summary.entries;
    for (std::size_t i = 1; i < e.size(); ++i) {
        if (e[i].label.id != e[i - 1].label.id) out.push_back(e[i].timestamp_sec - e[i - 1].timestamp_sec);
    }
    return out;
}

SwitchIntervalCdf::SwitchIntervalCdf(std::span<const DiagnosticSummary> summaries) {
    for (const auto& s : summaries) {
        const auto iv = switch_intervals(s);
        intervals_.insert(intervals_.end(), iv.begin(), iv.end());
    }
    std::sort(intervals_.begin(), intervals_.end());
}

std::optional<double> SwitchIntervalCdf::operator()(double x) const {
    if (intervals_.empty()) return std::nullopt;
    const auto le = std::upper_bound(intervals_.begin(), intervals_.end(), x) - intervals_.begin();
    return static_cast<double>(le) / static_cast<double>(intervals_.size());
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DataError("wilcoxon_signed_rank needs paired samples of equal length");
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) diffs.push_back(d);
    }
    WilcoxonResult r;
    r.n_nonzero = diffs.size();
    const std::size_t n = diffs.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return std::abs(diffs[x]) < std::abs(diffs[y]);
    });
    std::vector<double> rank(n, 0.0);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg_rank;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    for (std::size_t i = 0; i < n; ++i) (diffs[i] > 0 ? r.w_plus : r.w_minus) += rank[i];

    if (n < 6) return r;
    const double nd = static_cast<double>(n);
    const double mean = nd * (nd + 1.0) / 4.0;
    const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
    if (!(var > 0.0)) return r;
    r.conclusive = true;
    const double dev = std::max(0.0, std::abs(r.w_plus - mean) - 0.5);
    r.z = dev / std::sqrt(var);
    r.p_value = std::min(1.0, std::erfc(r.z / std::sqrt(2.0)));
    return r;
}

std::vector<PatientEvaluation> evaluate_patients(std::span<const DiagnosticSummary> summaries,
                                                 std::span<const AnnotationSet> annotations,
                                                 const EvalParams& params) {
    params.validate();
    std::map<std::string, const AnnotationSet*> by_id;
    for (const auto& a : annotations) {
        if (!by_id.emplace(a.patient_id, &a).second) throw DataError("duplicate annotations for " + a.patient_id);
    }
    std::map<std::string, const DiagnosticSummary*> sums;
    for (const auto& s : summaries) {
        if (!sums.emplace(s.patient_id, &s).second) throw DataError("duplicate summary for " + s.patient_id);
        if (!by_id.count(s.patient_id)) throw DataError("no annotations for patient " + s.patient_id);
    }
    std::vector<PatientEvaluation> out;
    for (const auto& [id, ann] : by_id) {
        auto it = sums.find(id);
        if (it == sums.end()) throw DataError("no summary for patient " + id);
        out.push_back({id, *it->second, *ann, match_patient(*it->second, *ann, params)});
    }
    return out;
}

EvalReport build_report(std::span<const PatientEvaluation> results, const EvalParams& params) {
    EvalReport r;
    r.patients = results.size();
    std::vector<DiagnosticSummary> summaries;
    for (const auto& p : results) {
        r.findings += p.match.finding_entry.size();
        r.selected += p.match.selected();
        r.matched += p.match.matched();
        r.matched_correct += p.match.count(MatchStatus::MatchedCorrect);
        r.conflict_invalid += p.match.count(MatchStatus::ConflictInvalid);
        r.redundant += p.match.count(MatchStatus::Redundant);
        r.unmatched += p.match.count(MatchStatus::Unmatched);
        summaries.push_back(p.summary);
    }
    r.lesion = lesion_metrics(results);
    r.keyframe = keyframe_metrics(results);
    r.patient = patient_metrics(results);
    for (double tau : params.tau_grid_sec) {
        std::size_t qualifying = 0;
        for (const auto& s : summaries) qualifying += inconsistency_counts(s, tau).qualifying;
        r.inconsistency.push_back({tau, inconsistency_rate(summaries, tau), qualifying});
    }
    r.switch_intervals = SwitchIntervalCdf(summaries).intervals();
    return r;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string cell(const std::optional<double>& v, double scale) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", *v * scale);
    return buf;
}

}  // namespace

json report_to_json(const EvalReport& r) {
    json inc = json::array();
    for (const auto& i : r.inconsistency) {
        inc.push_back({{"tau_sec", i.tau_sec}, {"rate", opt(i.pooled_rate)}, {"qualifying_pairs", i.qualifying_pairs}});
    }
    return json{{"counts",
                 {{"patients", r.patients},
                  {"findings", r.findings},
                  {"selected", r.selected},
                  {"matched", r.matched},
                  {"matched_correct", r.matched_correct},
                  {"conflict_invalid", r.conflict_invalid},
                  {"redundant", r.redundant},
                  {"unmatched", r.unmatched}}},
                {"lesion",
                 {{"detection_rate", opt(r.lesion.detection_rate)},
                  {"sensitivity", opt(r.lesion.sensitivity)},
                  {"specificity", opt(r.lesion.specificity)}}},
                {"keyframe", {{"time_error_sec", opt(r.keyframe.time_error_sec)}, {"redundancy", opt(r.keyframe.redundancy)}}},
                {"patient",
                 {{"diagnostic_yield", opt(r.patient.diagnostic_yield)},
                  {"detection_rate", opt(r.patient.detection_rate)}}},
                {"inconsistency", std::move(inc)},
                {"switch_intervals_sec", r.switch_intervals},
                {"switch_count", r.switch_intervals.size()}};
}

std::string report_table(const EvalReport& r, const std::string& method) {
    const char* headers[] = {"Method",         "Detection Rate (%)", "Sensitivity (%)", "Specificity (%)",
                             "Time Error (s)", "Redundancy (%)",     "Diagnostic Yield (%)", "Patient Detection Rate (%)"};
    const std::string cells[] = {method,
                                 cell(r.lesion.detection_rate, 100.0),
                                 cell(r.lesion.sensitivity, 100.0),
                                 cell(r.lesion.specificity, 100.0),
                                 cell(r.keyframe.time_error_sec, 1.0),
                                 cell(r.keyframe.redundancy, 100.0),
                                 cell(r.patient.diagnostic_yield, 100.0),
                                 cell(r.patient.detection_rate, 100.0)};
    std::ostringstream out;
    for (std::size_t i = 0; i < 8; ++i) {
        const std::size_t w = std::max(std::string(headers[i]).size(), cells[i].size());
        out << (i ? " | " : "") << std::string(headers[i]) << std::string(w - std::string(headers[i]).size(), ' ');
    }
    out << '\n';
    for (std::size_t i = 0; i < 8; ++i) {
        const std::size_t w = std::max(std::string(headers[i]).size(), cells[i].size());
        out << (i ? " | " : "") << cells[i] << std::string(w - cells[i].size(), ' ');
    }
    out << '\n';
    return out.str();
}

}  // namespace capsum
