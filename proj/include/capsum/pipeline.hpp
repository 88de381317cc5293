#pragma once

#include "capsum/config.hpp"
#include "capsum/converger.hpp"
#include "capsum/eval.hpp"
#include "capsum/selector.hpp"
#include "capsum/synth.hpp"
#include "capsum/weaver.hpp"

#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace capsum {

enum class Variant { Full, NoWeaver, NoConverger, FrameByFrame };

const char* to_string(Variant variant);
Variant variant_from_string(std::string_view name);

// One logfmt line on stderr per instance, written when it goes out of scope. Error
// lines are written even when logging is disabled.
class LogLine {
public:
    explicit LogLine(std::string_view event, std::string_view level = "info");
    ~LogLine();
    LogLine(const LogLine&) = delete;
    LogLine& operator=(const LogLine&) = delete;

    LogLine& kv(std::string_view key, std::string_view value);
    LogLine& kv(std::string_view key, const char* value) { return kv(key, std::string_view(value)); }
    LogLine& kv(std::string_view key, const std::string& value) { return kv(key, std::string_view(value)); }
    LogLine& kv(std::string_view key, double value);
    LogLine& kv(std::string_view key, std::size_t value);
    LogLine& kv(std::string_view key, int value);

    static void set_enabled(bool enabled);

private:
    std::ostringstream line_;
    bool always_ = false;
};

// Runs fn(0..n-1) on at most `workers` threads. If any call throws, the exception of
// the lowest failing index is rethrown after all threads finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

struct SummarizeStats {
    std::size_t frames = 0;
    std::size_t candidates = 0;
    std::size_t coarse_contexts = 0;
    std::size_t fine_contexts = 0;
    std::size_t entries = 0;
    double screen_ms = 0.0;
    double tokenize_ms = 0.0;
    double weave_ms = 0.0;
    double converge_ms = 0.0;
    double total_ms = 0.0;
};

struct SummarizeResult {
    DiagnosticSummary summary;
    ContextHierarchy hierarchy;
    std::vector<ContextEvidence> evidences;  // empty for the top-frame and frame-level variants
    SummarizeStats stats;
};

// Screen, tokenize, weave, converge. FrameByFrame ignores the head.
SummarizeResult summarize(const ExamStream& stream, const SelectorHead& head, const RunConfig& config,
                          Variant variant = Variant::Full);

// Evaluation corpus (config.corpus.eval_exams exams of the simulator config) or the
// training corpus (balanced labels, train_num_frames each). Patient ids are
// "exam-NNN" and "train-NNN".
std::vector<SyntheticExam> simulate_corpus(const RunConfig& config, bool training = false);

struct SelectorTrainingResult {
    TrainedHead trained;
    BinaryMetrics holdout;
    std::size_t train_size = 0;
    std::size_t holdout_size = 0;
};

// Builds the labeled set from the exams, holds out a stratified fraction and trains.
SelectorTrainingResult train_selector(std::span<const SyntheticExam> exams, const RunConfig& config);

struct ConsistencyAtTau {
    double tau_sec = 0.0;
    InconsistencyAtTau a;
    InconsistencyAtTau b;
    std::size_t paired_patients = 0;
    WilcoxonResult wilcoxon;  // per-patient rates, a - b
};

struct ConsistencyAnalysis {
    std::string name_a;
    std::string name_b;
    std::vector<ConsistencyAtTau> per_tau;
    std::vector<double> intervals_a;  // ascending
    std::vector<double> intervals_b;
};

// Patients are paired by id; at each tau only patients where both methods have a
// qualifying pair enter the signed-rank test.
ConsistencyAnalysis compare_consistency(std::span<const DiagnosticSummary> a, std::span<const DiagnosticSummary> b,
                                        const EvalParams& params, std::string name_a = "a", std::string name_b = "b");

json consistency_to_json(const ConsistencyAnalysis& analysis);
std::string inconsistency_csv(std::span<const InconsistencyAtTau> rows, const std::string& method);
std::string switch_cdf_csv(std::span<const double> ascending_intervals, const std::string& method);

// Files in `dir` with the given extension, sorted by name. DataError when the
// directory is missing or holds none.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir, std::string_view extension);

std::vector<DiagnosticSummary> read_summaries(const std::filesystem::path& dir);
std::vector<AnnotationSet> read_annotations(const std::filesystem::path& dir);

void cmd_simulate(const RunConfig& config);
void cmd_train_selector(const RunConfig& config);
// Writes one summary per exam into config.summary_dir(); with dump_contexts also the
// hierarchy and per-context evidence under out_dir/contexts.
void cmd_summarize(const RunConfig& config, Variant variant = Variant::Full, bool dump_contexts = false);
// Writes report.json, report.txt, inconsistency_vs_tau.csv and switch_cdf.csv into out_dir
// and returns the table.
std::string cmd_evaluate(const RunConfig& config, const std::string& method = "full");
// Writes consistency.json, consistency_vs_tau.csv and consistency_switch_cdf.csv into out_dir.
ConsistencyAnalysis cmd_consistency(const RunConfig& config, const std::filesystem::path& dir_a,
                                    const std::filesystem::path& dir_b, const std::string& name_a,
                                    const std::string& name_b);
// Summaries of an ablated pipeline into config.summary_dir(), defaulting to
// out_dir/summaries_<variant>.
void cmd_ablate(const RunConfig& config, Variant variant);

}  // namespace capsum
