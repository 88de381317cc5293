#pragma once

#include "capsum/converger.hpp"
#include "capsum/eval.hpp"
#include "capsum/io.hpp"
#include "capsum/selector.hpp"
#include "capsum/synth.hpp"
#include "capsum/tokenizer.hpp"
#include "capsum/weaver.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace capsum {

inline constexpr int kSchemaVersion = 1;

struct SelectorSection {
    double tau_s = 0.5;
    TrainOptions train;
    double negatives_per_positive = 1.0;
    double holdout_fraction = 0.2;
};

struct CorpusSection {
    int eval_exams = 10;
    int train_exams = 4;
    int train_num_frames = 20000;
};

struct BaselineSection {
    double tau = 0.5;
    double suppression_sec = 10.0;
};

// Empty entries resolve under out_dir: exams/, annotations/, truth/, selector_head.json,
// summaries/.
struct PathsSection {
    std::string out_dir = "out";
    std::string exam_dir;
    std::string annotation_dir;
    std::string head;
    std::string summary_dir;
};

struct RunConfig {
    int schema_version = kSchemaVersion;
    std::uint64_t seed = 0;
    int workers = 1;
    SelectorSection selector;
    TokenizerOptions tokenizer;
    WeaverParams weaver;
    ConvergerParams converger;
    EvalParams evaluation;
    BaselineSection baseline;
    double ablation_window_sec = 300.0;
    CorpusSection corpus;
    SimConfig simulator;
    PathsSection paths;

    void validate() const;

    std::filesystem::path out_dir() const { return paths.out_dir; }
    std::filesystem::path exam_dir() const;
    std::filesystem::path annotation_dir() const;
    std::filesystem::path truth_dir() const { return out_dir() / "truth"; }
    std::filesystem::path head_path() const;
    std::filesystem::path summary_dir() const;
};

// Missing keys keep their defaults; unknown keys, a missing or different
// schema_version and out-of-range values raise ConfigError.
RunConfig config_from_json(const json& j);
json config_to_json(const RunConfig& config);

// JSON with // and /* */ comments.
RunConfig load_config(const std::filesystem::path& path);

// Seeds of the evaluation and training exams; independent streams per corpus.
std::uint64_t exam_seed(std::uint64_t run_seed, int index);
std::uint64_t train_exam_seed(std::uint64_t run_seed, int index);

}  // namespace capsum
