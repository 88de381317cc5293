#pragma once

#include "capsum/io.hpp"
#include "capsum/selector.hpp"
#include "capsum/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace capsum {

struct IntRange {
    int min = 0;
    int max = 0;
};

// Synthetic examination model. Frames look like their label's prototype plus a slow
// drift and isotropic noise; lesion events are short runs seen from a few alternating
// viewpoints; "mimic" bursts are normal frames that look like lesions to the screener
// but not to the diagnoser; blurred event frames carry a distribution peaked on a
// fixed wrong class.
struct SimConfig {
    int num_frames = 100000;
    double frames_per_sec = 3.0;
    int num_events = 6;
    IntRange event_duration_frames{30, 120};
    double min_event_gap_sec = 600.0;
    int feature_dim = kDefaultFeatureDim;
    std::uint64_t prototype_seed = 20240601;
    double sigma_vis = 0.03;
    double drift_norm = 0.5;  // stationary RMS norm of the drift vector
    double drift_time_constant_sec = 1800.0;
    double drift_step_sec = 10.0;
    double confusion_noise = 0.2;  // mass spread uniformly off the diagonal
    std::optional<std::vector<std::vector<double>>> confusion;  // overrides confusion_noise
    double dist_concentration = 20.0;  // Dirichlet concentration; <= 0 means no perturbation
    double blur_fraction = 0.15;
    double blur_peak = 0.85;
    IntRange views_per_event{1, 2};
    double multi_view_prob = 0.25;  // chance an event gets more than views_per_event.min views
    double view_offset_norm = 1.0;
    double view_run_frames = 5.0;  // mean run length before the viewpoint switches
    double mimic_bursts_per_hour = 10.0;
    IntRange mimic_burst_frames{40, 150};
    double max_event_fraction = 0.05;
    bool balanced_labels = false;  // cycle through lesion classes instead of sampling
    int label_offset = 0;           // first class of the cycle, counted in lesion classes
    std::uint64_t seed = 0;
    std::string patient_id;  // default "synth-<seed>"

    void validate() const;
    // Row-stochastic K x K matrix actually used for the diagnoser.
    std::vector<std::vector<double>> confusion_matrix() const;
};

enum class FrameKind : std::uint8_t { Normal = 0, Event = 1, Blurred = 2, Mimic = 3 };

struct PlantedEvent {
    LabelId label = 0;
    LabelId blur_label = 0;
    FrameIndex first_frame = 0;
    FrameIndex last_frame = 0;
    double keyframe_timestamp_sec = 0.0;
    int views = 1;
};

struct GroundTruth {
    std::vector<LabelId> frame_labels;  // aligned with stream.frames
    std::vector<FrameKind> frame_kinds;
    std::vector<PlantedEvent> events;  // sorted by time

    LabelId label_of(const ExamStream& stream, FrameIndex idx) const;
    std::size_t event_frame_count() const;
};

struct SyntheticExam {
    ExamStream stream;
    AnnotationSet annotations;
    GroundTruth truth;
};

SyntheticExam generate_exam(const SimConfig& config);

// Per-label unit prototypes shared by every exam generated with the same
// prototype_seed and feature_dim.
std::vector<std::vector<double>> class_prototypes(std::uint64_t prototype_seed, int feature_dim, int num_classes);

// Frame-level comparator: one entry per frame whose best non-normal probability is
// >= tau, thinned greedily to local maxima at least `suppression_sec` apart.
DiagnosticSummary baseline_frame_by_frame(const ExamStream& stream, double tau, double suppression_sec = 10.0);

// Every abnormal frame as a positive, plus `negatives_per_positive` randomly drawn
// normal frames each. Mimic frames are left out.
std::vector<LabeledFeature> selector_dataset(std::span<const SyntheticExam> exams, double negatives_per_positive,
                                             std::uint64_t seed);

json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const json& j, std::string_view source = "<json>");

json sim_config_to_json(const SimConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
SimConfig sim_config_from_json(const json& j, SimConfig base = {});

}  // namespace capsum
