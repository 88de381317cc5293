#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace capsum {

using FrameIndex = std::int64_t;
using LabelId = int;

inline constexpr int kDefaultNumClasses = 12;
inline constexpr int kDefaultFeatureDim = 384;

struct LesionLabel {
    LabelId id = 0;
    std::string name;
    bool is_normal = false;

    friend bool operator==(const LesionLabel&, const LesionLabel&) = default;
};

using Taxonomy = std::vector<LesionLabel>;

// The 12 capsule-endoscopy reporting categories, ulcer first, normal mucosa last.
Taxonomy default_taxonomy();

// Id of the single normal label; throws DataError when the taxonomy has none or several.
LabelId normal_label_id(const Taxonomy& taxonomy);

struct FrameRecord {
    FrameIndex frame_index = 0;
    double timestamp_sec = 0.0;
    std::vector<float> feature;
    std::optional<std::vector<double>> lesion_dist;
    std::optional<double> selector_score;

    friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

struct ExamStream {
    std::string patient_id;
    int feature_dim = kDefaultFeatureDim;
    int num_classes = kDefaultNumClasses;
    Taxonomy taxonomy = default_taxonomy();
    std::vector<FrameRecord> frames;

    // Offset of a frame_index inside `frames` (binary search; frame_index is strictly increasing).
    std::optional<std::size_t> position_of(FrameIndex frame_index) const;
    const FrameRecord& at_index(FrameIndex frame_index) const;

    double duration_sec() const {
        return frames.empty() ? 0.0 : frames.back().timestamp_sec - frames.front().timestamp_sec;
    }

    friend bool operator==(const ExamStream&, const ExamStream&) = default;
};

struct Finding {
    LesionLabel label;
    double keyframe_timestamp_sec = 0.0;

    friend bool operator==(const Finding&, const Finding&) = default;
};

struct AnnotationSet {
    std::string patient_id;
    std::vector<Finding> findings;

    friend bool operator==(const AnnotationSet&, const AnnotationSet&) = default;
};

struct SummaryEntry {
    double timestamp_sec = 0.0;
    FrameIndex frame_index = 0;
    LesionLabel label;
    double confidence = 0.0;
    int coarse_id = 0;
    int fine_id = 0;

    friend bool operator==(const SummaryEntry&, const SummaryEntry&) = default;
};

struct DiagnosticSummary {
    std::string patient_id;
    std::vector<SummaryEntry> entries;

    friend bool operator==(const DiagnosticSummary&, const DiagnosticSummary&) = default;
};

struct Violation {
    std::optional<FrameIndex> frame_index;  // empty for stream-level rules
    std::string rule;
    std::string message;

    friend bool operator==(const Violation&, const Violation&) = default;
};

// Checks every stream invariant. The report is sorted (frame, rule) so it does not
// depend on the order checks run in.
std::vector<Violation> validate_stream(const ExamStream& stream);

// Annotation timestamps must lie within the exam's time range; labels must be non-normal.
std::vector<Violation> validate_annotations(const AnnotationSet& annotations, const ExamStream& stream);

// Entries sorted by time, no normal label, confidences in (0, 1].
std::vector<Violation> validate_summary(const DiagnosticSummary& summary);

}  // namespace capsum
