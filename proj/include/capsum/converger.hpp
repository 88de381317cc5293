#pragma once

#include "capsum/io.hpp"
#include "capsum/types.hpp"
#include "capsum/weaver.hpp"

#include <span>
#include <vector>

namespace capsum {

enum class MedoidMetric { Euclidean, Cosine };

struct ConvergerParams {
    double tau_agree = 0.4;
    double tau_min = 0.5;
    MedoidMetric medoid_metric = MedoidMetric::Euclidean;

    void validate() const;
};

// Per fine context: raw evidence, the provisional label, the frames that agree with
// it, and the refined decision.
struct ContextEvidence {
    int coarse_id = 0;
    int fine_id = 0;
    std::vector<FrameIndex> members;
    std::vector<double> evidence;  // sum of member lesion distributions
    LabelId provisional_label = 0;
    std::vector<FrameIndex> retained;
    std::vector<double> refined_evidence;
    LabelId label = 0;
    double confidence = 0.0;  // max of refined_evidence / ||refined_evidence||_1
};

struct FusedEvidence {
    std::vector<double> evidence;
    LabelId provisional_label = 0;
};

struct RefinedPrediction {
    std::vector<double> evidence;
    LabelId label = 0;
    double confidence = 0.0;
};

// Index of the largest entry; ties go to the lowest index.
LabelId argmax_lowest(std::span<const double> values);

FusedEvidence fuse_evidence(std::span<const FrameIndex> members, const ExamStream& stream);

// Members whose distribution gives the provisional label at least tau_agree; the
// whole context when none does.
std::vector<FrameIndex> refine_context(std::span<const FrameIndex> members, const ExamStream& stream,
                                       LabelId provisional_label, double tau_agree);

RefinedPrediction refined_prediction(std::span<const FrameIndex> retained, const ExamStream& stream);

// Drops contexts labeled normal or with confidence below tau_min; order preserved.
std::vector<ContextEvidence> prune_contexts(std::vector<ContextEvidence> evidences, double tau_min,
                                            LabelId normal_label);

// Member minimizing the summed distance to all other members on raw visual features.
// Ties go to the earliest timestamp, then the lowest frame index.
FrameIndex select_medoid(std::span<const FrameIndex> members, const ExamStream& stream,
                         MedoidMetric metric = MedoidMetric::Euclidean);

// Fusion and refinement for one fine context (no pruning).
ContextEvidence evaluate_context(const FineContext& context, const ExamStream& stream, double tau_agree);

DiagnosticSummary assemble_summary(std::span<const ContextEvidence> survivors, const ExamStream& stream,
                                   MedoidMetric metric = MedoidMetric::Euclidean);

struct ConvergeResult {
    DiagnosticSummary summary;
    std::vector<ContextEvidence> evidences;  // every context, before pruning
};

ConvergeResult converge(const ContextHierarchy& hierarchy, const ExamStream& stream, const ConvergerParams& params);

// Ablation: label each fine context by its single most confident frame and use that
// frame as the keyframe. Normal and low-confidence contexts are still pruned.
DiagnosticSummary converge_top_frame(const ContextHierarchy& hierarchy, const ExamStream& stream, double tau_min);

json evidences_to_json(std::span<const ContextEvidence> evidences);

}  // namespace capsum
