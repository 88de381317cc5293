#include "capsum/converger.hpp"

#include "capsum/error.hpp"

#include <algorithm>
#include <cmath>

namespace capsum {

void ConvergerParams::validate() const {
    if (!(tau_agree >= 0.0 && tau_agree <= 1.0)) throw ConfigError("tau_agree must lie in [0, 1]");
    if (!(tau_min >= 0.0 && tau_min <= 1.0)) throw ConfigError("tau_min must lie in [0, 1]");
}

namespace {

const std::vector<double>& dist_of(const ExamStream& stream, FrameIndex idx) {
    const FrameRecord& f = stream.at_index(idx);
    if (!f.lesion_dist) {
        throw DataError("patient " + stream.patient_id + ": frame " + std::to_string(idx) +
                        " has no lesion distribution");
    }
    if (static_cast<int>(f.lesion_dist->size()) != stream.num_classes) {
        throw DataError("patient " + stream.patient_id + ": frame " + std::to_string(idx) +
                        " lesion distribution has the wrong length");
    }
    return *f.lesion_dist;
}

// Summed in ascending frame order so the result does not depend on member order.
std::vector<double> sum_dists(std::span<const FrameIndex> members, const ExamStream& stream) {
    std::vector<FrameIndex> ordered(members.begin(), members.end());
    std::sort(ordered.begin(), ordered.end());
    std::vector<double> total(static_cast<std::size_t>(stream.num_classes), 0.0);
    for (FrameIndex idx : ordered) {
        const auto& p = dist_of(stream, idx);
        for (std::size_t k = 0; k < total.size(); ++k) total[k] += p[k];
    }
    return total;
}

const LesionLabel& label_of(const ExamStream& stream, LabelId id) {
    if (id < 0 || id >= static_cast<LabelId>(stream.taxonomy.size())) {
        throw InvariantError("label id outside the taxonomy");
    }
    return stream.taxonomy[static_cast<std::size_t>(id)];
}

double feature_distance(std::span<const float> a, std::span<const float> b, MedoidMetric metric) {
    if (metric == MedoidMetric::Euclidean) {
        double sq = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
            sq += diff * diff;
        }
        return std::sqrt(sq);
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 1.0;
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

LabelId argmax_lowest(std::span<const double> values) {
    if (values.empty()) throw DataError("argmax of an empty vector");
    std::size_t best = 0;
    for (std::size_t k = 1; k < values.size(); ++k) {
        if (values[k] > values[best]) best = k;
    }
    return static_cast<LabelId>(best);
}

FusedEvidence fuse_evidence(std::span<const FrameIndex> members, const ExamStream& stream) {
    if (members.empty()) throw DataError("cannot fuse evidence of an empty context");
    FusedEvidence out;
    out.evidence = sum_dists(members, stream);
    out.provisional_label = argmax_lowest(out.evidence);
    return out;
}

std::vector<FrameIndex> refine_context(std::span<const FrameIndex> members, const ExamStream& stream,
                                       LabelId provisional_label, double tau_agree) {
    std::vector<FrameIndex> kept;
    for (FrameIndex idx : members) {
        if (dist_of(stream, idx)[static_cast<std::size_t>(provisional_label)] >= tau_agree) kept.push_back(idx);
    }
    if (kept.empty()) kept.assign(members.begin(), members.end());
    return kept;
}

RefinedPrediction refined_prediction(std::span<const FrameIndex> retained, const ExamStream& stream) {
    if (retained.empty()) throw InvariantError("refined prediction over an empty retained set");
    RefinedPrediction out;
    out.evidence = sum_dists(retained, stream);
    out.label = argmax_lowest(out.evidence);
    double l1 = 0.0;
    for (double v : out.evidence) l1 += std::abs(v);
    out.confidence = l1 > 0.0 ? out.evidence[static_cast<std::size_t>(out.label)] / l1 : 0.0;
    return out;
}

std::vector<ContextEvidence> prune_contexts(std::vector<ContextEvidence> evidences, double tau_min,
                                            LabelId normal_label) {
    std::erase_if(evidences, [&](const ContextEvidence& e) { return e.label == normal_label || e.confidence < tau_min; });
    return evidences;
}

FrameIndex select_medoid(std::span<const FrameIndex> members, const ExamStream& stream, MedoidMetric metric) {
    if (members.empty()) throw InvariantError("medoid of an empty set");
    std::vector<const FrameRecord*> recs;
    recs.reserve(members.size());
    for (FrameIndex idx : members) recs.push_back(&stream.at_index(idx));

    const std::size_t n = recs.size();
    std::vector<double> totals(n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            const double dab = feature_distance(recs[a]->feature, recs[b]->feature, metric);
            totals[a] += dab;
            totals[b] += dab;
        }
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < n; ++k) {
        const auto& cand = *recs[k];
        const auto& cur = *recs[best];
        if (totals[k] < totals[best] ||
            (totals[k] == totals[best] && std::pair(cand.timestamp_sec, cand.frame_index) <
                                              std::pair(cur.timestamp_sec, cur.frame_index))) {
            best = k;
        }
    }
    return recs[best]->frame_index;
}

ContextEvidence evaluate_context(const FineContext& context, const ExamStream& stream, double tau_agree) {
    ContextEvidence ev;
    ev.coarse_id = context.coarse_id;
    ev.fine_id = context.fine_id;
    ev.members = context.members;
    auto fused = fuse_evidence(ev.members, stream);
    ev.evidence = std::move(fused.evidence);
    ev.provisional_label = fused.provisional_label;
    ev.retained = refine_context(ev.members, stream, ev.provisional_label, tau_agree);
    auto refined = refined_prediction(ev.retained, stream);
    ev.refined_evidence = std::move(refined.evidence);
    ev.label = refined.label;
    ev.confidence = refined.confidence;
    return ev;
}

DiagnosticSummary assemble_summary(std::span<const ContextEvidence> survivors, const ExamStream& stream,
                                   MedoidMetric metric) {
    DiagnosticSummary summary;
    summary.patient_id = stream.patient_id;
    for (const auto& ev : survivors) {
        const FrameIndex key = select_medoid(ev.retained, stream, metric);
        const FrameRecord& f = stream.at_index(key);
        summary.entries.push_back(
            {f.timestamp_sec, f.frame_index, label_of(stream, ev.label), ev.confidence, ev.coarse_id, ev.fine_id});
    }
    std::stable_sort(summary.entries.begin(), summary.entries.end(), [](const SummaryEntry& a, const SummaryEntry& b) {
        return std::pair(a.timestamp_sec, a.frame_index) < std::pair(b.timestamp_sec, b.frame_index);
    });
    return summary;
}

ConvergeResult converge(const ContextHierarchy& hierarchy, const ExamStream& stream, const ConvergerParams& params) {
    params.validate();
    const LabelId normal = normal_label_id(stream.taxonomy);
    ConvergeResult out;
    out.evidences.reserve(hierarchy.fine.size());
    for (const auto& fc : hierarchy.fine) out.evidences.push_back(evaluate_context(fc, stream, params.tau_agree));
    const auto survivors = prune_contexts(out.evidences, params.tau_min, normal);
    out.summary = assemble_summary(survivors, stream, params.medoid_metric);
    return out;
}

DiagnosticSummary converge_top_frame(const ContextHierarchy& hierarchy, const ExamStream& stream, double tau_min) {
    const LabelId normal = normal_label_id(stream.taxonomy);
    DiagnosticSummary summary;
    summary.patient_id = stream.patient_id;
    for (const auto& fc : hierarchy.fine) {
        const FrameRecord* top = nullptr;
        double top_conf = -1.0;
        for (FrameIndex idx : fc.members) {
            const auto& p = dist_of(stream, idx);
            const double conf = *std::max_element(p.begin(), p.end());
            if (conf > top_conf) {  // members are in time order, so the earliest wins ties
                top_conf = conf;
                top = &stream.at_index(idx);
            }
        }
        if (!top) continue;
        const LabelId label = argmax_lowest(*top->lesion_dist);
        if (label == normal || top_conf < tau_min) continue;
        summary.entries.push_back(
            {top->timestamp_sec, top->frame_index, label_of(stream, label), top_conf, fc.coarse_id, fc.fine_id});
    }
    std::stable_sort(summary.entries.begin(), summary.entries.end(), [](const SummaryEntry& a, const SummaryEntry& b) {
        return std::pair(a.timestamp_sec, a.frame_index) < std::pair(b.timestamp_sec, b.frame_index);
    });
    return summary;
}

json evidences_to_json(std::span<const ContextEvidence> evidences) {
    json out = json::array();
    for (const auto& e : evidences) {
        out.push_back({{"coarse_id", e.coarse_id},
                       {"fine_id", e.fine_id},
                       {"members", e.members},
                       {"evidence", e.evidence},
                       {"provisional_label", e.provisional_label},
                       {"retained", e.retained},
                       {"refined_evidence", e.refined_evidence},
                       {"label", e.label},
                       {"confidence", e.confidence}});
    }
    return out;
}

}  // namespace capsum
