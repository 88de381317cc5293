#include "capsum/types.hpp"

#include "capsum/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

namespace capsum {

Taxonomy default_taxonomy() {
    static const char* const kNames[kDefaultNumClasses] = {
        "ulcer",
        "erosion",
        "angioectasia",
        "mucosal erythema",
        "eminence lesion",
        "hematocele",
        "lymphangiectasia",
        "lymphoid follicular hyperplasia",
        "polyp",
        "parasite",
        "intestinal fluid accumulation",
        "normal small intestinal mucosa",
    };
    Taxonomy taxonomy;
    taxonomy.reserve(kDefaultNumClasses);
    for (int i = 0; i < kDefaultNumClasses; ++i) {
        taxonomy.push_back({i, kNames[i], i == kDefaultNumClasses - 1});
    }
    return taxonomy;
}

LabelId normal_label_id(const Taxonomy& taxonomy) {
    std::optional<LabelId> found;
    for (const auto& label : taxonomy) {
        if (!label.is_normal) continue;
        if (found) throw DataError("taxonomy flags more than one normal label");
        found = label.id;
    }
    if (!found) throw DataError("taxonomy has no normal label");
    return *found;
}

std::optional<std::size_t> ExamStream::position_of(FrameIndex frame_index) const {
    auto it = std::lower_bound(frames.begin(), frames.end(), frame_index,
                               [](const FrameRecord& r, FrameIndex idx) { return r.frame_index < idx; });
    if (it == frames.end() || it->frame_index != frame_index) return std::nullopt;
    return static_cast<std::size_t>(it - frames.begin());
}

const FrameRecord& ExamStream::at_index(FrameIndex frame_index) const {
    auto pos = position_of(frame_index);
    if (!pos) {
        throw DataError("patient " + patient_id + ": no frame with frame_index " + std::to_string(frame_index));
    }
    return frames[*pos];
}

namespace {

void add(std::vector<Violation>& out, std::optional<FrameIndex> frame, std::string rule, std::string message) {
    out.push_back({frame, std::move(rule), std::move(message)});
}

void check_taxonomy(const ExamStream& stream, std::vector<Violation>& out) {
    if (static_cast<int>(stream.taxonomy.size()) != stream.num_classes) {
        add(out, std::nullopt, "taxonomy_size",
            "taxonomy has " + std::to_string(stream.taxonomy.size()) + " labels, num_classes is " +
                std::to_string(stream.num_classes));
    }
    int normals = 0;
    for (std::size_t i = 0; i < stream.taxonomy.size(); ++i) {
        if (stream.taxonomy[i].id != static_cast<LabelId>(i)) {
            add(out, std::nullopt, "taxonomy_ids", "label ids must be dense 0..K-1 in order");
            break;
        }
    }
    for (const auto& l : stream.taxonomy) normals += l.is_normal ? 1 : 0;
    if (normals != 1) {
        add(out, std::nullopt, "taxonomy_normal",
            "exactly one label must be normal, found " + std::to_string(normals));
    }
    if (stream.feature_dim <= 0) add(out, std::nullopt, "feature_dim", "feature_dim must be positive");
}

}  // namespace

std::vector<Violation> validate_stream(const ExamStream& stream) {
    std::vector<Violation> out;
    check_taxonomy(stream, out);

    const FrameRecord* prev = nullptr;
    for (const auto& f : stream.frames) {
        const FrameIndex t = f.frame_index;
        if (!(f.timestamp_sec >= 0.0) || !std::isfinite(f.timestamp_sec)) {
            add(out, t, "timestamp_range", "timestamp must be finite and non-negative");
        }
        if (prev) {
            if (f.frame_index <= prev->frame_index) {
                add(out, t, "frame_index_order", "frame_index must be strictly increasing");
            }
            if (f.timestamp_sec < prev->timestamp_sec) {
                add(out, t, "timestamp_order", "timestamp decreases relative to previous frame");
            }
        }
        if (static_cast<int>(f.feature.size()) != stream.feature_dim) {
            add(out, t, "feature_dim",
                "feature has length " + std::to_string(f.feature.size()) + ", expected " +
                    std::to_string(stream.feature_dim));
        } else if (!std::all_of(f.feature.begin(), f.feature.end(), [](float v) { return std::isfinite(v); })) {
            add(out, t, "feature_finite", "feature contains a non-finite value");
        }
        if (f.lesion_dist) {
            const auto& p = *f.lesion_dist;
            if (static_cast<int>(p.size()) != stream.num_classes) {
                add(out, t, "dist_size",
                    "lesion_dist has length " + std::to_string(p.size()) + ", expected " +
                        std::to_string(stream.num_classes));
            } else {
                double sum = 0.0;
                bool negative = false;
                for (double v : p) {
                    negative |= !(v >= 0.0);
                    sum += v;
                }
                if (negative) add(out, t, "dist_negative", "lesion_dist has a negative or NaN entry");
                if (!(std::abs(sum - 1.0) <= 1e-6)) {
                    std::ostringstream msg;
                    msg << "lesion_dist sums to " << sum;
                    add(out, t, "dist_sum", msg.str());
                }
            }
        }
        if (f.selector_score && !(*f.selector_score >= 0.0 && *f.selector_score <= 1.0)) {
            add(out, t, "score_range", "selector_score outside [0, 1]");
        }
        prev = &f;
    }

    std::stable_sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
        return std::tie(a.frame_index, a.rule) < std::tie(b.frame_index, b.rule);
    });
    return out;
}

std::vector<Violation> validate_annotations(const AnnotationSet& annotations, const ExamStream& stream) {
    std::vector<Violation> out;
    const double lo = stream.frames.empty() ? 0.0 : stream.frames.front().timestamp_sec;
    const double hi = stream.frames.empty() ? 0.0 : stream.frames.back().timestamp_sec;
    for (std::size_t i = 0; i < annotations.findings.size(); ++i) {
        const auto& f = annotations.findings[i];
        const std::string where = "finding " + std::to_string(i);
        if (f.label.is_normal) add(out, std::nullopt, "finding_normal", where + " carries the normal label");
        if (f.label.id < 0 || f.label.id >= stream.num_classes) {
            add(out, std::nullopt, "finding_label", where + " label id out of range");
        }
        if (f.keyframe_timestamp_sec < lo || f.keyframe_timestamp_sec > hi) {
            add(out, std::nullopt, "finding_time", where + " timestamp outside the exam");
        }
    }
    return out;
}

std::vector<Violation> validate_summary(const DiagnosticSummary& summary) {
    std::vector<Violation> out;
    for (std::size_t i = 0; i < summary.entries.size(); ++i) {
        const auto& e = summary.entries[i];
        if (e.label.is_normal) add(out, e.frame_index, "entry_normal", "summary entry carries the normal label");
        if (!(e.confidence > 0.0 && e.confidence <= 1.0)) {
            add(out, e.frame_index, "entry_confidence", "confidence outside (0, 1]");
        }
        if (i > 0 && e.timestamp_sec < summary.entries[i - 1].timestamp_sec) {
            add(out, e.frame_index, "entry_order", "entries not sorted by timestamp");
        }
    }
    return out;
}

}  // namespace capsum
