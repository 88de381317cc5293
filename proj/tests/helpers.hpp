#pragma once

#include "capsum/types.hpp"

#include <random>
#include <vector>

namespace capsum::test {

// Stream with the default taxonomy; timestamps default to the frame index.
inline ExamStream make_stream(const std::vector<std::vector<float>>& features,
                              const std::vector<std::vector<double>>& dists = {},
                              const std::vector<double>& timestamps = {}) {
    ExamStream s;
    s.patient_id = "p";
    s.feature_dim = features.empty() ? 2 : static_cast<int>(features.front().size());
    if (!dists.empty()) {
        s.num_classes = static_cast<int>(dists.front().size());
        s.taxonomy.clear();
        for (int k = 0; k < s.num_classes; ++k) {
            s.taxonomy.push_back({k, "c" + std::to_string(k), k == s.num_classes - 1});
        }
    }
    for (std::size_t i = 0; i < features.size(); ++i) {
        FrameRecord f;
        f.frame_index = static_cast<FrameIndex>(i);
        f.timestamp_sec = timestamps.empty() ? static_cast<double>(i) : timestamps[i];
        f.feature = features[i];
        if (!dists.empty()) f.lesion_dist = dists[i];
        s.frames.push_back(std::move(f));
    }
    return s;
}

inline LesionLabel lbl(LabelId id) { return {id, "c" + std::to_string(id), false}; }

inline SummaryEntry entry(double t, LabelId label) {
    SummaryEntry e;
    e.timestamp_sec = t;
    e.frame_index = static_cast<FrameIndex>(t);
    e.label = lbl(label);
    e.confidence = 0.9;
    return e;
}

inline DiagnosticSummary summary_of(std::vector<SummaryEntry> entries, std::string id = "p") {
    return {std::move(id), std::move(entries)};
}

inline std::vector<double> random_dist(std::mt19937_64& rng, int k) {
    std::uniform_real_distribution<double> u(0.01, 1.0);
    std::vector<double> p(static_cast<std::size_t>(k));
    double s = 0.0;
    for (auto& v : p) s += (v = u(rng));
    for (auto& v : p) v /= s;
    return p;
}

}  // namespace capsum::test
