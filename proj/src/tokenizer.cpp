#include "capsum/tokenizer.hpp"

#include "capsum/error.hpp"

#include <cmath>

namespace capsum {

double TokenizerOptions::resolved_lambda(int feature_dim) const {
    if (lambda_time) return *lambda_time;
    return std::sqrt(2.0 / static_cast<double>(feature_dim));
}

std::vector<double> temporal_embedding(double position, int d, double base) {
    if (d <= 0 || d % 2 != 0) throw ConfigError("temporal embedding dimension must be a positive even number");
    if (!(base > 1.0)) throw ConfigError("temporal embedding base must exceed 1");
    if (!(position >= 0.0)) throw DataError("temporal position must be non-negative");
    std::vector<double> e(static_cast<std::size_t>(d));
    for (int i = 0; i < d / 2; ++i) {
        const double freq = std::pow(base, -2.0 * i / static_cast<double>(d));
        const double angle = position * freq;
        e[2 * static_cast<std::size_t>(i)] = std::sin(angle);
        e[2 * static_cast<std::size_t>(i) + 1] = std::cos(angle);
    }
    return e;
}

std::vector<SpatioTemporalToken> tokenize(const CandidateSet& candidates, const ExamStream& stream,
                                          const TokenizerOptions& options) {
    const int d = stream.feature_dim;
    if (d % 2 != 0) throw ConfigError("feature_dim must be even to build temporal embeddings");
    if (!(options.time_scale_sec > 0.0)) throw ConfigError("time_scale_sec must be positive");
    const double lambda = options.resolved_lambda(d);

    std::vector<SpatioTemporalToken> tokens;
    tokens.reserve(candidates.size());
    for (FrameIndex idx : candidates.frame_indices) {
        const FrameRecord& f = stream.at_index(idx);
        if (static_cast<int>(f.feature.size()) != d) {
            throw DataError("patient " + stream.patient_id + ": frame " + std::to_string(idx) +
                            " has no feature of length " + std::to_string(d));
        }
        SpatioTemporalToken tok;
        tok.frame_index = idx;
        tok.timestamp_sec = f.timestamp_sec;
        tok.vector.resize(2 * static_cast<std::size_t>(d));

        double norm = 1.0;
        if (options.normalize_visual) {
            double sq = 0.0;
            for (float v : f.feature) sq += static_cast<double>(v) * static_cast<double>(v);
            norm = sq > 0.0 ? std::sqrt(sq) : 1.0;
        }
        for (int i = 0; i < d; ++i) tok.vector[static_cast<std::size_t>(i)] = static_cast<double>(f.feature[i]) / norm;

        const double position = options.position_source == PositionSource::Seconds
                                    ? f.timestamp_sec / options.time_scale_sec
                                    : static_cast<double>(idx);
        const auto e = temporal_embedding(position, d, options.base);
        for (int i = 0; i < d; ++i) tok.vector[static_cast<std::size_t>(d + i)] = lambda * e[static_cast<std::size_t>(i)];
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

double token_affinity(const SpatioTemporalToken& a, const SpatioTemporalToken& b) {
    if (a.vector.size() != b.vector.size()) throw DataError("token dimensions differ");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.vector.size(); ++i) {
        dot += a.vector[i] * b.vector[i];
        na += a.vector[i] * a.vector[i];
        nb += b.vector[i] * b.vector[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace capsum
