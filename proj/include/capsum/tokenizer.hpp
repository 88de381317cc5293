#pragma once

#include "capsum/selector.hpp"
#include "capsum/types.hpp"

#include <vector>

namespace capsum {

enum class PositionSource { Seconds, FrameIndex };

struct TokenizerOptions {
    // Scale of the temporal half. Unset means sqrt(2/d), which gives the temporal half
    // unit norm, the same as the normalized visual half.
    std::optional<double> lambda_time;
    double time_scale_sec = 60.0;  // position = timestamp / time_scale in Seconds mode
    double base = 10000.0;
    PositionSource position_source = PositionSource::Seconds;
    bool normalize_visual = true;

    double resolved_lambda(int feature_dim) const;
};

struct SpatioTemporalToken {
    FrameIndex frame_index = 0;
    double timestamp_sec = 0.0;
    std::vector<double> vector;  // [visual (d) ; temporal (d)]
};

// e[2i] = sin(position / base^(2i/d)), e[2i+1] = cos(...), i = 0 .. d/2-1.
std::vector<double> temporal_embedding(double position, int d, double base = 10000.0);

std::vector<SpatioTemporalToken> tokenize(const CandidateSet& candidates, const ExamStream& stream,
                                          const TokenizerOptions& options);

// Cosine similarity of the full token vectors; 0 when either vector is zero.
double token_affinity(const SpatioTemporalToken& a, const SpatioTemporalToken& b);

}  // namespace capsum
