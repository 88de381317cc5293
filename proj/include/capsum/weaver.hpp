#pragma once

#include "capsum/io.hpp"
#include "capsum/tokenizer.hpp"
#include "capsum/types.hpp"

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace capsum {

struct CoarseContext {
    int id = 0;
    std::vector<FrameIndex> members;  // sorted
    double t_start = 0.0;
    double t_end = 0.0;

    friend bool operator==(const CoarseContext&, const CoarseContext&) = default;
};

struct FineContext {
    int coarse_id = 0;
    int fine_id = 0;
    std::vector<FrameIndex> members;  // sorted, non-empty

    friend bool operator==(const FineContext&, const FineContext&) = default;
};

struct WeaverParams {
    double sigma_coarse = 0.55;
    double sigma_fine = 0.75;
    double gap_max_sec = 600.0;

    void validate() const;
};

struct ContextHierarchy {
    std::vector<CoarseContext> coarse;
    std::vector<FineContext> fine;
    std::string method;       // "hierarchical" or "fixed_window"
    WeaverParams params;      // thresholds used (hierarchical)
    double window_sec = 0.0;  // bin width (fixed_window)

    std::size_t candidate_count() const;
};

// Walks the tokens in time order and opens a new coarse context whenever the
// affinity to the previous token drops below sigma_coarse or the time gap exceeds
// gap_max_sec. Tokens must be sorted by timestamp.
std::vector<CoarseContext> weave_coarse(std::span<const SpatioTemporalToken> tokens, double sigma_coarse,
                                        double gap_max_sec);

// Average-linkage agglomerative clustering of one coarse context's tokens, merging
// while the best inter-cluster mean affinity is >= sigma_fine. Ties merge the pair
// with the lexicographically smallest member indices. `tokens` may be any superset
// of the coarse members; order does not matter.
std::vector<FineContext> weave_fine(const CoarseContext& coarse, std::span<const SpatioTemporalToken> tokens,
                                    double sigma_fine);

class ContextWeaver {
public:
    virtual ~ContextWeaver() = default;
    virtual ContextHierarchy weave(std::span<const SpatioTemporalToken> tokens) const = 0;
};

class HierarchicalWeaver final : public ContextWeaver {
public:
    explicit HierarchicalWeaver(WeaverParams params) : params_(params) { params_.validate(); }
    ContextHierarchy weave(std::span<const SpatioTemporalToken> tokens) const override;

private:
    WeaverParams params_;
};

// Absolute time bins of fixed width; each non-empty bin is one coarse and one fine
// context. Used by the weaver ablation.
class FixedWindowWeaver final : public ContextWeaver {
public:
    explicit FixedWindowWeaver(double window_sec);
    ContextHierarchy weave(std::span<const SpatioTemporalToken> tokens) const override;

private:
    double window_sec_;
};

// Mode of the members' true labels; ties go to the lowest label id.
LabelId dominant_label(const FineContext& context, const std::function<LabelId(FrameIndex)>& truth);

// Fraction of members carrying the dominant true label.
double context_purity(const FineContext& context, const std::function<LabelId(FrameIndex)>& truth);

json hierarchy_to_json(const ContextHierarchy& hierarchy);

}  // namespace capsum
