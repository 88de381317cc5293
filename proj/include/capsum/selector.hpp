#pragma once

#include "capsum/io.hpp"
#include "capsum/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace capsum {

// One-hidden-layer screening head: logistic(w2 . relu(W1 x + b1) + b2).
// W1 is stored row-major (hidden x input). The same shape doubles as its own gradient.
struct SelectorHead {
    int input_dim = 0;
    int hidden_dim = 0;
    std::vector<double> w1;
    std::vector<double> b1;
    std::vector<double> w2;
    double b2 = 0.0;

    static SelectorHead zeros(int input_dim, int hidden_dim);
    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every parameter, drawn from `seed`.
    static SelectorHead initialized(int input_dim, int hidden_dim, std::uint64_t seed);

    std::size_t parameter_count() const { return w1.size() + b1.size() + w2.size() + 1; }
    bool all_finite() const;

    // Flat parameter view in the order w1, b1, w2, b2 (for finite differences and tests).
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);

    friend bool operator==(const SelectorHead&, const SelectorHead&) = default;
};

struct TrainingMetadata {
    std::uint64_t seed = 0;
    int epochs = 0;
    double learning_rate = 0.0;
    int batch_size = 0;
    double final_loss = 0.0;

    friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

struct TrainedHead {
    SelectorHead head;
    TrainingMetadata meta;
};

struct LabeledFeature {
    std::vector<float> feature;
    int label = 0;  // 1 = diagnostically relevant, 0 = normal
};

struct CandidateSet {
    std::vector<FrameIndex> frame_indices;  // ascending
    std::vector<double> scores;             // selector score per retained frame
    double threshold = 0.5;

    std::size_t size() const { return frame_indices.size(); }
};

double score_frame(const SelectorHead& head, std::span<const float> feature);

// Retains frames scoring >= tau_s, in stream order. The score of each retained frame
// travels with the candidate set.
CandidateSet screen(const ExamStream& stream, const SelectorHead& head, double tau_s);

struct LossAndGradient {
    double loss = 0.0;
    SelectorHead gradient;
};

// Mean binary cross-entropy over the batch and its analytic gradient. Scores are
// clamped to [1e-12, 1 - 1e-12] before the log.
LossAndGradient bce_loss_and_grad(const SelectorHead& head, std::span<const LabeledFeature> batch);

struct TrainOptions {
    int hidden_dim = 64;
    int epochs = 30;
    double learning_rate = 0.1;
    int batch_size = 64;  // <= 0 means full batch
    std::uint64_t seed = 0;
};

// Mini-batch gradient descent. Deterministic given options.seed. Throws TrainingError
// naming the epoch if the loss becomes non-finite.
TrainedHead train_head(std::span<const LabeledFeature> dataset, const TrainOptions& options);

struct BinaryMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

BinaryMetrics evaluate_head(const SelectorHead& head, std::span<const LabeledFeature> data, double threshold);

json head_to_json(const TrainedHead& trained);
TrainedHead head_from_json(const json& j, std::string_view source = "<json>");

}  // namespace capsum
