#include "capsum/selector.hpp"

#include "capsum/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace capsum {

namespace {

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Hidden activations (post-relu) written into `hidden`; returns the output logit.
double forward(const SelectorHead& head, std::span<const float> x, std::vector<double>& hidden) {
    const std::size_t d = static_cast<std::size_t>(head.input_dim);
    hidden.resize(static_cast<std::size_t>(head.hidden_dim));
    double logit = head.b2;
    for (int k = 0; k < head.hidden_dim; ++k) {
        const double* row = head.w1.data() + static_cast<std::size_t>(k) * d;
        double acc = head.b1[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < d; ++i) acc += row[i] * static_cast<double>(x[i]);
        const double h = acc > 0.0 ? acc : 0.0;
        hidden[static_cast<std::size_t>(k)] = h;
        logit += head.w2[static_cast<std::size_t>(k)] * h;
    }
    return logit;
}

void check_dim(const SelectorHead& head, std::size_t got) {
    if (static_cast<int>(got) != head.input_dim) {
        throw DataError("feature length " + std::to_string(got) + " does not match selector input_dim " +
                        std::to_string(head.input_dim));
    }
}

}  // namespace

SelectorHead SelectorHead::zeros(int input_dim, int hidden_dim) {
    if (input_dim <= 0 || hidden_dim <= 0) throw ConfigError("selector dimensions must be positive");
    SelectorHead h;
    h.input_dim = input_dim;
    h.hidden_dim = hidden_dim;
    h.w1.assign(static_cast<std::size_t>(input_dim) * static_cast<std::size_t>(hidden_dim), 0.0);
    h.b1.assign(static_cast<std::size_t>(hidden_dim), 0.0);
    h.w2.assign(static_cast<std::size_t>(hidden_dim), 0.0);
    return h;
}

SelectorHead SelectorHead::initialized(int input_dim, int hidden_dim, std::uint64_t seed) {
    SelectorHead h = zeros(input_dim, hidden_dim);
    std::mt19937_64 rng(seed);
    const double a1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
    const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    std::uniform_real_distribution<double> u1(-a1, a1);
    std::uniform_real_distribution<double> u2(-a2, a2);
    for (auto& w : h.w1) w = u1(rng);
    for (auto& b : h.b1) b = u1(rng);
    for (auto& w : h.w2) w = u2(rng);
    h.b2 = u2(rng);
    return h;
}

bool SelectorHead::all_finite() const {
    auto finite = [](double v) { return std::isfinite(v); };
    return std::all_of(w1.begin(), w1.end(), finite) && std::all_of(b1.begin(), b1.end(), finite) &&
           std::all_of(w2.begin(), w2.end(), finite) && std::isfinite(b2);
}

std::vector<double> SelectorHead::flatten() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    flat.insert(flat.end(), w1.begin(), w1.end());
    flat.insert(flat.end(), b1.begin(), b1.end());
    flat.insert(flat.end(), w2.begin(), w2.end());
    flat.push_back(b2);
    return flat;
}

void SelectorHead::assign(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw DataError("flat parameter vector has the wrong length");
    auto it = flat.begin();
    std::copy_n(it, w1.size(), w1.begin());
    it += static_cast<std::ptrdiff_t>(w1.size());
    std::copy_n(it, b1.size(), b1.begin());
    it += static_cast<std::ptrdiff_t>(b1.size());
    std::copy_n(it, w2.size(), w2.begin());
    it += static_cast<std::ptrdiff_t>(w2.size());
    b2 = *it;
}

double score_frame(const SelectorHead& head, std::span<const float> feature) {
    check_dim(head, feature.size());
    std::vector<double> hidden;
    return logistic(forward(head, feature, hidden));
}

CandidateSet screen(const ExamStream& stream, const SelectorHead& head, double tau_s) {
    if (!(tau_s >= 0.0 && tau_s <= 1.0)) throw ConfigError("tau_s must lie in [0, 1]");
    CandidateSet out;
    out.threshold = tau_s;
    std::vector<double> hidden;
    for (const auto& f : stream.frames) {
        check_dim(head, f.feature.size());
        const double s = logistic(forward(head, f.feature, hidden));
        if (s >= tau_s) {
            out.frame_indices.push_back(f.frame_index);
            out.scores.push_back(s);
        }
    }
    return out;
}

namespace {

template <typename Access>
LossAndGradient loss_and_grad_impl(const SelectorHead& head, std::size_t n, Access&& example) {
    constexpr double kClamp = 1e-12;
    LossAndGradient out{0.0, SelectorHead::zeros(head.input_dim, head.hidden_dim)};
    auto& g = out.gradient;
    const std::size_t d = static_cast<std::size_t>(head.input_dim);
    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<double> hidden;

    for (std::size_t b = 0; b < n; ++b) {
        const LabeledFeature& ex = example(b);
        check_dim(head, ex.feature.size());
        const double logit = forward(head, ex.feature, hidden);
        const double s_raw = logistic(logit);
        const double s = std::clamp(s_raw, kClamp, 1.0 - kClamp);
        const double y = ex.label ? 1.0 : 0.0;
        out.loss -= inv_n * (y * std::log(s) + (1.0 - y) * std::log(1.0 - s));

        // d(loss)/d(logit). Inside the clamp region the loss is flat in the logit.
        const double dlogit = (s_raw == s) ? inv_n * (s_raw - y) : 0.0;
        if (dlogit == 0.0) continue;
        g.b2 += dlogit;
        for (int k = 0; k < head.hidden_dim; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            g.w2[kk] += dlogit * hidden[kk];
            if (hidden[kk] <= 0.0) continue;
            const double dpre = dlogit * head.w2[kk];
            g.b1[kk] += dpre;
            double* grow = g.w1.data() + kk * d;
            for (std::size_t i = 0; i < d; ++i) grow[i] += dpre * static_cast<double>(ex.feature[i]);
        }
    }
    return out;
}

}  // namespace

LossAndGradient bce_loss_and_grad(const SelectorHead& head, std::span<const LabeledFeature> batch) {
    if (batch.empty()) throw DataError("bce_loss_and_grad needs a non-empty batch");
    return loss_and_grad_impl(head, batch.size(), [&](std::size_t i) -> const LabeledFeature& { return batch[i]; });
}

TrainedHead train_head(std::span<const LabeledFeature> dataset, const TrainOptions& options) {
    if (dataset.empty()) throw DataError("training set is empty");
    const bool has_pos = std::any_of(dataset.begin(), dataset.end(), [](const auto& e) { return e.label == 1; });
    const bool has_neg = std::any_of(dataset.begin(), dataset.end(), [](const auto& e) { return e.label == 0; });
    if (!has_pos || !has_neg) throw DataError("training set must contain both classes");
    if (options.epochs < 0) throw ConfigError("epochs must be non-negative");
    if (!(options.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");

    const int d = static_cast<int>(dataset.front().feature.size());
    TrainedHead out;
    out.head = SelectorHead::initialized(d, options.hidden_dim, options.seed);
    out.meta = {options.seed, options.epochs, options.learning_rate, options.batch_size, 0.0};

    const std::size_t n = dataset.size();
    const std::size_t bs = options.batch_size <= 0 ? n : std::min<std::size_t>(n, options.batch_size);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);

    auto flat = out.head.flatten();
    for (int epoch = 1; epoch <= options.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n; start += bs) {
            const std::size_t count = std::min(n, start + bs) - start;
            auto lg = loss_and_grad_impl(out.head, count, [&](std::size_t k) -> const LabeledFeature& {
                return dataset[order[start + k]];
            });
            if (!std::isfinite(lg.loss)) {
                throw TrainingError("selector training diverged at epoch " + std::to_string(epoch), epoch);
            }
            const auto grad = lg.gradient.flatten();
            for (std::size_t p = 0; p < flat.size(); ++p) flat[p] -= options.learning_rate * grad[p];
            out.head.assign(flat);
        }
        if (!out.head.all_finite()) {
            throw TrainingError("selector parameters became non-finite at epoch " + std::to_string(epoch), epoch);
        }
    }
    out.meta.final_loss = bce_loss_and_grad(out.head, dataset).loss;
    if (!std::isfinite(out.meta.final_loss)) {
        throw TrainingError("selector training diverged at epoch " + std::to_string(options.epochs), options.epochs);
    }
    return out;
}

BinaryMetrics evaluate_head(const SelectorHead& head, std::span<const LabeledFeature> data, double threshold) {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (const auto& ex : data) {
        const bool pred = score_frame(head, ex.feature) >= threshold;
        if (pred && ex.label) ++tp;
        else if (pred) ++fp;
        else if (ex.label) ++fn;
        else ++tn;
    }
    BinaryMetrics m;
    const double total = static_cast<double>(tp + fp + tn + fn);
    m.accuracy = total > 0 ? static_cast<double>(tp + tn) / total : 0.0;
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

json head_to_json(const TrainedHead& t) {
    return json{{"input_dim", t.head.input_dim},
                {"hidden_dim", t.head.hidden_dim},
                {"w1", t.head.w1},
                {"b1", t.head.b1},
                {"w2", t.head.w2},
                {"b2", t.head.b2},
                {"training",
                 {{"seed", t.meta.seed},
                  {"epochs", t.meta.epochs},
                  {"learning_rate", t.meta.learning_rate},
                  {"batch_size", t.meta.batch_size},
                  {"final_loss", t.meta.final_loss}}}};
}

TrainedHead head_from_json(const json& j, std::string_view source) {
    const std::string src(source);
    reject_unknown_keys(j, {"input_dim", "hidden_dim", "w1", "b1", "w2", "b2", "training"}, src);
    TrainedHead t;
    try {
        t.head = SelectorHead::zeros(j.at("input_dim").get<int>(), j.at("hidden_dim").get<int>());
        auto load = [&](const char* key, std::vector<double>& dst) {
            auto v = j.at(key).get<std::vector<double>>();
            if (v.size() != dst.size()) throw DataError(src + ": \"" + key + "\" has the wrong length");
            dst = std::move(v);
        };
        load("w1", t.head.w1);
        load("b1", t.head.b1);
        load("w2", t.head.w2);
        t.head.b2 = j.at("b2").get<double>();
        if (j.contains("training")) {
            const auto& m = j.at("training");
            reject_unknown_keys(m, {"seed", "epochs", "learning_rate", "batch_size", "final_loss"}, src + " training");
            t.meta.seed = m.value("seed", std::uint64_t{0});
            t.meta.epochs = m.value("epochs", 0);
            t.meta.learning_rate = m.value("learning_rate", 0.0);
            t.meta.batch_size = m.value("batch_size", 0);
            t.meta.final_loss = m.value("final_loss", 0.0);
        }
    } catch (const json::exception& e) {
        throw DataError(src + ": malformed selector head (" + e.what() + ")");
    }
    if (!t.head.all_finite()) throw DataError(src + ": selector head has non-finite parameters");
    return t;
}

}  // namespace capsum
