#include "capsum/synth.hpp"

#include "capsum/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace capsum {

void SimConfig::validate() const {
    if (num_frames <= 0) throw ConfigError("simulator.num_frames must be positive");
    if (!(frames_per_sec > 0.0)) throw ConfigError("simulator.frames_per_sec must be positive");
    if (num_events < 0) throw ConfigError("simulator.num_events must be non-negative");
    if (label_offset < 0) throw ConfigError("simulator.label_offset must be non-negative");
    if (event_duration_frames.min < 1 || event_duration_frames.max < event_duration_frames.min) {
        throw ConfigError("simulator.event_duration_frames must satisfy 1 <= min <= max");
    }
    if (feature_dim <= 0 || feature_dim % 2 != 0) throw ConfigError("simulator.feature_dim must be positive and even");
    if (sigma_vis < 0.0 || drift_norm < 0.0) throw ConfigError("simulator noise levels must be non-negative");
    if (!(drift_time_constant_sec > 0.0) || !(drift_step_sec > 0.0)) {
        throw ConfigError("simulator drift time scales must be positive");
    }
    if (!(confusion_noise >= 0.0 && confusion_noise <= 1.0)) throw ConfigError("simulator.confusion_noise must lie in [0, 1]");
    if (!(blur_fraction >= 0.0 && blur_fraction <= 1.0)) throw ConfigError("simulator.blur_fraction must lie in [0, 1]");
    if (!(blur_peak > 0.0 && blur_peak <= 1.0)) throw ConfigError("simulator.blur_peak must lie in (0, 1]");
    if (views_per_event.min < 1 || views_per_event.max < views_per_event.min) {
        throw ConfigError("simulator.views_per_event must satisfy 1 <= min <= max");
    }
    if (!(multi_view_prob >= 0.0 && multi_view_prob <= 1.0)) throw ConfigError("simulator.multi_view_prob must lie in [0, 1]");
    if (!(view_run_frames >= 1.0)) throw ConfigError("simulator.view_run_frames must be >= 1");
    if (mimic_bursts_per_hour < 0.0) throw ConfigError("simulator.mimic_bursts_per_hour must be non-negative");
    if (mimic_burst_frames.min < 1 || mimic_burst_frames.max < mimic_burst_frames.min) {
        throw ConfigError("simulator.mimic_burst_frames must satisfy 1 <= min <= max");
    }
    const double worst = static_cast<double>(num_events) * event_duration_frames.max;
    if (worst > max_event_fraction * num_frames) {
        throw ConfigError("simulator: num_events * max event duration exceeds max_event_fraction of the stream");
    }
    const auto m = confusion_matrix();
    for (const auto& row : m) {
        double s = 0.0;
        for (double v : row) {
            if (v < 0.0) throw ConfigError("simulator.confusion has a negative entry");
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-9) throw ConfigError("simulator.confusion rows must sum to 1");
    }
}

std::vector<std::vector<double>> SimConfig::confusion_matrix() const {
    const int k = kDefaultNumClasses;
    if (confusion) {
        if (static_cast<int>(confusion->size()) != k) throw ConfigError("simulator.confusion must be 12 x 12");
        for (const auto& row : *confusion) {
            if (static_cast<int>(row.size()) != k) throw ConfigError("simulator.confusion must be 12 x 12");
        }
        return *confusion;
    }
    std::vector<std::vector<double>> m(k, std::vector<double>(k, confusion_noise / (k - 1)));
    for (int i = 0; i < k; ++i) m[i][i] = 1.0 - confusion_noise;
    return m;
}

LabelId GroundTruth::label_of(const ExamStream& stream, FrameIndex idx) const {
    auto pos = stream.position_of(idx);
    if (!pos || *pos >= frame_labels.size()) throw DataError("ground truth has no frame " + std::to_string(idx));
    return frame_labels[*pos];
}

std::size_t GroundTruth::event_frame_count() const {
    return static_cast<std::size_t>(std::count_if(frame_kinds.begin(), frame_kinds.end(), [](FrameKind k) {
        return k == FrameKind::Event || k == FrameKind::Blurred;
    }));
}

namespace {

std::vector<double> random_unit(std::mt19937_64& rng, int d) {
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<double> v(static_cast<std::size_t>(d));
    double sq = 0.0;
    for (auto& x : v) {
        x = n01(rng);
        sq += x * x;
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& x : v) x *= inv;
    return v;
}

std::vector<double> sample_dist(std::mt19937_64& rng, const std::vector<double>& mean, double concentration) {
    if (concentration <= 0.0) return mean;
    std::vector<double> p(mean.size(), 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < mean.size(); ++k) {
        if (mean[k] <= 0.0) continue;
        std::gamma_distribution<double> g(concentration * mean[k], 1.0);
        p[k] = g(rng);
        total += p[k];
    }
    if (!(total > 0.0)) return mean;
    for (auto& v : p) v /= total;
    return p;
}

struct Segment {
    int start;
    int length;
};

bool overlaps(const Segment& a, const Segment& b, int margin) {
    return a.start < b.start + b.length + margin && b.start < a.start + a.length + margin;
}

}  // namespace

std::vector<std::vector<double>> class_prototypes(std::uint64_t prototype_seed, int feature_dim, int num_classes) {
    std::mt19937_64 rng(prototype_seed);
    std::vector<std::vector<double>> protos;
    for (int k = 0; k < num_classes; ++k) protos.push_back(random_unit(rng, feature_dim));
    return protos;
}

SyntheticExam generate_exam(const SimConfig& config) {
    config.validate();
    const int n = config.num_frames;
    const int d = config.feature_dim;
    const Taxonomy taxonomy = default_taxonomy();
    const int k = static_cast<int>(taxonomy.size());
    const LabelId normal = normal_label_id(taxonomy);
    const auto confusion = config.confusion_matrix();
    const auto protos = class_prototypes(config.prototype_seed, d, k);

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    std::vector<LabelId> lesion_classes;
    for (const auto& l : taxonomy) {
        if (!l.is_normal) lesion_classes.push_back(l.id);
    }

    // Events: non-overlapping, at least min_event_gap_sec apart.
    const int gap_frames = static_cast<int>(std::ceil(config.min_event_gap_sec * config.frames_per_sec));
    std::vector<Segment> events;
    for (int e = 0; e < config.num_events; ++e) {
        const int len = uniform_int(config.event_duration_frames.min, config.event_duration_frames.max);
        if (len > n) throw ConfigError("simulator: event longer than the stream");
        bool placed = false;
        for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
            Segment s{uniform_int(0, n - len), len};
            placed = std::none_of(events.begin(), events.end(), [&](const Segment& o) { return overlaps(s, o, gap_frames); });
            if (placed) events.push_back(s);
        }
        if (!placed) throw ConfigError("simulator: events cannot be placed without overlap; reduce num_events or min_event_gap_sec");
    }
    std::sort(events.begin(), events.end(), [](const Segment& a, const Segment& b) { return a.start < b.start; });

    SyntheticExam out;
    auto& stream = out.stream;
    auto& truth = out.truth;
    stream.patient_id = config.patient_id.empty() ? "synth-" + std::to_string(config.seed) : config.patient_id;
    stream.feature_dim = d;
    stream.num_classes = k;
    stream.taxonomy = taxonomy;
    truth.frame_labels.assign(static_cast<std::size_t>(n), normal);
    truth.frame_kinds.assign(static_cast<std::size_t>(n), FrameKind::Normal);

    // Per-frame appearance base: prototype index plus an optional offset vector id.
    std::vector<int> base_class(static_cast<std::size_t>(n), normal);
    std::vector<int> offset_id(static_cast<std::size_t>(n), -1);
    std::vector<std::vector<double>> offsets;
    std::vector<LabelId> blur_class(static_cast<std::size_t>(n), normal);

    for (std::size_t e = 0; e < events.size(); ++e) {
        const auto& seg = events[e];
        PlantedEvent ev;
        ev.label = config.balanced_labels ? lesion_classes[(static_cast<std::size_t>(config.label_offset) + e) % lesion_classes.size()]
                                          : lesion_classes[static_cast<std::size_t>(uniform_int(0, static_cast<int>(lesion_classes.size()) - 1))];
        do {
            ev.blur_label = lesion_classes[static_cast<std::size_t>(uniform_int(0, static_cast<int>(lesion_classes.size()) - 1))];
        } while (ev.blur_label == ev.label && lesion_classes.size() > 1);
        ev.views = config.views_per_event.min;
        if (config.views_per_event.max > ev.views && u01(rng) < config.multi_view_prob) {
            ev.views = uniform_int(ev.views + 1, config.views_per_event.max);
        }
        ev.first_frame = seg.start;
        ev.last_frame = seg.start + seg.length - 1;
        ev.keyframe_timestamp_sec = 0.5 * (ev.first_frame + ev.last_frame) / config.frames_per_sec;

        const int first_offset = static_cast<int>(offsets.size());
        for (int v = 0; v < ev.views; ++v) {
            auto o = random_unit(rng, d);
            for (auto& x : o) x *= config.view_offset_norm;
            offsets.push_back(std::move(o));
        }
        int view = uniform_int(0, ev.views - 1);
        const double switch_p = 1.0 / config.view_run_frames;
        for (int t = seg.start; t < seg.start + seg.length; ++t) {
            if (t > seg.start && ev.views > 1 && u01(rng) < switch_p) {
                int next = uniform_int(0, ev.views - 2);
                view = next >= view ? next + 1 : next;
            }
            const auto ti = static_cast<std::size_t>(t);
            truth.frame_labels[ti] = ev.label;
            truth.frame_kinds[ti] = FrameKind::Event;
            base_class[ti] = ev.label;
            offset_id[ti] = first_offset + view;
        }
        const int n_blur = static_cast<int>(std::lround(config.blur_fraction * seg.length));
        std::vector<int> frames(static_cast<std::size_t>(seg.length));
        std::iota(frames.begin(), frames.end(), seg.start);
        std::shuffle(frames.begin(), frames.end(), rng);
        for (int b = 0; b < n_blur; ++b) {
            const auto ti = static_cast<std::size_t>(frames[static_cast<std::size_t>(b)]);
            truth.frame_kinds[ti] = FrameKind::Blurred;
            blur_class[ti] = ev.blur_label;
        }
        truth.events.push_back(ev);
    }

    // Mimic bursts never touch an event.
    const double hours = n / config.frames_per_sec / 3600.0;
    const int bursts = std::poisson_distribution<int>(config.mimic_bursts_per_hour * hours)(rng);
    for (int b = 0; b < bursts; ++b) {
        const int len = std::min(n, uniform_int(config.mimic_burst_frames.min, config.mimic_burst_frames.max));
        const Segment s{uniform_int(0, n - len), len};
        const LabelId look = lesion_classes[static_cast<std::size_t>(uniform_int(0, static_cast<int>(lesion_classes.size()) - 1))];
        auto o = random_unit(rng, d);
        for (auto& x : o) x *= config.view_offset_norm;
        if (std::any_of(events.begin(), events.end(), [&](const Segment& e) { return overlaps(s, e, 0); })) continue;
        const int id = static_cast<int>(offsets.size());
        offsets.push_back(std::move(o));
        for (int t = s.start; t < s.start + s.length; ++t) {
            const auto ti = static_cast<std::size_t>(t);
            truth.frame_kinds[ti] = FrameKind::Mimic;
            base_class[ti] = look;
            offset_id[ti] = id;
        }
    }

    // Frames.
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<double> drift(static_cast<std::size_t>(d), 0.0);
    const double drift_sd = config.drift_norm / std::sqrt(static_cast<double>(d));
    for (auto& x : drift) x = drift_sd * n01(rng);
    const int drift_step = std::max(1, static_cast<int>(std::lround(config.drift_step_sec * config.frames_per_sec)));
    const double decay = std::exp(-config.drift_step_sec / config.drift_time_constant_sec);
    const double innovation = drift_sd * std::sqrt(1.0 - decay * decay);

    stream.frames.resize(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        if (t > 0 && t % drift_step == 0) {
            for (auto& x : drift) x = decay * x + innovation * n01(rng);
        }
        FrameRecord& f = stream.frames[ti];
        f.frame_index = t;
        f.timestamp_sec = t / config.frames_per_sec;
        f.feature.resize(static_cast<std::size_t>(d));
        const auto& proto = protos[static_cast<std::size_t>(base_class[ti])];
        const std::vector<double>* off = offset_id[ti] >= 0 ? &offsets[static_cast<std::size_t>(offset_id[ti])] : nullptr;
        for (int i = 0; i < d; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            double v = proto[ii] + drift[ii];
            if (off) v += (*off)[ii];
            if (config.sigma_vis > 0.0) v += config.sigma_vis * n01(rng);
            f.feature[ii] = static_cast<float>(v);
        }

        std::vector<double> mean;
        if (truth.frame_kinds[ti] == FrameKind::Blurred) {
            const LabelId wrong = blur_class[ti];
            const LabelId right = truth.frame_labels[ti];
            mean.assign(static_cast<std::size_t>(k), 0.0);
            mean[static_cast<std::size_t>(wrong)] = config.blur_peak;
            const double rest = (1.0 - config.blur_peak) / static_cast<double>(k - 2);
            for (int c = 0; c < k; ++c) {
                if (c != wrong && c != right) mean[static_cast<std::size_t>(c)] = rest;
            }
        } else {
            mean = confusion[static_cast<std::size_t>(truth.frame_labels[ti])];
        }
        f.lesion_dist = sample_dist(rng, mean, config.dist_concentration);
    }

    out.annotations.patient_id = stream.patient_id;
    for (const auto& ev : truth.events) {
        out.annotations.findings.push_back({taxonomy[static_cast<std::size_t>(ev.label)], ev.keyframe_timestamp_sec});
    }
    return out;
}

DiagnosticSummary baseline_frame_by_frame(const ExamStream& stream, double tau, double suppression_sec) {
    const LabelId normal = normal_label_id(stream.taxonomy);
    struct Hit {
        double score;
        std::size_t pos;
        LabelId label;
    };
    std::vector<Hit> hits;
    for (std::size_t i = 0; i < stream.frames.size(); ++i) {
        const auto& f = stream.frames[i];
        if (!f.lesion_dist) continue;
        const auto& p = *f.lesion_dist;
        LabelId best = -1;
        for (int c = 0; c < static_cast<int>(p.size()); ++c) {
            if (c == normal) continue;
            if (best < 0 || p[static_cast<std::size_t>(c)] > p[static_cast<std::size_t>(best)]) best = c;
        }
        if (best >= 0 && p[static_cast<std::size_t>(best)] >= tau) hits.push_back({p[static_cast<std::size_t>(best)], i, best});
    }
    std::stable_sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.score > b.score; });

    std::vector<const Hit*> kept;
    for (const auto& h : hits) {
        const double t = stream.frames[h.pos].timestamp_sec;
        const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Hit* k) {
            return std::abs(stream.frames[k->pos].timestamp_sec - t) <= suppression_sec;
        });
        if (!suppressed) kept.push_back(&h);
    }
    std::sort(kept.begin(), kept.end(), [](const Hit* a, const Hit* b) { return a->pos < b->pos; });

    DiagnosticSummary s;
    s.patient_id = stream.patient_id;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const auto& f = stream.frames[kept[i]->pos];
        s.entries.push_back({f.timestamp_sec, f.frame_index, stream.taxonomy[static_cast<std::size_t>(kept[i]->label)],
                             kept[i]->score, 0, static_cast<int>(i)});
    }
    return s;
}

std::vector<LabeledFeature> selector_dataset(std::span<const SyntheticExam> exams, double negatives_per_positive,
                                             std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<LabeledFeature> data;
    for (const auto& ex : exams) {
        std::vector<std::size_t> negatives;
        std::size_t positives = 0;
        for (std::size_t i = 0; i < ex.stream.frames.size(); ++i) {
            const auto kind = ex.truth.frame_kinds[i];
            if (kind == FrameKind::Event || kind == FrameKind::Blurred) {
                data.push_back({ex.stream.frames[i].feature, 1});
                ++positives;
            } else if (kind == FrameKind::Normal) {
                negatives.push_back(i);
            }
        }
        const auto want = std::min(negatives.size(),
                                   static_cast<std::size_t>(std::lround(negatives_per_positive * positives)));
        // Partial Fisher-Yates: the first `want` slots become a uniform sample.
        for (std::size_t i = 0; i < want; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, negatives.size() - 1);
            std::swap(negatives[i], negatives[pick(rng)]);
            data.push_back({ex.stream.frames[negatives[i]].feature, 0});
        }
    }
    return data;
}

namespace {

const char* kind_name(FrameKind k) {
    switch (k) {
        case FrameKind::Normal: return "normal";
        case FrameKind::Event: return "event";
        case FrameKind::Blurred: return "blurred";
        case FrameKind::Mimic: return "mimic";
    }
    return "normal";
}

FrameKind kind_from(const std::string& s, std::string_view where) {
    if (s == "normal") return FrameKind::Normal;
    if (s == "event") return FrameKind::Event;
    if (s == "blurred") return FrameKind::Blurred;
    if (s == "mimic") return FrameKind::Mimic;
    throw DataError(std::string(where) + ": unknown frame kind \"" + s + "\"");
}

}  // namespace

json truth_to_json(const GroundTruth& t) {
    json events = json::array();
    for (const auto& e : t.events) {
        events.push_back({{"label", e.label},
                          {"blur_label", e.blur_label},
                          {"first_frame", e.first_frame},
                          {"last_frame", e.last_frame},
                          {"keyframe_timestamp_sec", e.keyframe_timestamp_sec},
                          {"views", e.views}});
    }
    std::vector<int> kinds;
    kinds.reserve(t.frame_kinds.size());
    json kind_names = json::array();
    for (auto k : t.frame_kinds) kinds.push_back(static_cast<int>(k));
    for (int k = 0; k < 4; ++k) kind_names.push_back(kind_name(static_cast<FrameKind>(k)));
    return json{{"frame_labels", t.frame_labels}, {"frame_kinds", kinds}, {"kind_names", kind_names}, {"events", events}};
}

GroundTruth truth_from_json(const json& j, std::string_view source) {
    const std::string src(source);
    reject_unknown_keys(j, {"frame_labels", "frame_kinds", "kind_names", "events"}, src);
    GroundTruth t;
    try {
        t.frame_labels = j.at("frame_labels").get<std::vector<LabelId>>();
        const auto names = j.at("kind_names").get<std::vector<std::string>>();
        for (int k : j.at("frame_kinds").get<std::vector<int>>()) {
            if (k < 0 || k >= static_cast<int>(names.size())) throw DataError(src + ": frame kind out of range");
            t.frame_kinds.push_back(kind_from(names[static_cast<std::size_t>(k)], src));
        }
        for (const auto& e : j.at("events")) {
            reject_unknown_keys(e, {"label", "blur_label", "first_frame", "last_frame", "keyframe_timestamp_sec", "views"},
                                src + " event");
            t.events.push_back({e.at("label").get<LabelId>(), e.at("blur_label").get<LabelId>(),
                                e.at("first_frame").get<FrameIndex>(), e.at("last_frame").get<FrameIndex>(),
                                e.at("keyframe_timestamp_sec").get<double>(), e.at("views").get<int>()});
        }
    } catch (const json::exception& e) {
        throw DataError(src + ": malformed ground truth (" + e.what() + ")");
    }
    if (t.frame_labels.size() != t.frame_kinds.size()) throw DataError(src + ": frame_labels and frame_kinds differ in length");
    return t;
}

json sim_config_to_json(const SimConfig& c) {
    json j{{"num_frames", c.num_frames},
           {"frames_per_sec", c.frames_per_sec},
           {"num_events", c.num_events},
           {"event_duration_frames", {c.event_duration_frames.min, c.event_duration_frames.max}},
           {"min_event_gap_sec", c.min_event_gap_sec},
           {"feature_dim", c.feature_dim},
           {"prototype_seed", c.prototype_seed},
           {"sigma_vis", c.sigma_vis},
           {"drift_norm", c.drift_norm},
           {"drift_time_constant_sec", c.drift_time_constant_sec},
           {"drift_step_sec", c.drift_step_sec},
           {"confusion_noise", c.confusion_noise},
           {"dist_concentration", c.dist_concentration},
           {"blur_fraction", c.blur_fraction},
           {"blur_peak", c.blur_peak},
           {"views_per_event", {c.views_per_event.min, c.views_per_event.max}},
           {"multi_view_prob", c.multi_view_prob},
           {"view_offset_norm", c.view_offset_norm},
           {"view_run_frames", c.view_run_frames},
           {"mimic_bursts_per_hour", c.mimic_bursts_per_hour},
           {"mimic_burst_frames", {c.mimic_burst_frames.min, c.mimic_burst_frames.max}},
           {"max_event_fraction", c.max_event_fraction},
           {"balanced_labels", c.balanced_labels},
           {"label_offset", c.label_offset},
           {"seed", c.seed},
           {"patient_id", c.patient_id}};
    j["confusion"] = c.confusion ? json(*c.confusion) : json(nullptr);
    return j;
}

SimConfig sim_config_from_json(const json& j, SimConfig c) {
    try {
        reject_unknown_keys(j, {"num_frames", "frames_per_sec", "num_events", "event_duration_frames", "min_event_gap_sec",
                                "feature_dim", "prototype_seed", "sigma_vis", "drift_norm", "drift_time_constant_sec",
                                "drift_step_sec", "confusion_noise", "confusion", "dist_concentration", "blur_fraction",
                                "blur_peak", "views_per_event", "multi_view_prob", "view_offset_norm", "view_run_frames",
                                "mimic_bursts_per_hour", "mimic_burst_frames", "max_event_fraction", "balanced_labels", "label_offset",
                                "seed", "patient_id"},
                            "simulator");
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    auto range = [&](const char* key, IntRange& r) {
        if (!j.contains(key)) return;
        const auto v = j.at(key).get<std::vector<int>>();
        if (v.size() != 2) throw ConfigError(std::string("simulator.") + key + " must be [min, max]");
        r = {v[0], v[1]};
    };
    try {
        c.num_frames = j.value("num_frames", c.num_frames);
        c.frames_per_sec = j.value("frames_per_sec", c.frames_per_sec);
        c.num_events = j.value("num_events", c.num_events);
        range("event_duration_frames", c.event_duration_frames);
        c.min_event_gap_sec = j.value("min_event_gap_sec", c.min_event_gap_sec);
        c.feature_dim = j.value("feature_dim", c.feature_dim);
        c.prototype_seed = j.value("prototype_seed", c.prototype_seed);
        c.sigma_vis = j.value("sigma_vis", c.sigma_vis);
        c.drift_norm = j.value("drift_norm", c.drift_norm);
        c.drift_time_constant_sec = j.value("drift_time_constant_sec", c.drift_time_constant_sec);
        c.drift_step_sec = j.value("drift_step_sec", c.drift_step_sec);
        c.confusion_noise = j.value("confusion_noise", c.confusion_noise);
        if (j.contains("confusion") && !j.at("confusion").is_null()) {
            c.confusion = j.at("confusion").get<std::vector<std::vector<double>>>();
        }
        c.dist_concentration = j.value("dist_concentration", c.dist_concentration);
        c.blur_fraction = j.value("blur_fraction", c.blur_fraction);
        c.blur_peak = j.value("blur_peak", c.blur_peak);
        range("views_per_event", c.views_per_event);
        c.multi_view_prob = j.value("multi_view_prob", c.multi_view_prob);
        c.view_offset_norm = j.value("view_offset_norm", c.view_offset_norm);
        c.view_run_frames = j.value("view_run_frames", c.view_run_frames);
        c.mimic_bursts_per_hour = j.value("mimic_bursts_per_hour", c.mimic_bursts_per_hour);
        range("mimic_burst_frames", c.mimic_burst_frames);
        c.max_event_fraction = j.value("max_event_fraction", c.max_event_fraction);
        c.balanced_labels = j.value("balanced_labels", c.balanced_labels);
        c.label_offset = j.value("label_offset", c.label_offset);
        c.seed = j.value("seed", c.seed);
        c.patient_id = j.value("patient_id", c.patient_id);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("simulator: ") + e.what());
    }
    c.validate();
    return c;
}

}  // namespace capsum
