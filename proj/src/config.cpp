#include "capsum/config.hpp"

#include "capsum/error.hpp"

#include <fstream>
#include <sstream>

namespace capsum {

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
    try {
        reject_unknown_keys(j, allowed, where);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
}

template <typename T>
void read(const json& j, const char* key, T& out, std::string_view where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string(where) + "." + key + " has the wrong type");
    }
}

void in_unit(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::filesystem::path or_default(const std::string& configured, const std::filesystem::path& fallback) {
    return configured.empty() ? fallback : std::filesystem::path(configured);
}

}  // namespace

std::filesystem::path RunConfig::exam_dir() const { return or_default(paths.exam_dir, out_dir() / "exams"); }
std::filesystem::path RunConfig::annotation_dir() const {
    return or_default(paths.annotation_dir, out_dir() / "annotations");
}
std::filesystem::path RunConfig::head_path() const { return or_default(paths.head, out_dir() / "selector_head.json"); }
std::filesystem::path RunConfig::summary_dir() const { return or_default(paths.summary_dir, out_dir() / "summaries"); }

std::uint64_t exam_seed(std::uint64_t run_seed, int index) {
    return splitmix64(splitmix64(run_seed) + static_cast<std::uint64_t>(index));
}

std::uint64_t train_exam_seed(std::uint64_t run_seed, int index) {
    return splitmix64(splitmix64(run_seed ^ 0x5eed5eed5eed5eedULL) + static_cast<std::uint64_t>(index));
}

void RunConfig::validate() const {
    if (schema_version != kSchemaVersion) {
        throw ConfigError("schema_version " + std::to_string(schema_version) + " is not supported (expected " +
                          std::to_string(kSchemaVersion) + ")");
    }
    if (workers < 1) throw ConfigError("workers must be >= 1");
    in_unit(selector.tau_s, "selector.tau_s");
    if (selector.train.hidden_dim < 1) throw ConfigError("selector.hidden_dim must be >= 1");
    if (selector.train.epochs < 0) throw ConfigError("selector.epochs must be >= 0");
    if (!(selector.train.learning_rate > 0.0)) throw ConfigError("selector.learning_rate must be positive");
    if (!(selector.negatives_per_positive >= 0.0)) throw ConfigError("selector.negatives_per_positive must be >= 0");
    if (!(selector.holdout_fraction >= 0.0 && selector.holdout_fraction < 1.0)) {
        throw ConfigError("selector.holdout_fraction must lie in [0, 1)");
    }
    if (tokenizer.lambda_time && !(*tokenizer.lambda_time >= 0.0)) {
        throw ConfigError("tokenizer.lambda_time must be non-negative");
    }
    if (!(tokenizer.time_scale_sec > 0.0)) throw ConfigError("tokenizer.time_scale_sec must be positive");
    if (!(tokenizer.base > 1.0)) throw ConfigError("tokenizer.base must be > 1");
    weaver.validate();
    converger.validate();
    evaluation.validate();
    in_unit(baseline.tau, "baseline.tau");
    if (!(baseline.suppression_sec >= 0.0)) throw ConfigError("baseline.suppression_sec must be >= 0");
    if (!(ablation_window_sec > 0.0)) throw ConfigError("ablation.window_sec must be positive");
    if (corpus.eval_exams < 1 || corpus.train_exams < 1) throw ConfigError("corpus exam counts must be >= 1");
    simulator.validate();
    SimConfig train = simulator;
    train.num_frames = corpus.train_num_frames;
    train.validate();
    if (paths.out_dir.empty()) throw ConfigError("paths.out_dir must not be empty");
}

RunConfig config_from_json(const json& j) {
    check_keys(j, {"schema_version", "seed", "workers", "selector", "tokenizer", "weaver", "converger", "evaluation",
                   "baseline", "ablation", "corpus", "simulator", "paths"},
               "config");
    if (!j.contains("schema_version")) throw ConfigError("config: schema_version is required");
    RunConfig c;
    read(j, "schema_version", c.schema_version, "config");
    read(j, "seed", c.seed, "config");
    read(j, "workers", c.workers, "config");

    if (j.contains("selector")) {
        const auto& s = j.at("selector");
        check_keys(s, {"tau_s", "hidden_dim", "epochs", "learning_rate", "batch_size", "negatives_per_positive",
                       "holdout_fraction"},
                   "selector");
        read(s, "tau_s", c.selector.tau_s, "selector");
        read(s, "hidden_dim", c.selector.train.hidden_dim, "selector");
        read(s, "epochs", c.selector.train.epochs, "selector");
        read(s, "learning_rate", c.selector.train.learning_rate, "selector");
        read(s, "batch_size", c.selector.train.batch_size, "selector");
        read(s, "negatives_per_positive", c.selector.negatives_per_positive, "selector");
        read(s, "holdout_fraction", c.selector.holdout_fraction, "selector");
    }
    if (j.contains("tokenizer")) {
        const auto& t = j.at("tokenizer");
        check_keys(t, {"lambda_time", "time_scale_sec", "base", "position_source", "normalize_visual"}, "tokenizer");
        if (t.contains("lambda_time")) {
            const auto& l = t.at("lambda_time");
            if (l.is_null() || (l.is_string() && l.get<std::string>() == "auto")) {
                c.tokenizer.lambda_time.reset();
            } else if (l.is_number()) {
                c.tokenizer.lambda_time = l.get<double>();
            } else {
                throw ConfigError("tokenizer.lambda_time must be a number, \"auto\" or null");
            }
        }
        read(t, "time_scale_sec", c.tokenizer.time_scale_sec, "tokenizer");
        read(t, "base", c.tokenizer.base, "tokenizer");
        read(t, "normalize_visual", c.tokenizer.normalize_visual, "tokenizer");
        if (t.contains("position_source")) {
            std::string src;
            read(t, "position_source", src, "tokenizer");
            if (src == "seconds") {
                c.tokenizer.position_source = PositionSource::Seconds;
            } else if (src == "frame_index") {
                c.tokenizer.position_source = PositionSource::FrameIndex;
            } else {
                throw ConfigError("tokenizer.position_source must be \"seconds\" or \"frame_index\"");
            }
        }
    }
    if (j.contains("weaver")) {
        const auto& w = j.at("weaver");
        check_keys(w, {"sigma_coarse", "sigma_fine", "gap_max_sec"}, "weaver");
        read(w, "sigma_coarse", c.weaver.sigma_coarse, "weaver");
        read(w, "sigma_fine", c.weaver.sigma_fine, "weaver");
        read(w, "gap_max_sec", c.weaver.gap_max_sec, "weaver");
    }
    if (j.contains("converger")) {
        const auto& v = j.at("converger");
        check_keys(v, {"tau_agree", "tau_min", "medoid_metric"}, "converger");
        read(v, "tau_agree", c.converger.tau_agree, "converger");
        read(v, "tau_min", c.converger.tau_min, "converger");
        if (v.contains("medoid_metric")) {
            std::string m;
            read(v, "medoid_metric", m, "converger");
            if (m == "euclidean") {
                c.converger.medoid_metric = MedoidMetric::Euclidean;
            } else if (m == "cosine") {
                c.converger.medoid_metric = MedoidMetric::Cosine;
            } else {
                throw ConfigError("converger.medoid_metric must be \"euclidean\" or \"cosine\"");
            }
        }
    }
    if (j.contains("evaluation")) {
        const auto& e = j.at("evaluation");
        check_keys(e, {"match_window_sec", "conflict_window_sec", "tau_grid_sec"}, "evaluation");
        read(e, "match_window_sec", c.evaluation.match_window_sec, "evaluation");
        read(e, "conflict_window_sec", c.evaluation.conflict_window_sec, "evaluation");
        read(e, "tau_grid_sec", c.evaluation.tau_grid_sec, "evaluation");
    }
    if (j.contains("baseline")) {
        const auto& b = j.at("baseline");
        check_keys(b, {"tau", "suppression_sec"}, "baseline");
        read(b, "tau", c.baseline.tau, "baseline");
        read(b, "suppression_sec", c.baseline.suppression_sec, "baseline");
    }
    if (j.contains("ablation")) {
        const auto& a = j.at("ablation");
        check_keys(a, {"window_sec"}, "ablation");
        read(a, "window_sec", c.ablation_window_sec, "ablation");
    }
    if (j.contains("corpus")) {
        const auto& k = j.at("corpus");
        check_keys(k, {"eval_exams", "train_exams", "train_num_frames"}, "corpus");
        read(k, "eval_exams", c.corpus.eval_exams, "corpus");
        read(k, "train_exams", c.corpus.train_exams, "corpus");
        read(k, "train_num_frames", c.corpus.train_num_frames, "corpus");
    }
    if (j.contains("simulator")) {
        if (!j.at("simulator").is_object()) throw ConfigError("simulator must be an object");
        c.simulator = sim_config_from_json(j.at("simulator"));
    }
    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        check_keys(p, {"out_dir", "exam_dir", "annotation_dir", "head", "summary_dir"}, "paths");
        read(p, "out_dir", c.paths.out_dir, "paths");
        read(p, "exam_dir", c.paths.exam_dir, "paths");
        read(p, "annotation_dir", c.paths.annotation_dir, "paths");
        read(p, "head", c.paths.head, "paths");
        read(p, "summary_dir", c.paths.summary_dir, "paths");
    }
    c.validate();
    return c;
}

json config_to_json(const RunConfig& c) {
    json j;
    j["schema_version"] = c.schema_version;
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    j["selector"] = {{"tau_s", c.selector.tau_s},
                     {"hidden_dim", c.selector.train.hidden_dim},
                     {"epochs", c.selector.train.epochs},
                     {"learning_rate", c.selector.train.learning_rate},
                     {"batch_size", c.selector.train.batch_size},
                     {"negatives_per_positive", c.selector.negatives_per_positive},
                     {"holdout_fraction", c.selector.holdout_fraction}};
    j["tokenizer"] = {{"lambda_time", c.tokenizer.lambda_time ? json(*c.tokenizer.lambda_time) : json("auto")},
                      {"time_scale_sec", c.tokenizer.time_scale_sec},
                      {"base", c.tokenizer.base},
                      {"position_source",
                       c.tokenizer.position_source == PositionSource::Seconds ? "seconds" : "frame_index"},
                      {"normalize_visual", c.tokenizer.normalize_visual}};
    j["weaver"] = {{"sigma_coarse", c.weaver.sigma_coarse},
                   {"sigma_fine", c.weaver.sigma_fine},
                   {"gap_max_sec", c.weaver.gap_max_sec}};
    j["converger"] = {{"tau_agree", c.converger.tau_agree},
                      {"tau_min", c.converger.tau_min},
                      {"medoid_metric", c.converger.medoid_metric == MedoidMetric::Euclidean ? "euclidean" : "cosine"}};
    j["evaluation"] = {{"match_window_sec", c.evaluation.match_window_sec},
                       {"conflict_window_sec", c.evaluation.conflict_window_sec},
                       {"tau_grid_sec", c.evaluation.tau_grid_sec}};
    j["baseline"] = {{"tau", c.baseline.tau}, {"suppression_sec", c.baseline.suppression_sec}};
    j["ablation"] = {{"window_sec", c.ablation_window_sec}};
    j["corpus"] = {{"eval_exams", c.corpus.eval_exams},
                   {"train_exams", c.corpus.train_exams},
                   {"train_num_frames", c.corpus.train_num_frames}};
    j["simulator"] = sim_config_to_json(c.simulator);
    j["paths"] = {{"out_dir", c.paths.out_dir},
                  {"exam_dir", c.paths.exam_dir},
                  {"annotation_dir", c.paths.annotation_dir},
                  {"head", c.paths.head},
                  {"summary_dir", c.paths.summary_dir}};
    return j;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    json j;
    try {
        j = json::parse(buf.str(), nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

}  // namespace capsum
