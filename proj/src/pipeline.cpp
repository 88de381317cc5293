#include "capsum/pipeline.hpp"

#include "capsum/error.hpp"
#include "capsum/tokenizer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <thread>

namespace capsum {

namespace {

std::mutex g_log_mutex;
std::atomic<bool> g_log_enabled{true};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string exam_name(const char* prefix, int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s-%03d", prefix, index);
    return buf;
}

}  // namespace

const char* to_string(Variant variant) {
    switch (variant) {
        case Variant::Full: return "full";
        case Variant::NoWeaver: return "no_weaver";
        case Variant::NoConverger: return "no_converger";
        case Variant::FrameByFrame: return "frame_by_frame";
    }
    return "full";
}

Variant variant_from_string(std::string_view name) {
    if (name == "full") return Variant::Full;
    if (name == "no_weaver") return Variant::NoWeaver;
    if (name == "no_converger") return Variant::NoConverger;
    if (name == "frame_by_frame") return Variant::FrameByFrame;
    throw ConfigError("unknown variant \"" + std::string(name) +
                      "\" (expected full, no_weaver, no_converger or frame_by_frame)");
}

LogLine::LogLine(std::string_view event, std::string_view level) : always_(level == "error") {
    line_ << "level=" << level << " event=" << event;
}

LogLine::~LogLine() {
    if (!always_ && !g_log_enabled.load()) return;
    const std::lock_guard lock(g_log_mutex);
    std::cerr << line_.str() << '\n';
}

LogLine& LogLine::kv(std::string_view key, std::string_view value) {
    const bool quote = value.empty() || value.find_first_of(" =\"") != std::string_view::npos;
    line_ << ' ' << key << '=';
    if (!quote) {
        line_ << value;
        return *this;
    }
    line_ << '"';
    for (char c : value) {
        if (c == '"' || c == '\\') line_ << '\\';
        line_ << c;
    }
    line_ << '"';
    return *this;
}

LogLine& LogLine::kv(std::string_view key, double value) {
    line_ << ' ' << key << '=' << std::setprecision(6) << value;
    return *this;
}

LogLine& LogLine::kv(std::string_view key, std::size_t value) {
    line_ << ' ' << key << '=' << value;
    return *this;
}

LogLine& LogLine::kv(std::string_view key, int value) {
    line_ << ' ' << key << '=' << value;
    return *this;
}

void LogLine::set_enabled(bool enabled) { g_log_enabled.store(enabled); }

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(run);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

SummarizeResult summarize(const ExamStream& stream, const SelectorHead& head, const RunConfig& config,
                          Variant variant) {
    SummarizeResult out;
    auto& st = out.stats;
    st.frames = stream.frames.size();
    const auto start = Clock::now();

    if (variant == Variant::FrameByFrame) {
        out.summary = baseline_frame_by_frame(stream, config.baseline.tau, config.baseline.suppression_sec);
        st.entries = out.summary.entries.size();
        st.total_ms = ms_since(start);
        return out;
    }

    auto t = Clock::now();
    const CandidateSet candidates = screen(stream, head, config.selector.tau_s);
    st.screen_ms = ms_since(t);
    st.candidates = candidates.size();

    t = Clock::now();
    const auto tokens = tokenize(candidates, stream, config.tokenizer);
    st.tokenize_ms = ms_since(t);

    t = Clock::now();
    if (variant == Variant::NoWeaver) {
        out.hierarchy = FixedWindowWeaver(config.ablation_window_sec).weave(tokens);
    } else {
        out.hierarchy = HierarchicalWeaver(config.weaver).weave(tokens);
    }
    st.weave_ms = ms_since(t);
    st.coarse_contexts = out.hierarchy.coarse.size();
    st.fine_contexts = out.hierarchy.fine.size();

    t = Clock::now();
    if (variant == Variant::NoConverger) {
        out.summary = converge_top_frame(out.hierarchy, stream, config.converger.tau_min);
    } else {
        auto result = converge(out.hierarchy, stream, config.converger);
        out.summary = std::move(result.summary);
        out.evidences = std::move(result.evidences);
    }
    st.converge_ms = ms_since(t);
    st.entries = out.summary.entries.size();
    st.total_ms = ms_since(start);
    return out;
}

std::vector<SyntheticExam> simulate_corpus(const RunConfig& config, bool training) {
    const int count = training ? config.corpus.train_exams : config.corpus.eval_exams;
    std::vector<SyntheticExam> exams(static_cast<std::size_t>(count));
    parallel_for(exams.size(), config.workers, [&](std::size_t i) {
        SimConfig sim = config.simulator;
        const int idx = static_cast<int>(i);
        if (training) {
            sim.num_frames = config.corpus.train_num_frames;
            sim.balanced_labels = true;
            sim.label_offset = idx * sim.num_events;
            sim.seed = train_exam_seed(config.seed, idx);
            sim.patient_id = exam_name("train", idx);
        } else {
            sim.seed = exam_seed(config.seed, idx);
            sim.patient_id = exam_name("exam", idx);
        }
        exams[i] = generate_exam(sim);
    });
    return exams;
}

SelectorTrainingResult train_selector(std::span<const SyntheticExam> exams, const RunConfig& config) {
    const auto data = selector_dataset(exams, config.selector.negatives_per_positive, config.seed);
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < data.size(); ++i) (data[i].label == 1 ? pos : neg).push_back(i);
    std::mt19937_64 rng(config.seed ^ 0x686f6c646f7574ULL);
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);

    std::vector<LabeledFeature> train, holdout;
    auto split = [&](const std::vector<std::size_t>& idx) {
        const auto n_hold = static_cast<std::size_t>(config.selector.holdout_fraction * static_cast<double>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) (k < n_hold ? holdout : train).push_back(data[idx[k]]);
    };
    split(pos);
    split(neg);
    if (train.empty()) throw DataError("selector training set is empty");

    TrainOptions opts = config.selector.train;
    opts.seed = config.seed;
    SelectorTrainingResult out;
    out.trained = train_head(train, opts);
    out.train_size = train.size();
    out.holdout_size = holdout.size();
    if (!holdout.empty()) out.holdout = evaluate_head(out.trained.head, holdout, config.selector.tau_s);
    return out;
}

ConsistencyAnalysis compare_consistency(std::span<const DiagnosticSummary> a, std::span<const DiagnosticSummary> b,
                                        const EvalParams& params, std::string name_a, std::string name_b) {
    ConsistencyAnalysis out;
    out.name_a = std::move(name_a);
    out.name_b = std::move(name_b);

    std::map<std::string, const DiagnosticSummary*> by_id;
    for (const auto& s : b) {
        if (!by_id.emplace(s.patient_id, &s).second) throw DataError("duplicate patient " + s.patient_id);
    }
    std::vector<std::pair<const DiagnosticSummary*, const DiagnosticSummary*>> pairs;
    for (const auto& s : a) {
        auto it = by_id.find(s.patient_id);
        if (it == by_id.end()) throw DataError("patient " + s.patient_id + " has no summary in the second set");
        pairs.emplace_back(&s, it->second);
        by_id.erase(it);
    }
    if (!by_id.empty()) throw DataError("patient " + by_id.begin()->first + " has no summary in the first set");

    for (double tau : params.tau_grid_sec) {
        ConsistencyAtTau row;
        row.tau_sec = tau;
        row.a = {tau, inconsistency_rate(a, tau), 0};
        row.b = {tau, inconsistency_rate(b, tau), 0};
        std::vector<double> ra, rb;
        for (const auto& [sa, sb] : pairs) {
            const auto ca = inconsistency_counts(*sa, tau);
            const auto cb = inconsistency_counts(*sb, tau);
            row.a.qualifying_pairs += ca.qualifying;
            row.b.qualifying_pairs += cb.qualifying;
            if (ca.qualifying == 0 || cb.qualifying == 0) continue;
            ra.push_back(static_cast<double>(ca.differing) / static_cast<double>(ca.qualifying));
            rb.push_back(static_cast<double>(cb.differing) / static_cast<double>(cb.qualifying));
        }
        row.paired_patients = ra.size();
        row.wilcoxon = wilcoxon_signed_rank(ra, rb);
        out.per_tau.push_back(row);
    }
    out.intervals_a = SwitchIntervalCdf(a).intervals();
    out.intervals_b = SwitchIntervalCdf(b).intervals();
    return out;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

json consistency_to_json(const ConsistencyAnalysis& c) {
    json rows = json::array();
    for (const auto& r : c.per_tau) {
        rows.push_back({{"tau_sec", r.tau_sec},
                        {"rate_a", opt(r.a.pooled_rate)},
                        {"pairs_a", r.a.qualifying_pairs},
                        {"rate_b", opt(r.b.pooled_rate)},
                        {"pairs_b", r.b.qualifying_pairs},
                        {"paired_patients", r.paired_patients},
                        {"wilcoxon",
                         {{"conclusive", r.wilcoxon.conclusive},
                          {"n_nonzero", r.wilcoxon.n_nonzero},
                          {"w_plus", r.wilcoxon.w_plus},
                          {"w_minus", r.wilcoxon.w_minus},
                          {"z", r.wilcoxon.z},
                          {"p_value", r.wilcoxon.p_value}}}});
    }
    return json{{"method_a", c.name_a},
                {"method_b", c.name_b},
                {"per_tau", rows},
                {"switch_count_a", c.intervals_a.size()},
                {"switch_count_b", c.intervals_b.size()},
                {"switch_intervals_a", c.intervals_a},
                {"switch_intervals_b", c.intervals_b}};
}

std::string inconsistency_csv(std::span<const InconsistencyAtTau> rows, const std::string& method) {
    std::string out;
    for (const auto& r : rows) {
        out += method + "," + fmt(r.tau_sec) + "," + (r.pooled_rate ? fmt(*r.pooled_rate) : "") + "," +
               std::to_string(r.qualifying_pairs) + "\n";
    }
    return out;
}

std::string switch_cdf_csv(std::span<const double> intervals, const std::string& method) {
    std::string out;
    const double n = static_cast<double>(intervals.size());
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        if (i + 1 < intervals.size() && intervals[i + 1] == intervals[i]) continue;
        out += method + "," + fmt(intervals[i]) + "," + fmt(static_cast<double>(i + 1) / n) + "\n";
    }
    return out;
}

std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir, std::string_view extension) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) throw DataError("directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == extension) files.push_back(entry.path());
    }
    if (files.empty()) throw DataError("no *" + std::string(extension) + " files in " + dir.string());
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<DiagnosticSummary> read_summaries(const std::filesystem::path& dir) {
    std::vector<DiagnosticSummary> out;
    for (const auto& p : list_files(dir, ".json")) out.push_back(summary_from_json(read_json_file(p), p.string()));
    return out;
}

std::vector<AnnotationSet> read_annotations(const std::filesystem::path& dir) {
    std::vector<AnnotationSet> out;
    for (const auto& p : list_files(dir, ".json")) out.push_back(annotations_from_json(read_json_file(p), p.string()));
    return out;
}

void cmd_simulate(const RunConfig& config) {
    const auto start = Clock::now();
    const auto exams = simulate_corpus(config, false);
    std::filesystem::create_directories(config.exam_dir());
    std::filesystem::create_directories(config.annotation_dir());
    std::filesystem::create_directories(config.truth_dir());
    parallel_for(exams.size(), config.workers, [&](std::size_t i) {
        const auto& ex = exams[i];
        const auto& id = ex.stream.patient_id;
        write_exam_file(config.exam_dir() / (id + ".jsonl"), ex.stream);
        write_json_file_atomic(config.annotation_dir() / (id + ".json"), annotations_to_json(ex.annotations));
        write_json_file_atomic(config.truth_dir() / (id + ".json"), truth_to_json(ex.truth));
        LogLine("simulate")
            .kv("patient", id)
            .kv("frames", ex.stream.frames.size())
            .kv("events", ex.truth.events.size())
            .kv("event_frames", ex.truth.event_frame_count());
    });
    LogLine("simulate_done").kv("exams", exams.size()).kv("ms", ms_since(start)).kv("dir", config.exam_dir().string());
}

void cmd_train_selector(const RunConfig& config) {
    const auto start = Clock::now();
    const auto exams = simulate_corpus(config, true);
    const auto result = train_selector(exams, config);
    write_json_file_atomic(config.head_path(), head_to_json(result.trained));
    LogLine("train_selector")
        .kv("exams", exams.size())
        .kv("train_size", result.train_size)
        .kv("holdout_size", result.holdout_size)
        .kv("final_loss", result.trained.meta.final_loss)
        .kv("holdout_f1", result.holdout.f1)
        .kv("holdout_precision", result.holdout.precision)
        .kv("holdout_recall", result.holdout.recall)
        .kv("ms", ms_since(start))
        .kv("head", config.head_path().string());
}

namespace {

void summarize_dir(const RunConfig& config, Variant variant, const std::filesystem::path& out_dir, bool dump_contexts) {
    const auto files = list_files(config.exam_dir(), ".jsonl");
    TrainedHead trained;
    if (variant != Variant::FrameByFrame) trained = head_from_json(read_json_file(config.head_path()), config.head_path().string());
    std::filesystem::create_directories(out_dir);
    const auto contexts_dir = config.out_dir() / "contexts";
    if (dump_contexts) std::filesystem::create_directories(contexts_dir);

    parallel_for(files.size(), config.workers, [&](std::size_t i) {
        const auto t_read = Clock::now();
        const ExamStream stream = read_exam_file(files[i]);
        const double read_ms = ms_since(t_read);
        const auto violations = validate_stream(stream);
        if (!violations.empty()) {
            const auto& v = violations.front();
            throw DataError(files[i].string() + ": " + std::to_string(violations.size()) + " violation(s), first: " +
                            v.rule + (v.frame_index ? " at frame " + std::to_string(*v.frame_index) : "") + ": " +
                            v.message);
        }
        const auto result = summarize(stream, trained.head, config, variant);
        const auto problems = validate_summary(result.summary);
        if (!problems.empty()) throw InvariantError("summary for " + stream.patient_id + " violates " + problems.front().rule);
        write_json_file_atomic(out_dir / (stream.patient_id + ".json"), summary_to_json(result.summary));
        if (dump_contexts) {
            write_json_file_atomic(contexts_dir / (stream.patient_id + ".json"),
                                   json{{"hierarchy", hierarchy_to_json(result.hierarchy)},
                                        {"evidence", evidences_to_json(result.evidences)}});
        }
        const auto& st = result.stats;
        LogLine("summarize")
            .kv("patient", stream.patient_id)
            .kv("variant", to_string(variant))
            .kv("frames", st.frames)
            .kv("candidates", st.candidates)
            .kv("coarse", st.coarse_contexts)
            .kv("fine", st.fine_contexts)
            .kv("entries", st.entries)
            .kv("read_ms", read_ms)
            .kv("screen_ms", st.screen_ms)
            .kv("tokenize_ms", st.tokenize_ms)
            .kv("weave_ms", st.weave_ms)
            .kv("converge_ms", st.converge_ms)
            .kv("total_ms", st.total_ms);
    });
}

}  // namespace

void cmd_summarize(const RunConfig& config, Variant variant, bool dump_contexts) {
    summarize_dir(config, variant, config.summary_dir(), dump_contexts);
}

void cmd_ablate(const RunConfig& config, Variant variant) {
    if (variant != Variant::NoWeaver && variant != Variant::NoConverger) {
        throw ConfigError("ablate expects --variant no_weaver or no_converger");
    }
    const auto dir = config.paths.summary_dir.empty()
                         ? config.out_dir() / (std::string("summaries_") + to_string(variant))
                         : std::filesystem::path(config.paths.summary_dir);
    summarize_dir(config, variant, dir, false);
}

std::string cmd_evaluate(const RunConfig& config, const std::string& method) {
    const auto summaries = read_summaries(config.summary_dir());
    const auto annotations = read_annotations(config.annotation_dir());
    const auto results = evaluate_patients(summaries, annotations, config.evaluation);
    const auto report = build_report(results, config.evaluation);
    const auto table = report_table(report, method);

    std::filesystem::create_directories(config.out_dir());
    write_json_file_atomic(config.out_dir() / "report.json", report_to_json(report));
    write_text_file_atomic(config.out_dir() / "report.txt", table);
    write_text_file_atomic(config.out_dir() / "inconsistency_vs_tau.csv",
                           "method,tau_sec,inconsistency_rate,qualifying_pairs\n" +
                               inconsistency_csv(report.inconsistency, method));
    write_text_file_atomic(config.out_dir() / "switch_cdf.csv",
                           "method,interval_sec,cdf\n" + switch_cdf_csv(report.switch_intervals, method));
    LogLine("evaluate")
        .kv("patients", report.patients)
        .kv("findings", report.findings)
        .kv("selected", report.selected)
        .kv("matched_correct", report.matched_correct)
        .kv("out_dir", config.out_dir().string());
    return table;
}

ConsistencyAnalysis cmd_consistency(const RunConfig& config, const std::filesystem::path& dir_a,
                                    const std::filesystem::path& dir_b, const std::string& name_a,
                                    const std::string& name_b) {
    const auto a = read_summaries(dir_a);
    const auto b = read_summaries(dir_b);
    auto analysis = compare_consistency(a, b, config.evaluation, name_a, name_b);

    std::vector<InconsistencyAtTau> rows_a, rows_b;
    for (const auto& r : analysis.per_tau) {
        rows_a.push_back(r.a);
        rows_b.push_back(r.b);
    }
    std::filesystem::create_directories(config.out_dir());
    write_json_file_atomic(config.out_dir() / "consistency.json", consistency_to_json(analysis));
    write_text_file_atomic(config.out_dir() / "consistency_vs_tau.csv",
                           "method,tau_sec,inconsistency_rate,qualifying_pairs\n" + inconsistency_csv(rows_a, name_a) +
                               inconsistency_csv(rows_b, name_b));
    write_text_file_atomic(config.out_dir() / "consistency_switch_cdf.csv",
                           "method,interval_sec,cdf\n" + switch_cdf_csv(analysis.intervals_a, name_a) +
                               switch_cdf_csv(analysis.intervals_b, name_b));
    for (const auto& r : analysis.per_tau) {
        LogLine("consistency")
            .kv("tau_sec", r.tau_sec)
            .kv("rate_a", r.a.pooled_rate ? fmt(*r.a.pooled_rate) : "none")
            .kv("rate_b", r.b.pooled_rate ? fmt(*r.b.pooled_rate) : "none")
            .kv("paired", r.paired_patients)
            .kv("p_value", r.wilcoxon.p_value)
            .kv("conclusive", r.wilcoxon.conclusive ? "true" : "false");
    }
    return analysis;
}

}  // namespace capsum
