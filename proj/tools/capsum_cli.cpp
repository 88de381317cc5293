#include "capsum/config.hpp"
#include "capsum/error.hpp"
#include "capsum/pipeline.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    int workers = 0;
    bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "JSON config file (comments allowed)");
    cmd->add_option("--seed", c.seed, "Override the run seed");
    cmd->add_option("--out-dir", c.out_dir, "Override paths.out_dir");
    cmd->add_option("--workers", c.workers, "Override the worker count")->check(CLI::PositiveNumber);
    cmd->add_flag("--quiet", c.quiet, "Suppress log lines");
}

capsum::RunConfig resolve(const Common& c) {
    capsum::RunConfig cfg = c.config_path.empty() ? capsum::RunConfig{} : capsum::load_config(c.config_path);
    if (c.seed) cfg.seed = *c.seed;
    if (!c.out_dir.empty()) cfg.paths.out_dir = c.out_dir;
    if (c.workers > 0) cfg.workers = c.workers;
    capsum::LogLine::set_enabled(!c.quiet);
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"capsum: diagnosis-driven summarization of capsule endoscopy exams"};
    app.require_subcommand(1);

    Common common;
    std::string exam_dir, annotation_dir, head, summary_dir, variant = "full";
    std::string dir_a, dir_b, name_a = "full", name_b = "frame_by_frame", method = "full";
    bool dump_contexts = false;

    auto* simulate = app.add_subcommand("simulate", "Generate synthetic exams, annotations and ground truth");
    add_common(simulate, common);

    auto* train = app.add_subcommand("train-selector", "Train the screening head on a synthetic training corpus");
    add_common(train, common);
    train->add_option("--head", head, "Output head file");

    auto* summarize = app.add_subcommand("summarize", "Summarize every exam in the exam directory");
    add_common(summarize, common);
    summarize->add_option("--exam-dir", exam_dir, "Directory of *.jsonl exams");
    summarize->add_option("--head", head, "Selector head file");
    summarize->add_option("--summary-dir", summary_dir, "Output directory for summaries");
    summarize->add_option("--variant", variant, "full, no_weaver, no_converger or frame_by_frame");
    summarize->add_flag("--dump-contexts", dump_contexts, "Also write context hierarchies and evidence");

    auto* evaluate = app.add_subcommand("evaluate", "Score summaries against annotations");
    add_common(evaluate, common);
    evaluate->add_option("--summary-dir", summary_dir, "Directory of summaries");
    evaluate->add_option("--annotation-dir", annotation_dir, "Directory of annotations");
    evaluate->add_option("--method", method, "Method name for the table and CSV series");

    auto* consistency = app.add_subcommand("consistency", "Compare label consistency of two summary sets");
    add_common(consistency, common);
    consistency->add_option("--a", dir_a, "First summary directory")->required();
    consistency->add_option("--b", dir_b, "Second summary directory")->required();
    consistency->add_option("--name-a", name_a, "Name of the first method");
    consistency->add_option("--name-b", name_b, "Name of the second method");

    auto* ablate = app.add_subcommand("ablate", "Summarize with the weaver or the converger replaced");
    add_common(ablate, common);
    ablate->add_option("--exam-dir", exam_dir, "Directory of *.jsonl exams");
    ablate->add_option("--head", head, "Selector head file");
    ablate->add_option("--summary-dir", summary_dir, "Output directory for summaries");
    ablate->add_option("--variant", variant, "no_weaver or no_converger")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        capsum::RunConfig cfg = resolve(common);
        if (!exam_dir.empty()) cfg.paths.exam_dir = exam_dir;
        if (!annotation_dir.empty()) cfg.paths.annotation_dir = annotation_dir;
        if (!head.empty()) cfg.paths.head = head;
        if (!summary_dir.empty()) cfg.paths.summary_dir = summary_dir;

        if (*simulate) {
            capsum::cmd_simulate(cfg);
        } else if (*train) {
            capsum::cmd_train_selector(cfg);
        } else if (*summarize) {
            capsum::cmd_summarize(cfg, capsum::variant_from_string(variant), dump_contexts);
        } else if (*evaluate) {
            std::cout << capsum::cmd_evaluate(cfg, method);
        } else if (*consistency) {
            const auto analysis = capsum::cmd_consistency(cfg, dir_a, dir_b, name_a, name_b);
            for (const auto& r : analysis.per_tau) {
                std::cout << "tau=" << r.tau_sec << "s " << name_a << "="
                          << (r.a.pooled_rate ? std::to_string(*r.a.pooled_rate) : "n/a") << " " << name_b << "="
                          << (r.b.pooled_rate ? std::to_string(*r.b.pooled_rate) : "n/a")
                          << " p=" << r.wilcoxon.p_value << (r.wilcoxon.conclusive ? "" : " (inconclusive)") << "\n";
            }
            std::cout << "switches " << name_a << "=" << analysis.intervals_a.size() << " " << name_b << "="
                      << analysis.intervals_b.size() << "\n";
        } else if (*ablate) {
            capsum::cmd_ablate(cfg, capsum::variant_from_string(variant));
        }
    } catch (const capsum::ConfigError& e) {
        capsum::LogLine("error", "error").kv("kind", "config").kv("message", e.what());
        return 2;
    } catch (const capsum::DataError& e) {
        capsum::LogLine("error", "error").kv("kind", "data").kv("message", e.what());
        return 3;
    } catch (const capsum::TrainingError& e) {
        capsum::LogLine("error", "error").kv("kind", "training").kv("epoch", e.epoch()).kv("message", e.what());
        return 3;
    } catch (const capsum::InvariantError& e) {
        capsum::LogLine("error", "error").kv("kind", "invariant").kv("message", e.what());
        return 4;
    } catch (const std::exception& e) {
        capsum::LogLine("error", "error").kv("kind", "internal").kv("message", e.what());
        return 4;
    }
    return 0;
}
