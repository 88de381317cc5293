#include "capsum/error.hpp"
#include "capsum/io.hpp"
#include "capsum/pipeline.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace capsum;

namespace {

RunConfig config_of(const std::string& text) { return config_from_json(json::parse(text)); }

std::string summarize_exam(const std::string& exam_jsonl, const std::string& head_json, const std::string& config_json,
                           const std::string& variant) {
    const auto config = config_of(config_json);
    const auto stream = exam_from_jsonl(exam_jsonl);
    const auto head = head_from_json(json::parse(head_json)).head;
    py::gil_scoped_release release;
    return summary_to_json(summarize(stream, head, config, variant_from_string(variant)).summary).dump();
}

std::string evaluate_summaries(const std::vector<std::string>& summaries, const std::vector<std::string>& annotations,
                               const std::string& config_json) {
    const auto config = config_of(config_json);
    std::vector<DiagnosticSummary> s;
    std::vector<AnnotationSet> a;
    for (const auto& x : summaries) s.push_back(summary_from_json(json::parse(x)));
    for (const auto& x : annotations) a.push_back(annotations_from_json(json::parse(x)));
    const auto results = evaluate_patients(s, a, config.evaluation);
    return report_to_json(build_report(results, config.evaluation)).dump();
}

py::tuple generate(const std::string& sim_json) {
    const auto ex = generate_exam(sim_config_from_json(json::parse(sim_json)));
    return py::make_tuple(exam_to_jsonl(ex.stream), annotations_to_json(ex.annotations).dump(),
                          truth_to_json(ex.truth).dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Capsule-endoscopy summarization pipeline";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);
    py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);
    py::register_exception<json::exception>(m, "JsonError", PyExc_ValueError);

    m.def("default_config", [] { return config_to_json(RunConfig{}).dump(); });
    m.def("load_config", [](const std::string& path) { return config_to_json(load_config(path)).dump(); }, py::arg("path"));
    m.def("normalize_config", [](const std::string& text) { return config_to_json(config_of(text)).dump(); },
          py::arg("config_json"));

    m.def("simulate", [](const std::string& cfg) {
        const auto c = config_of(cfg);
        py::gil_scoped_release release;
        cmd_simulate(c);
    }, py::arg("config_json"));
    m.def("train_selector", [](const std::string& cfg) {
        const auto c = config_of(cfg);
        py::gil_scoped_release release;
        cmd_train_selector(c);
    }, py::arg("config_json"));
    m.def("summarize", [](const std::string& cfg, const std::string& variant, bool dump_contexts) {
        const auto c = config_of(cfg);
        const auto v = variant_from_string(variant);
        py::gil_scoped_release release;
        cmd_summarize(c, v, dump_contexts);
    }, py::arg("config_json"), py::arg("variant") = "full", py::arg("dump_contexts") = false);
    m.def("ablate", [](const std::string& cfg, const std::string& variant) {
        const auto c = config_of(cfg);
        const auto v = variant_from_string(variant);
        py::gil_scoped_release release;
        cmd_ablate(c, v);
    }, py::arg("config_json"), py::arg("variant"));
    m.def("evaluate", [](const std::string& cfg, const std::string& method) {
        const auto c = config_of(cfg);
        py::gil_scoped_release release;
        return cmd_evaluate(c, method);
    }, py::arg("config_json"), py::arg("method") = "full");
    m.def("consistency", [](const std::string& cfg, const std::string& dir_a, const std::string& dir_b,
                            const std::string& name_a, const std::string& name_b) {
        const auto c = config_of(cfg);
        py::gil_scoped_release release;
        return consistency_to_json(cmd_consistency(c, dir_a, dir_b, name_a, name_b)).dump();
    }, py::arg("config_json"), py::arg("dir_a"), py::arg("dir_b"), py::arg("name_a") = "a", py::arg("name_b") = "b");

    m.def("generate_exam", &generate, py::arg("sim_config_json"),
          "Returns (exam JSONL, annotations JSON, ground truth JSON).");
    m.def("summarize_exam", &summarize_exam, py::arg("exam_jsonl"), py::arg("head_json"), py::arg("config_json"),
          py::arg("variant") = "full");
    m.def("evaluate_summaries", &evaluate_summaries, py::arg("summaries"), py::arg("annotations"), py::arg("config_json"));
    m.def("set_logging", &LogLine::set_enabled, py::arg("enabled"));
}
