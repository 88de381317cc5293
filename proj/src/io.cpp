#include "capsum/io.hpp"

#include "capsum/error.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <system_error>

namespace capsum {

namespace fs = std::filesystem;

void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!j.is_object()) throw DataError(std::string(where) + ": expected a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok |= (key == a);
        if (!ok) throw DataError(std::string(where) + ": unknown field \"" + key + "\"");
    }
}

namespace {

template <typename T>
T require(const json& j, const char* key, std::string_view where) {
    auto it = j.find(key);
    if (it == j.end()) throw DataError(std::string(where) + ": missing field \"" + key + "\"");
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw DataError(std::string(where) + ": field \"" + key + "\" has the wrong type (" + e.what() + ")");
    }
}

void append_number(std::string& out, double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw InvariantError("to_chars failed");
    out.append(buf, ptr);
}

void append_number(std::string& out, float v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw InvariantError("to_chars failed");
    out.append(buf, ptr);
}

std::string frame_line(const FrameRecord& f) {
    std::string line;
    line.reserve(16 + f.feature.size() * 12);
    line += "{\"frame_index\":";
    line += std::to_string(f.frame_index);
    line += ",\"timestamp_sec\":";
    append_number(line, f.timestamp_sec);
    line += ",\"feature\":[";
    for (std::size_t i = 0; i < f.feature.size(); ++i) {
        if (i) line += ',';
        append_number(line, f.feature[i]);
    }
    line += ']';
    if (f.lesion_dist) {
        line += ",\"lesion_dist\":[";
        for (std::size_t i = 0; i < f.lesion_dist->size(); ++i) {
            if (i) line += ',';
            append_number(line, (*f.lesion_dist)[i]);
        }
        line += ']';
    }
    if (f.selector_score) {
        line += ",\"selector_score\":";
        append_number(line, *f.selector_score);
    }
    line += '}';
    return line;
}

json header_to_json(const ExamStream& s) {
    json tax = json::array();
    for (const auto& l : s.taxonomy) tax.push_back(label_to_json(l));
    return json{{"patient_id", s.patient_id},
                {"feature_dim", s.feature_dim},
                {"num_classes", s.num_classes},
                {"taxonomy", std::move(tax)}};
}

FrameRecord frame_from_json(const json& j, std::string_view where) {
    reject_unknown_keys(j, {"frame_index", "timestamp_sec", "feature", "lesion_dist", "selector_score"}, where);
    FrameRecord f;
    f.frame_index = require<FrameIndex>(j, "frame_index", where);
    f.timestamp_sec = require<double>(j, "timestamp_sec", where);
    const auto& feat = j.at("feature");
    if (!feat.is_array()) throw DataError(std::string(where) + ": \"feature\" must be an array");
    f.feature.reserve(feat.size());
    for (const auto& v : feat) {
        if (!v.is_number()) throw DataError(std::string(where) + ": non-numeric feature value");
        f.feature.push_back(static_cast<float>(v.get<double>()));
    }
    if (auto it = j.find("lesion_dist"); it != j.end() && !it->is_null()) {
        try {
            f.lesion_dist = it->get<std::vector<double>>();
        } catch (const json::exception&) {
            throw DataError(std::string(where) + ": \"lesion_dist\" must be an array of numbers");
        }
    }
    if (auto it = j.find("selector_score"); it != j.end() && !it->is_null()) {
        if (!it->is_number()) throw DataError(std::string(where) + ": \"selector_score\" must be a number");
        f.selector_score = it->get<double>();
    }
    return f;
}

// Parser for the exact layout frame_line writes. Returns false on anything else so
// the caller can fall back to the general JSON path and its error messages.
class FrameLineScanner {
public:
    explicit FrameLineScanner(std::string_view s) : s_(s) {}

    bool parse(FrameRecord& f) {
        if (!literal("{\"frame_index\":") || !integer(f.frame_index)) return false;
        if (!literal(",\"timestamp_sec\":") || !number(f.timestamp_sec)) return false;
        if (!literal(",\"feature\":[")) return false;
        f.feature.clear();
        if (!array([&](double v) { f.feature.push_back(static_cast<float>(v)); })) return false;
        if (literal(",\"lesion_dist\":[")) {
            f.lesion_dist.emplace();
            if (!array([&](double v) { f.lesion_dist->push_back(v); })) return false;
        }
        if (literal(",\"selector_score\":")) {
            double v = 0.0;
            if (!number(v)) return false;
            f.selector_score = v;
        }
        if (!literal("}")) return false;
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\r' || s_[pos_] == '\t')) ++pos_;
        return pos_ == s_.size();
    }

private:
    bool literal(std::string_view lit) {
        if (s_.substr(pos_, lit.size()) != lit) return false;
        pos_ += lit.size();
        return true;
    }

    // JSON number token: optional minus, then a digit; no leading plus, inf or nan.
    bool token(std::size_t& end) {
        end = pos_;
        if (end < s_.size() && s_[end] == '-') ++end;
        if (end >= s_.size() || s_[end] < '0' || s_[end] > '9') return false;
        while (end < s_.size()) {
            const char c = s_[end];
            if ((c >= '0' && c <= '9') || c == '.' || c == 'e' || c == 'E' || c == '+' || c == '-') {
                ++end;
            } else {
                break;
            }
        }
        return true;
    }

    bool number(double& out) {
        std::size_t end = 0;
        if (!token(end)) return false;
        const auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + end, out);
        if (ec != std::errc{} || ptr != s_.data() + end) return false;
        pos_ = end;
        return true;
    }

    bool integer(FrameIndex& out) {
        std::size_t end = 0;
        if (!token(end)) return false;
        const auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + end, out);
        if (ec != std::errc{} || ptr != s_.data() + end) return false;
        pos_ = end;
        return true;
    }

    template <typename Push>
    bool array(Push push) {
        if (literal("]")) return true;
        for (;;) {
            double v = 0.0;
            if (!number(v)) return false;
            push(v);
            if (literal("]")) return true;
            if (!literal(",")) return false;
        }
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

json parse_json(std::string_view text, const std::string& where) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(where + ": invalid JSON (" + e.what() + ")");
    }
}

}  // namespace

json label_to_json(const LesionLabel& label) {
    return json{{"id", label.id}, {"name", label.name}, {"is_normal", label.is_normal}};
}

LesionLabel label_from_json(const json& j, std::string_view where) {
    reject_unknown_keys(j, {"id", "name", "is_normal"}, where);
    LesionLabel l;
    l.id = require<LabelId>(j, "id", where);
    l.name = require<std::string>(j, "name", where);
    l.is_normal = j.contains("is_normal") ? require<bool>(j, "is_normal", where) : false;
    return l;
}

void write_exam_jsonl(std::ostream& out, const ExamStream& stream) {
    out << header_to_json(stream).dump() << '\n';
    for (const auto& f : stream.frames) out << frame_line(f) << '\n';
}

ExamStream read_exam_jsonl(std::istream& in, std::string_view source) {
    const std::string src(source);
    std::string line;
    std::size_t line_no = 0;
    ExamStream s;
    s.frames.clear();
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (have_header) {
            FrameRecord f;
            if (FrameLineScanner(line).parse(f)) {
                s.frames.push_back(std::move(f));
                continue;
            }
        }
        const std::string where = src + ":" + std::to_string(line_no);
        json j = parse_json(line, where);
        if (!have_header) {
            reject_unknown_keys(j, {"patient_id", "feature_dim", "num_classes", "taxonomy"}, where);
            s.patient_id = require<std::string>(j, "patient_id", where);
            s.feature_dim = require<int>(j, "feature_dim", where);
            s.num_classes = require<int>(j, "num_classes", where);
            const auto& tax = j.at("taxonomy");
            if (!tax.is_array()) throw DataError(where + ": \"taxonomy\" must be an array");
            s.taxonomy.clear();
            for (std::size_t i = 0; i < tax.size(); ++i) {
                s.taxonomy.push_back(label_from_json(tax[i], where + " taxonomy[" + std::to_string(i) + "]"));
            }
            have_header = true;
            continue;
        }
        s.frames.push_back(frame_from_json(j, where));
    }
    if (!have_header) throw DataError(src + ": missing header line");
    return s;
}

std::string exam_to_jsonl(const ExamStream& stream) {
    std::ostringstream out;
    write_exam_jsonl(out, stream);
    return std::move(out).str();
}

ExamStream exam_from_jsonl(std::string_view text, std::string_view source) {
    std::istringstream in{std::string(text)};
    return read_exam_jsonl(in, source);
}

json annotations_to_json(const AnnotationSet& a) {
    json findings = json::array();
    for (const auto& f : a.findings) {
        findings.push_back({{"label", label_to_json(f.label)}, {"keyframe_timestamp_sec", f.keyframe_timestamp_sec}});
    }
    return json{{"patient_id", a.patient_id}, {"findings", std::move(findings)}};
}

AnnotationSet annotations_from_json(const json& j, std::string_view source) {
    const std::string src(source);
    reject_unknown_keys(j, {"patient_id", "findings"}, src);
    AnnotationSet a;
    a.patient_id = require<std::string>(j, "patient_id", src);
    const auto& findings = j.at("findings");
    if (!findings.is_array()) throw DataError(src + ": \"findings\" must be an array");
    for (std::size_t i = 0; i < findings.size(); ++i) {
        const std::string where = src + " findings[" + std::to_string(i) + "]";
        reject_unknown_keys(findings[i], {"label", "keyframe_timestamp_sec"}, where);
        Finding f;
        f.label = label_from_json(findings[i].at("label"), where + ".label");
        f.keyframe_timestamp_sec = require<double>(findings[i], "keyframe_timestamp_sec", where);
        a.findings.push_back(std::move(f));
    }
    return a;
}

json summary_to_json(const DiagnosticSummary& s) {
    json entries = json::array();
    for (const auto& e : s.entries) {
        entries.push_back({{"timestamp_sec", e.timestamp_sec},
                           {"frame_index", e.frame_index},
                           {"label", label_to_json(e.label)},
                           {"confidence", e.confidence},
                           {"coarse_id", e.coarse_id},
                           {"fine_id", e.fine_id}});
    }
    return json{{"patient_id", s.patient_id}, {"entries", std::move(entries)}};
}

DiagnosticSummary summary_from_json(const json& j, std::string_view source) {
    const std::string src(source);
    reject_unknown_keys(j, {"patient_id", "entries"}, src);
    DiagnosticSummary s;
    s.patient_id = require<std::string>(j, "patient_id", src);
    const auto& entries = j.at("entries");
    if (!entries.is_array()) throw DataError(src + ": \"entries\" must be an array");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const std::string where = src + " entries[" + std::to_string(i) + "]";
        const auto& e = entries[i];
        reject_unknown_keys(e, {"timestamp_sec", "frame_index", "label", "confidence", "coarse_id", "fine_id"}, where);
        SummaryEntry out;
        out.timestamp_sec = require<double>(e, "timestamp_sec", where);
        out.frame_index = require<FrameIndex>(e, "frame_index", where);
        out.label = label_from_json(e.at("label"), where + ".label");
        out.confidence = require<double>(e, "confidence", where);
        out.coarse_id = require<int>(e, "coarse_id", where);
        out.fine_id = require<int>(e, "fine_id", where);
        s.entries.push_back(std::move(out));
    }
    return s;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path.string() + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

json read_json_file(const fs::path& path) {
    return parse_json(read_text_file(path), path.string());
}

void write_text_file_atomic(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError(tmp.string() + ": cannot open for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw DataError(tmp.string() + ": write failed");
    }
    fs::rename(tmp, path);
}

void write_json_file_atomic(const fs::path& path, const json& j) {
    write_text_file_atomic(path, j.dump(2) + "\n");
}

ExamStream read_exam_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path.string() + ": cannot open file");
    return read_exam_jsonl(in, path.string());
}

void write_exam_file(const fs::path& path, const ExamStream& stream) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError(tmp.string() + ": cannot open for writing");
        write_exam_jsonl(out, stream);
        if (!out) throw DataError(tmp.string() + ": write failed");
    }
    fs::rename(tmp, path);
}

}  // namespace capsum
