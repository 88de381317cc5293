#pragma once

#include "capsum/types.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace capsum {

using json = nlohmann::json;

// Exam files are JSON Lines: one header object {patient_id, feature_dim, num_classes,
// taxonomy} followed by one FrameRecord object per line. Unknown fields are rejected.
void write_exam_jsonl(std::ostream& out, const ExamStream& stream);
ExamStream read_exam_jsonl(std::istream& in, std::string_view source = "<stream>");

std::string exam_to_jsonl(const ExamStream& stream);
ExamStream exam_from_jsonl(std::string_view text, std::string_view source = "<string>");

json label_to_json(const LesionLabel& label);
LesionLabel label_from_json(const json& j, std::string_view where);

json annotations_to_json(const AnnotationSet& annotations);
AnnotationSet annotations_from_json(const json& j, std::string_view source = "<json>");

json summary_to_json(const DiagnosticSummary& summary);
DiagnosticSummary summary_from_json(const json& j, std::string_view source = "<json>");

// Throws DataError naming `where` when `j` carries a key outside `allowed`.
void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where);

// File helpers. Reads throw DataError with the offending path; writes go to a sibling
// temporary file and are renamed into place.
std::string read_text_file(const std::filesystem::path& path);
json read_json_file(const std::filesystem::path& path);
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);
void write_json_file_atomic(const std::filesystem::path& path, const json& j);

ExamStream read_exam_file(const std::filesystem::path& path);
void write_exam_file(const std::filesystem::path& path, const ExamStream& stream);

}  // namespace capsum
