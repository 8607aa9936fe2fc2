#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bivol/types.hpp"

namespace bivol {

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& s);

// Session CSV, header required:
//   t_s,bi_ohm,se1_ohm,se2_ohm,se3_ohm,se4_ohm
// Metadata travels separately as JSON (see read/write_meta_json).
void write_session_csv(const std::filesystem::path& path,
                       const SessionRecording& rec);
std::vector<Sample> read_session_csv(const std::filesystem::path& path);

// Meta JSON keys: subject_id, context ("filling"|"voiding"),
// delta_ohm_per_ml, window_len_s, ground_truth (array of [t_s, v_ml]).
void write_meta_json(const std::filesystem::path& path, const SessionMeta& meta);
SessionMeta read_meta_json(const std::filesystem::path& path);

SessionRecording read_session(const std::filesystem::path& csv,
                              const std::filesystem::path& meta_json);

// Per-window labels CSV: header `window,label`, label codes 0-3.
void write_labels_csv(const std::filesystem::path& path,
                      const std::vector<ArtefactLabel>& labels);
std::vector<ArtefactLabel> read_labels_csv(const std::filesystem::path& path);

// Ground-truth trace CSV: header `t_s,v_ml`.
void write_trace_csv(const std::filesystem::path& path, const VolumeTrace& trace);
VolumeTrace read_trace_csv(const std::filesystem::path& path);

// Split a CSV line on commas (no quoting; none of the formats need it).
std::vector<std::string> split_csv_line(const std::string& line);

// Reads all lines, checking the exact expected header. Throws SchemaError
// on mismatch and IoFailure if the file cannot be opened.
std::vector<std::string> read_csv_body(const std::filesystem::path& path,
                                       const std::string& expected_header);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace bivol
