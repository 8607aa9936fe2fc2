#include "bivol/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bivol/errors.hpp"

namespace bivol {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first != last && *first == ' ') ++first;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw Error(ErrorCode::SchemaError, "bad number: '" + s + "'");
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::vector<std::string> read_csv_body(const std::filesystem::path& path,
                                       const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    std::string header;
    if (!std::getline(in, header))
        throw Error(ErrorCode::SchemaError, "empty file: " + path.string());
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != expected_header)
        throw Error(ErrorCode::SchemaError,
                    "bad header in " + path.string() + ": expected '" +
                        expected_header + "', got '" + header + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    out << content;
    if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

static const char* kSessionHeader = "t_s,bi_ohm,se1_ohm,se2_ohm,se3_ohm,se4_ohm";

void write_session_csv(const std::filesystem::path& path,
                       const SessionRecording& rec) {
    std::ostringstream out;
    out << kSessionHeader << '\n';
    for (const auto& s : rec.samples) {
        out << format_double(s.t) << ',' << format_double(s.bi);
        for (double v : s.se) out << ',' << format_double(v);
        out << '\n';
    }
    write_text_file(path, out.str());
}

std::vector<Sample> read_session_csv(const std::filesystem::path& path) {
    auto lines = read_csv_body(path, kSessionHeader);
    std::vector<Sample> samples;
    samples.reserve(lines.size());
    for (const auto& line : lines) {
        auto f = split_csv_line(line);
        if (f.size() != 6)
            throw Error(ErrorCode::SchemaError,
                        "expected 6 columns, got " + std::to_string(f.size()));
        Sample s;
        s.t = parse_double(f[0]);
        s.bi = parse_double(f[1]);
        for (int i = 0; i < 4; ++i) s.se[i] = parse_double(f[2 + i]);
        samples.push_back(s);
    }
    return samples;
}

void write_meta_json(const std::filesystem::path& path, const SessionMeta& meta) {
    nlohmann::json j;
    j["subject_id"] = meta.subject_id;
    j["context"] = to_string(meta.context);
    j["delta_ohm_per_ml"] = meta.delta;
    j["window_len_s"] = meta.window_len;
    if (meta.ground_truth) {
        auto arr = nlohmann::json::array();
        for (const auto& p : meta.ground_truth->points)
            arr.push_back({p.t, p.v});
        j["ground_truth"] = std::move(arr);
    }
    write_text_file(path, j.dump(2) + "\n");
}

SessionMeta read_meta_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError,
                    "bad meta JSON " + path.string() + ": " + e.what());
    }
    SessionMeta meta;
    try {
        meta.subject_id = j.at("subject_id").get<std::string>();
        meta.context = context_from_string(j.at("context").get<std::string>());
        meta.delta = j.at("delta_ohm_per_ml").get<double>();
        meta.window_len = j.at("window_len_s").get<double>();
        if (j.contains("ground_truth")) {
            VolumeTrace tr;
            for (const auto& p : j["ground_truth"])
                tr.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            meta.ground_truth = std::move(tr);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError,
                    "bad meta JSON " + path.string() + ": " + e.what());
    }
    return meta;
}

SessionRecording read_session(const std::filesystem::path& csv,
                              const std::filesystem::path& meta_json) {
    SessionRecording rec;
    rec.samples = read_session_csv(csv);
    rec.meta = read_meta_json(meta_json);
    return rec;
}

void write_labels_csv(const std::filesystem::path& path,
                      const std::vector<ArtefactLabel>& labels) {
    std::ostringstream out;
    out << "window,label\n";
    for (std::size_t i = 0; i < labels.size(); ++i)
        out << i << ',' << label_code(labels[i]) << '\n';
    write_text_file(path, out.str());
}

std::vector<ArtefactLabel> read_labels_csv(const std::filesystem::path& path) {
    auto lines = read_csv_body(path, "window,label");
    std::vector<ArtefactLabel> labels;
    labels.reserve(lines.size());
    for (const auto& line : lines) {
        auto f = split_csv_line(line);
        if (f.size() != 2)
            throw Error(ErrorCode::SchemaError, "expected 2 columns in labels CSV");
        labels.push_back(label_from_code(static_cast<int>(parse_double(f[1]))));
    }
    return labels;
}

void write_trace_csv(const std::filesystem::path& path, const VolumeTrace& trace) {
    std::ostringstream out;
    out << "t_s,v_ml\n";
    for (const auto& p : trace.points)
        out << format_double(p.t) << ',' << format_double(p.v) << '\n';
    write_text_file(path, out.str());
}

VolumeTrace read_trace_csv(const std::filesystem::path& path) {
    auto lines = read_csv_body(path, "t_s,v_ml");
    VolumeTrace tr;
    for (const auto& line : lines) {
        auto f = split_csv_line(line);
        if (f.size() != 2)
            throw Error(ErrorCode::SchemaError, "expected 2 columns in trace CSV");
        tr.points.push_back({parse_double(f[0]), parse_double(f[1])});
    }
    return tr;
}

}  // namespace bivol
