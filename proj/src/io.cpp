#include "gffdrift/io.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace gffdrift {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    return out;
}

}  // namespace

std::string tool_version() { return GFFDRIFT_VERSION; }

std::string fmt_num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{:.17g}", v);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    q += '"';
    return q;
}

nlohmann::json meta_json(const OutputMeta& meta) {
    return {{"tool_version", meta.tool_version},
            {"config_hash", meta.config_hash},
            {"master_seed", meta.master_seed},
            {"command", meta.command}};
}

void write_csv(const std::string& path, const OutputMeta& meta, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    auto out = open_out(path);
    out << "# gffdrift " << meta.tool_version << '\n'
        << "# command " << meta.command << '\n'
        << "# config_hash " << meta.config_hash << '\n'
        << "# master_seed " << meta.master_seed << '\n';
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            out << csv_field(cells[i]);
        }
        out << '\n';
    };
    line(header);
    for (const auto& r : rows) {
        if (r.size() != header.size()) throw std::logic_error("write_csv: row width differs from header");
        line(r);
    }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

void write_json(const std::string& path, const OutputMeta& meta, nlohmann::json body) {
    body["meta"] = meta_json(meta);
    auto out = open_out(path);
    out << body.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace gffdrift
