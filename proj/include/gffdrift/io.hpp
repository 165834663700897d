#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace gffdrift {

// Stamped into every output file.
struct OutputMeta {
    std::string tool_version;
    std::string config_hash;
    std::uint64_t master_seed = 0;
    std::string command;
};

std::string tool_version();

// %.17g, with "nan" / "inf" / "-inf" spelled out.
std::string fmt_num(double v);

// RFC-4180 quoting for fields holding ',', '"' or line breaks.
std::string csv_field(const std::string& s);

// Leading '#' lines carry the metadata, then a header row and the data rows.
// Lines end with CRLF-free '\n'.
void write_csv(const std::string& path, const OutputMeta& meta, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Adds a "meta" object and writes with two-space indent and a trailing newline.
void write_json(const std::string& path, const OutputMeta& meta, nlohmann::json body);

nlohmann::json meta_json(const OutputMeta& meta);

}  // namespace gffdrift
