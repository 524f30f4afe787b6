#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace iprar::io {

using ordered_json = nlohmann::ordered_json;

/// Reads a whole file as bytes. Throws IoError if unreadable.
std::string read_file(const std::filesystem::path& path);

/// Writes bytes exactly as given (no newline added). Creates parent dirs.
void write_file(const std::filesystem::path& path, std::string_view content);

/// Parses one JSON object per non-empty line. Throws IoError with the line
/// number on malformed lines.
std::vector<ordered_json> read_jsonl(const std::filesystem::path& path);

/// Serializes one compact JSON document per line.
void write_jsonl(const std::filesystem::path& path, const std::vector<ordered_json>& rows);

}  // namespace iprar::io
