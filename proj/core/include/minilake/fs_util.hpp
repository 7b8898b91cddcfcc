#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

namespace minilake {

// Whole-file read. Throws StorageIo if the file cannot be read.
std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file, fsyncs, then renames over the target.
// rename(2) makes the replacement atomic for readers on the same filesystem.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file_atomic(const std::filesystem::path& path,
                            const nlohmann::json& value);

}  // namespace minilake
