#pragma once

// Shared test scaffolding: throwaway directories, terse table builders,
// and a fixed clock so commit ids are reproducible.

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "minilake/catalog.hpp"
#include "minilake/table.hpp"

namespace testutil {

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    for (int i = 0; i < 32; ++i) {
      auto candidate = std::filesystem::temp_directory_path() /
                       ("minilake-test-" + std::to_string(rd()));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("could not create temp dir");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const {
    return path_ / rel;
  }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& file,
                       const std::string& content) {
  std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

inline minilake::CellValue N() { return std::monostate{}; }
inline minilake::CellValue I(int64_t v) { return v; }
inline minilake::CellValue D(double v) { return v; }
inline minilake::CellValue S(std::string v) { return v; }
inline minilake::CellValue B(bool v) { return v; }

inline minilake::Table make_table(
    minilake::Schema schema,
    const std::vector<std::vector<minilake::CellValue>>& rows) {
  minilake::Table t = minilake::Table::empty(std::move(schema));
  for (const auto& row : rows) t.append_row(row);
  t.validate();
  return t;
}

inline minilake::Clock fixed_clock(int64_t t = 1700000000) {
  return [t] { return t; };
}

/// Strictly increasing clock: each commit gets a distinct timestamp.
inline minilake::Clock ticking_clock(int64_t start = 1700000000) {
  auto next = std::make_shared<int64_t>(start);
  return [next] { return (*next)++; };
}

}  // namespace testutil
