#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mosanet {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

/// Minimal CSV writer; quotes cells containing separators or quotes.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}
  void add_row(std::vector<std::string> row);
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Reads a CSV written by CsvWriter (header row included as row 0).
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

/// Writes `contents` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace mosanet
