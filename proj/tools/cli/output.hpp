#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace spinbus::cli {

/// 12 significant digits, '.' decimal point, independent of the C locale.
std::string format_number(double value);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

/// 16 lowercase hex digits.
std::string hex(std::uint64_t value);

/// Comma-separated table built in memory and written in one go.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_row(const std::vector<double>& values);
  std::string str() const;

 private:
  std::size_t columns_;
  std::string text_;
};

/// Writes `content` to `path`, replacing any existing file.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace spinbus::cli
