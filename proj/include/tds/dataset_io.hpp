#pragma once

#include "tds/core.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

namespace tds {

enum class DatasetFormat { csv, json_lines };

DatasetFormat dataset_format_from_string(const std::string& s);
/// Picks the format from the file extension (.csv, .jsonl/.ndjson).
DatasetFormat dataset_format_from_path(const std::filesystem::path& path);

/// Malformed dataset file; `line` is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct LoadOptions {
  /// CSV only. A header row decides labeling by its last column name ("y");
  /// without a header, the last column is a label only when this is true.
  std::optional<bool> labeled;
  /// Expected feature dimension; inferred from the first row when absent.
  std::optional<std::size_t> dim;
};

Dataset read_dataset(std::istream& in, DatasetFormat format, const LoadOptions& options = {});
void write_dataset(std::ostream& out, const Dataset& data, DatasetFormat format);

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     const LoadOptions& options = {});
void save_dataset(const Dataset& data, const std::filesystem::path& path, DatasetFormat format);

}  // namespace tds
