#include "tds/dataset_io.hpp"

#include <json.hpp>

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

namespace tds {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

Dataset assemble(std::vector<LabeledSample>& rows, std::optional<std::size_t> dim, bool labeled) {
  std::size_t d = dim.value_or(rows.empty() ? 0 : static_cast<std::size_t>(rows.front().x.size()));
  if (d == 0) throw ContractError("dataset file is empty and no dimension was given");
  if (rows.empty()) {
    PointMatrix x(0, static_cast<Eigen::Index>(d));
    return labeled ? Dataset(std::move(x), Vector(0)) : Dataset(std::move(x));
  }
  return Dataset::from_samples(d, rows);
}

Dataset read_csv(std::istream& in, const LoadOptions& options) {
  std::vector<LabeledSample> rows;
  std::optional<std::size_t> width;
  std::optional<bool> labeled = options.labeled;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_commas(line);
    if (first) {
      first = false;
      bool numeric = parse_double(fields.front()).has_value();
      if (!numeric) {
        // Header row.
        if (!labeled) labeled = fields.back() == "y";
        width = fields.size();
        continue;
      }
    }
    if (!width) width = fields.size();
    if (fields.size() != *width)
      throw ParseError(lineno, "dimension mismatch: expected " + std::to_string(*width) +
                                   " fields, found " + std::to_string(fields.size()));
    std::vector<double> values;
    values.reserve(fields.size());
    for (auto f : fields) {
      auto v = parse_double(f);
      if (!v) throw ParseError(lineno, "unparseable field '" + std::string(f) + "'");
      values.push_back(*v);
    }
    bool has_y = labeled.value_or(false);
    std::size_t d = values.size() - (has_y ? 1 : 0);
    if (d == 0) throw ParseError(lineno, "row has no feature columns");
    if (options.dim && d != *options.dim)
      throw ParseError(lineno, "dimension mismatch: expected " + std::to_string(*options.dim) +
                                   " features, found " + std::to_string(d));
    LabeledSample s;
    s.x = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(d));
    if (has_y) s.y = values.back();
    rows.push_back(std::move(s));
  }
  std::optional<std::size_t> dim = options.dim;
  if (!dim && width) dim = *width - (labeled.value_or(false) ? 1 : 0);
  return assemble(rows, dim, labeled.value_or(false));
}

Dataset read_json_lines(std::istream& in, const LoadOptions& options) {
  std::vector<LabeledSample> rows;
  std::optional<std::size_t> dim = options.dim;
  std::optional<bool> labeled;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, e.what());
    }
    if (!rec.is_object() || !rec.contains("x") || !rec["x"].is_array())
      throw ParseError(lineno, "record must be an object with an array field \"x\"");
    const auto& xs = rec["x"];
    if (!dim) dim = xs.size();
    if (xs.size() != *dim)
      throw ParseError(lineno, "dimension mismatch: expected " + std::to_string(*dim) +
                                   " features, found " + std::to_string(xs.size()));
    LabeledSample s;
    s.x.resize(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (!xs[j].is_number()) throw ParseError(lineno, "unparseable field in \"x\"");
      s.x(static_cast<Eigen::Index>(j)) = xs[j].get<double>();
    }
    bool has_y = rec.contains("y") && !rec["y"].is_null();
    if (labeled && *labeled != has_y) throw ParseError(lineno, "records mix labeled and unlabeled samples");
    labeled = has_y;
    if (has_y) {
      if (!rec["y"].is_number()) throw ParseError(lineno, "unparseable field \"y\"");
      s.y = rec["y"].get<double>();
    }
    rows.push_back(std::move(s));
  }
  return assemble(rows, dim, labeled.value_or(false));
}

}  // namespace

DatasetFormat dataset_format_from_string(const std::string& s) {
  if (s == "csv") return DatasetFormat::csv;
  if (s == "json-lines" || s == "jsonl") return DatasetFormat::json_lines;
  throw ContractError("unknown dataset format: " + s);
}

DatasetFormat dataset_format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  if (ext == ".csv") return DatasetFormat::csv;
  if (ext == ".jsonl" || ext == ".ndjson" || ext == ".json") return DatasetFormat::json_lines;
  throw ContractError("cannot infer dataset format from " + path.string());
}

Dataset read_dataset(std::istream& in, DatasetFormat format, const LoadOptions& options) {
  return format == DatasetFormat::csv ? read_csv(in, options) : read_json_lines(in, options);
}

void write_dataset(std::ostream& out, const Dataset& data, DatasetFormat format) {
  const std::size_t d = data.dim();
  if (format == DatasetFormat::csv) {
    for (std::size_t j = 0; j < d; ++j) out << (j ? "," : "") << 'x' << (j + 1);
    if (data.labeled()) out << ",y";
    out << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto row = data.features().row(static_cast<Eigen::Index>(i));
      for (std::size_t j = 0; j < d; ++j)
        out << (j ? "," : "") << format_double(row(static_cast<Eigen::Index>(j)));
      if (data.labeled()) out << ',' << format_double(data.y(i));
      out << '\n';
    }
    return;
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = data.features().row(static_cast<Eigen::Index>(i));
    out << "{\"x\":[";
    for (std::size_t j = 0; j < d; ++j)
      out << (j ? "," : "") << format_double(row(static_cast<Eigen::Index>(j)));
    out << ']';
    if (data.labeled()) out << ",\"y\":" << format_double(data.y(i));
    out << "}\n";
  }
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_dataset(in, format, options);
}

void save_dataset(const Dataset& data, const std::filesystem::path& path, DatasetFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_dataset(out, data, format);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace tds
