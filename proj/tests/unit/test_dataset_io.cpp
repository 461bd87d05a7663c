#include "tds/dataset_io.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace tds;

namespace {

Dataset sample_data(bool labeled) {
  PointMatrix x(3, 2);
  x << 0.1, -2.5, 1e-300, 3.0, 1.0 / 3.0, 7.25;
  Vector y(3);
  y << 0.7, -1.0, 1.0 / 7.0;
  return labeled ? Dataset(x, y) : Dataset(x);
}

Dataset round_trip(const Dataset& d, DatasetFormat f) {
  std::stringstream s;
  write_dataset(s, d, f);
  return read_dataset(s, f);
}

}  // namespace

TEST(DatasetIo, CsvRoundTripIsExact) {
  EXPECT_EQ(round_trip(sample_data(true), DatasetFormat::csv), sample_data(true));
  EXPECT_EQ(round_trip(sample_data(false), DatasetFormat::csv), sample_data(false));
}

TEST(DatasetIo, JsonLinesRoundTripIsExact) {
  EXPECT_EQ(round_trip(sample_data(true), DatasetFormat::json_lines), sample_data(true));
  EXPECT_EQ(round_trip(sample_data(false), DatasetFormat::json_lines), sample_data(false));
}

TEST(DatasetIo, HeaderlessCsvNeedsLabelHint) {
  std::stringstream a("1,2,3\n4,5,6\n");
  Dataset unlabeled = read_dataset(a, DatasetFormat::csv);
  EXPECT_EQ(unlabeled.dim(), 3u);
  EXPECT_FALSE(unlabeled.labeled());
  std::stringstream b("1,2,3\n4,5,6\n");
  Dataset labeled = read_dataset(b, DatasetFormat::csv, LoadOptions{true, std::nullopt});
  EXPECT_EQ(labeled.dim(), 2u);
  EXPECT_DOUBLE_EQ(labeled.y(1), 6.0);
}

TEST(DatasetIo, MalformedRowsReportLine) {
  std::stringstream s("x1,x2\n1,2\n3,abc\n");
  try {
    read_dataset(s, DatasetFormat::csv);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::stringstream ragged("1,2\n3\n");
  EXPECT_THROW(read_dataset(ragged, DatasetFormat::csv), ParseError);
  std::stringstream j("{\"x\":[1,2]}\n{\"x\":[1]}\n");
  EXPECT_THROW(read_dataset(j, DatasetFormat::json_lines), ParseError);
}

TEST(DatasetIo, FormatFromPath) {
  EXPECT_EQ(dataset_format_from_path("a/b.csv"), DatasetFormat::csv);
  EXPECT_EQ(dataset_format_from_path("a/b.jsonl"), DatasetFormat::json_lines);
  EXPECT_THROW(dataset_format_from_path("a/b.txt"), ContractError);
}
