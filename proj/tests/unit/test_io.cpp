#include <sstream>

#include <gtest/gtest.h>

#include "llfilter/error.hpp"
#include "llfilter/io.hpp"

using namespace llf;

TEST(Stepsize, Format) {
  EXPECT_EQ(format_stepsize(1.0 / 64), "1/64");
  EXPECT_EQ(format_stepsize(1.0 / 3), "1/3");
  EXPECT_EQ(format_stepsize(1.0), "1");
  EXPECT_EQ(format_stepsize(0.3), "0.29999999999999999");
  EXPECT_EQ(format_stepsize(2.5), "2.5");
}

TEST(Stepsize, Parse) {
  EXPECT_EQ(parse_stepsize("1/64"), 1.0 / 64);
  EXPECT_EQ(parse_stepsize("0.25"), 0.25);
  EXPECT_EQ(parse_stepsize(" 1/1000 "), 1.0 / 1000);
  EXPECT_EQ(parse_stepsize("3/4"), 0.75);
  for (const char* bad : {"", "abc", "1/0", "-1", "0", "1/", "/2", "1/2/3",
                          "0.5x"}) {
    EXPECT_THROW(parse_stepsize(bad), ConfigError) << bad;
  }
}

TEST(Stepsize, List) {
  const auto v = parse_stepsize_list("1/16,1/32, 0.5");
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[1], 1.0 / 32);
  EXPECT_EQ(v[2], 0.5);
  EXPECT_THROW(parse_stepsize_list(""), ConfigError);
  EXPECT_THROW(parse_stepsize_list("1/16,,1/32"), ConfigError);
}

TEST(Csv, FormatDoubleRoundTrips) {
  for (double x : {0.1, 1.0 / 3, -2.5e-300, 6.02214076e23, 0.0}) {
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
}

TEST(Csv, WriteAndRead) {
  std::stringstream ss;
  CsvWriter w(ss);
  w.row({"a", "b", "c"});
  w.row({"1", "2", ""});
  w.row({"", "x", "3"});
  const CsvTable t = read_csv(ss);
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b", "c"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0], (std::vector<std::string>{"1", "2", ""}));
  EXPECT_EQ(t.rows[1][0], "");
  EXPECT_EQ(t.column("c"), 2u);
  EXPECT_THROW(t.column("d"), ConfigError);
}
