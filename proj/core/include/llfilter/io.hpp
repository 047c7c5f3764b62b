#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace llf {

// Shortest round-trip decimal form ("%.17g").
std::string format_double(double x);

// "1/64" for reciprocals of integers, format_double otherwise.
std::string format_stepsize(double h);
// Accepts decimals ("0.25") and rationals ("1/64"); throws ConfigError.
double parse_stepsize(const std::string& text);
// Comma-separated list of stepsizes.
std::vector<double> parse_stepsize_list(const std::string& text);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& os_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; throws ConfigError if absent.
  std::size_t column(const std::string& name) const;
};

// Minimal reader for the unquoted numeric CSVs this library writes.
CsvTable read_csv(std::istream& is);

}  // namespace llf
