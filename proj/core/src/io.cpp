#include "llfilter/io.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include "llfilter/error.hpp"

namespace llf {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os_ << ',';
    os_ << fields[i];
  }
  os_ << '\n';
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ConfigError("CSV has no column '" + name + "'");
}

std::string format_stepsize(double h) {
  if (h > 0.0) {
    const double inv = 1.0 / h;
    const double n = std::round(inv);
    if (n >= 1.0 && std::abs(inv - n) <= 1e-9 * n && 1.0 / n == h) {
      return n == 1.0 ? "1" : "1/" + std::to_string(static_cast<long>(n));
    }
  }
  return format_double(h);
}

double parse_stepsize(const std::string& raw) {
  const std::size_t first = raw.find_first_not_of(" \t");
  const std::string text =
      first == std::string::npos
          ? std::string()
          : raw.substr(first, raw.find_last_not_of(" \t") - first + 1);
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) {
      throw ConfigError("invalid stepsize '" + text + "'");
    }
    return v;
  };
  const std::size_t slash = text.find('/');
  const double h = slash == std::string::npos
                       ? number(text)
                       : number(text.substr(0, slash)) /
                             number(text.substr(slash + 1));
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw ConfigError("stepsize '" + text + "' must be positive and finite");
  }
  return h;
}

std::vector<double> parse_stepsize_list(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = text.find(',', start);
    out.push_back(parse_stepsize(text.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

CsvTable read_csv(std::istream& is) {
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != table.header.size()) {
        throw ConfigError("CSV row has " + std::to_string(fields.size()) +
                          " fields, header has " +
                          std::to_string(table.header.size()));
      }
      table.rows.push_back(std::move(fields));
    }
  }
  return table;
}

}  // namespace llf
