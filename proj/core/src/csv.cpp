#include "predcal/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <utility>

namespace predcal {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

[[noreturn]] void fail(const std::string& source, const std::string& msg) {
  throw ValidationError(source + ": " + msg);
}

}  // namespace

std::int64_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<std::int64_t>(i);
  return -1;
}

std::int64_t CsvTable::require_column(const std::string& name) const {
  const std::int64_t i = column(name);
  if (i < 0) fail(source, "missing required column '" + name + "'");
  return i;
}

CsvTable read_csv(std::istream& in, const std::string& source_name) {
  CsvTable table;
  table.source = source_name;
  std::string line;
  bool have_header = false;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      if (!have_header) continue;
      fail(source_name, "blank line " + std::to_string(line_no) +
                            " inside the data body");
    }
    std::vector<std::string> cells = split_line(line);
    if (!have_header) {
      for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i].empty())
          fail(source_name,
               "header column " + std::to_string(i + 1) + " is empty");
      std::set<std::string> seen(cells.begin(), cells.end());
      if (seen.size() != cells.size())
        fail(source_name, "duplicate header column names");
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size())
      fail(source_name, "line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) +
                            " cell(s), expected " +
                            std::to_string(table.header.size()));
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (cells[i].empty())
        fail(source_name, "line " + std::to_string(line_no) + ", column '" +
                              table.header[i] + "' is empty");
    table.rows.push_back(std::move(cells));
  }
  if (!have_header) fail(source_name, "no header line");
  if (table.rows.empty()) fail(source_name, "no data rows");
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return read_csv(in, path);
}

std::int64_t parse_int(const std::string& text, const std::string& what) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(text.c_str(), &end, 10);
  if (errno != 0 || end == text.c_str() || *end != '\0')
    throw ValidationError(what + ": '" + text + "' is not an integer");
  return static_cast<std::int64_t>(v);
}

double parse_double(const std::string& text, const std::string& what) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (errno != 0 || end == text.c_str() || *end != '\0')
    throw ValidationError(what + ": '" + text + "' is not a number");
  return v;
}

ClusteredBinomial load_binomial_csv(const std::string& path) {
  const CsvTable t = read_csv_file(path);
  const auto ci_succ = static_cast<std::size_t>(t.require_column("succ"));
  const auto ci_fail = static_cast<std::size_t>(t.require_column("fail"));
  std::vector<ClusteredBinomial::Cluster> clusters;
  clusters.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string where = path + " row " + std::to_string(r + 1);
    ClusteredBinomial::Cluster c;
    c.successes = parse_int(t.rows[r][ci_succ], where + " succ");
    c.failures = parse_int(t.rows[r][ci_fail], where + " fail");
    clusters.push_back(c);
  }
  return ClusteredBinomial(std::move(clusters));
}

ClusteredCounts load_counts_csv(const std::string& path) {
  const CsvTable t = read_csv_file(path);
  const auto ci = static_cast<std::size_t>(t.require_column("y"));
  std::vector<std::int64_t> counts;
  counts.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    counts.push_back(parse_int(t.rows[r][ci],
                               path + " row " + std::to_string(r + 1) + " y"));
  return ClusteredCounts(std::move(counts));
}

MixedModelData load_mixed_csv(const std::string& path,
                              const ModelSpec& spec) {
  const CsvTable t = read_csv_file(path);
  const auto ci_resp =
      static_cast<std::size_t>(t.require_column(spec.response));

  std::set<std::string> wanted;
  for (const Term& term : spec.terms)
    for (const std::string& f : term.factors) wanted.insert(f);

  std::vector<std::size_t> factor_cols;
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (wanted.count(t.header[i]) != 0) factor_cols.push_back(i);
  for (const std::string& f : wanted)
    if (t.column(f) < 0)
      throw ValidationError(path + ": missing factor column '" + f + "'");

  std::vector<double> response;
  response.reserve(t.rows.size());
  std::vector<MixedModelData::Factor> factors(factor_cols.size());
  for (std::size_t j = 0; j < factor_cols.size(); ++j) {
    factors[j].name = t.header[factor_cols[j]];
    factors[j].levels.reserve(t.rows.size());
  }
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    response.push_back(
        parse_double(t.rows[r][ci_resp], path + " row " +
                                             std::to_string(r + 1) + " " +
                                             spec.response));
    for (std::size_t j = 0; j < factor_cols.size(); ++j)
      factors[j].levels.push_back(t.rows[r][factor_cols[j]]);
  }
  return MixedModelData(std::move(response), std::move(factors));
}

}  // namespace predcal
