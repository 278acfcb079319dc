#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "predcal/design.hpp"
#include "predcal/types.hpp"

namespace predcal {

// Strict rectangular CSV: a header line is mandatory, every row must have
// the header's width, and empty cells are errors.  Cells are trimmed of
// surrounding whitespace; CR line endings are tolerated.  No quoting or
// embedded-comma support — the formats this library consumes never need
// them.
struct CsvTable {
  std::string source;  // file name or stream label, for error messages
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::int64_t column(const std::string& name) const;  // -1 when absent
  std::int64_t require_column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in, const std::string& source_name);
CsvTable read_csv_file(const std::string& path);

// Column `succ`, `fail`: one cluster per row.
ClusteredBinomial load_binomial_csv(const std::string& path);

// Column `y`: one cluster count per row.
ClusteredCounts load_counts_csv(const std::string& path);

// Response column named by the model spec plus one column per factor the
// model mentions, kept in file column order.  Extra columns are ignored.
MixedModelData load_mixed_csv(const std::string& path,
                              const ModelSpec& spec);

// Strict numeric parsers shared by the loaders and the CLI; `what`
// appears in the error message.
std::int64_t parse_int(const std::string& text, const std::string& what);
double parse_double(const std::string& text, const std::string& what);

}  // namespace predcal
