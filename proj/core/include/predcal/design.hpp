#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "predcal/types.hpp"

namespace predcal {

// ---- model formulas ----

// One random-intercept term: a single factor or a two-factor interaction.
struct Term {
  std::vector<std::string> factors;  // 1 or 2 names

  std::string name() const;  // "a" or "a:b"
};

struct ModelSpec {
  std::string response;
  std::vector<Term> terms;  // textual order

  std::string to_string() const;  // "y~(1|a)+(1|b)+(1|a:b)"
};

// Grammar: resp "~" group ("+" group)*, group = "(1|" term ")",
// term = name (":" name)?.  Whitespace is ignored everywhere.  Random
// slopes like "(x|a)" are rejected.
ModelSpec parse_formula(const std::string& text);

// ---- design matrices ----

// Indicator matrix for one term: 0/1 entries, exactly one 1 per row.
struct TermMatrix {
  std::string name;
  Eigen::MatrixXd Z;
  std::vector<std::string> level_labels;  // optional (empty when unnamed)
};

// Per-term indicator matrices sharing a common row count.  The residual
// matrix is implicit: always the identity of the row count.
class DesignMatrices {
 public:
  explicit DesignMatrices(std::vector<TermMatrix> terms);

  const std::vector<TermMatrix>& terms() const { return terms_; }
  std::int64_t term_count() const {
    return static_cast<std::int64_t>(terms_.size());
  }
  std::int64_t row_count() const { return rows_; }
  const TermMatrix& term(const std::string& name) const;

 private:
  std::int64_t rows_ = 0;
  std::vector<TermMatrix> terms_;
};

// Builds one indicator matrix per term of `spec` from the factor columns
// of `data`.  Levels are numbered by first appearance; interaction levels
// are the component labels joined with ":".
DesignMatrices build_design_matrices(const MixedModelData& data,
                                     const ModelSpec& spec);

// Keeps only the given rows (1-based, distinct).  All-zero columns are
// retained: the dropped levels still exist in the generating process.
DesignMatrices subset_rows(const DesignMatrices& dm,
                           const std::vector<std::int64_t>& futvec);

// ---- futmat-list files ----
//
// JSON layout: {"terms":[{"name":"a","matrix":[[0,1],...]},...]} with the
// residual omitted (it is always the identity).  An explicit "Residual"
// entry is tolerated if its matrix is exactly the identity.

DesignMatrices load_futmat_list(std::istream& in);
DesignMatrices load_futmat_list_file(const std::string& path);
void save_futmat_list(const DesignMatrices& dm, std::ostream& out);

// ---- future-design variants ----

struct FutureUnstructured {
  std::int64_t m = 1;
};
struct FutureRowSubset {
  std::vector<std::int64_t> rows;  // 1-based into the historical design
};
struct FutureMatrices {
  DesignMatrices design;
};
struct FutureClusterSizes {
  std::vector<std::int64_t> sizes;  // binomial families only
};
struct FutureRepeatCount {
  std::int64_t m = 1;  // Poisson family only
};

using FutureDesign = std::variant<FutureUnstructured, FutureRowSubset,
                                  FutureMatrices, FutureClusterSizes,
                                  FutureRepeatCount>;

// Number of future observation slots the design describes.
std::int64_t future_slot_count(const FutureDesign& fd);

}  // namespace predcal
