#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace predcal {

// Thrown when inputs violate a documented precondition (bad data, bad
// settings, malformed files).  Maps to exit code 2 in the CLI.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when a numerical routine cannot produce a usable result
// (optimizer breakdown, exhausted bootstrap retries, singular systems).
class ComputeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Alternative { both, lower, upper };

std::string to_string(Alternative alt);
Alternative alternative_from_string(const std::string& text);

// ---- clustered data containers ----

// Binomial cluster data: successes/failures per historical cluster.
class ClusteredBinomial {
 public:
  struct Cluster {
    std::int64_t successes = 0;
    std::int64_t failures = 0;
    std::int64_t size() const { return successes + failures; }
  };

  explicit ClusteredBinomial(std::vector<Cluster> clusters);
  ClusteredBinomial(const std::vector<std::int64_t>& successes,
                    const std::vector<std::int64_t>& failures);

  const std::vector<Cluster>& clusters() const { return clusters_; }
  std::int64_t cluster_count() const {
    return static_cast<std::int64_t>(clusters_.size());
  }
  std::int64_t total_size() const;
  std::int64_t total_successes() const;
  std::vector<std::int64_t> sizes() const;

 private:
  std::vector<Cluster> clusters_;
};

// Count data: one observed count per historical cluster.
class ClusteredCounts {
 public:
  explicit ClusteredCounts(std::vector<std::int64_t> counts);

  const std::vector<std::int64_t>& counts() const { return counts_; }
  std::int64_t cluster_count() const {
    return static_cast<std::int64_t>(counts_.size());
  }

 private:
  std::vector<std::int64_t> counts_;
};

// Continuous response with one or more named grouping factors; the raw
// material for random-intercept models.
class MixedModelData {
 public:
  struct Factor {
    std::string name;
    std::vector<std::string> levels;  // one label per row
  };

  MixedModelData(std::vector<double> response, std::vector<Factor> factors);

  const std::vector<double>& response() const { return response_; }
  const std::vector<Factor>& factors() const { return factors_; }
  std::int64_t row_count() const {
    return static_cast<std::int64_t>(response_.size());
  }
  const Factor& factor(const std::string& name) const;
  bool has_factor(const std::string& name) const;

 private:
  std::vector<double> response_;
  std::vector<Factor> factors_;
};

// ---- calibration settings ----

struct CalibrationSettings {
  double alpha = 0.05;
  std::int64_t n_boot = 10000;
  double delta_min = 0.01;
  double delta_max = 10.0;
  double tolerance = 0.003;
  int max_bisection_steps = 30;
  Alternative alternative = Alternative::both;
  std::uint64_t seed = 1u;

  // Throws ValidationError when any field is out of range.
  void validate() const;
};

}  // namespace predcal
