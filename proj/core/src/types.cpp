#include "predcal/types.hpp"

#include <algorithm>

namespace predcal {

std::string to_string(Alternative alt) {
  switch (alt) {
    case Alternative::both:
      return "both";
    case Alternative::lower:
      return "lower";
    case Alternative::upper:
      return "upper";
  }
  throw ValidationError("unknown alternative");
}

Alternative alternative_from_string(const std::string& text) {
  if (text == "both") return Alternative::both;
  if (text == "lower") return Alternative::lower;
  if (text == "upper") return Alternative::upper;
  throw ValidationError("alternative must be one of both, lower, upper (got '" +
                        text + "')");
}

// ---- ClusteredBinomial ----

ClusteredBinomial::ClusteredBinomial(std::vector<Cluster> clusters)
    : clusters_(std::move(clusters)) {
  if (clusters_.empty()) {
    throw ValidationError("binomial data needs at least one cluster");
  }
  for (const Cluster& c : clusters_) {
    if (c.successes < 0 || c.failures < 0) {
      throw ValidationError("successes and failures must be non-negative");
    }
    if (c.size() < 1) {
      throw ValidationError("each cluster needs size >= 1");
    }
  }
}

ClusteredBinomial::ClusteredBinomial(const std::vector<std::int64_t>& successes,
                                     const std::vector<std::int64_t>& failures)
    : ClusteredBinomial([&] {
        if (successes.size() != failures.size()) {
          throw ValidationError("successes and failures differ in length");
        }
        std::vector<Cluster> cs(successes.size());
        for (std::size_t i = 0; i < successes.size(); ++i) {
          cs[i] = Cluster{successes[i], failures[i]};
        }
        return cs;
      }()) {}

std::int64_t ClusteredBinomial::total_size() const {
  std::int64_t n = 0;
  for (const Cluster& c : clusters_) n += c.size();
  return n;
}

std::int64_t ClusteredBinomial::total_successes() const {
  std::int64_t n = 0;
  for (const Cluster& c : clusters_) n += c.successes;
  return n;
}

std::vector<std::int64_t> ClusteredBinomial::sizes() const {
  std::vector<std::int64_t> out(clusters_.size());
  std::transform(clusters_.begin(), clusters_.end(), out.begin(),
                 [](const Cluster& c) { return c.size(); });
  return out;
}

// ---- ClusteredCounts ----

ClusteredCounts::ClusteredCounts(std::vector<std::int64_t> counts)
    : counts_(std::move(counts)) {
  if (counts_.empty()) {
    throw ValidationError("count data needs at least one cluster");
  }
  for (std::int64_t y : counts_) {
    if (y < 0) throw ValidationError("counts must be non-negative");
  }
}

// ---- MixedModelData ----

MixedModelData::MixedModelData(std::vector<double> response,
                               std::vector<Factor> factors)
    : response_(std::move(response)), factors_(std::move(factors)) {
  if (response_.empty()) {
    throw ValidationError("mixed model data needs at least one row");
  }
  if (factors_.empty()) {
    throw ValidationError("mixed model data needs at least one factor");
  }
  for (const Factor& f : factors_) {
    if (f.name.empty()) throw ValidationError("factor name must be non-empty");
    if (f.levels.size() != response_.size()) {
      throw ValidationError("factor '" + f.name +
                            "' has a different number of rows than the response");
    }
    for (const std::string& lv : f.levels) {
      if (lv.empty()) {
        throw ValidationError("factor '" + f.name + "' has an empty level label");
      }
    }
  }
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    for (std::size_t j = i + 1; j < factors_.size(); ++j) {
      if (factors_[i].name == factors_[j].name) {
        throw ValidationError("duplicate factor name '" + factors_[i].name + "'");
      }
    }
  }
}

const MixedModelData::Factor& MixedModelData::factor(
    const std::string& name) const {
  for (const Factor& f : factors_) {
    if (f.name == name) return f;
  }
  throw ValidationError("no factor named '" + name + "' in the data");
}

bool MixedModelData::has_factor(const std::string& name) const {
  for (const Factor& f : factors_) {
    if (f.name == name) return true;
  }
  return false;
}

// ---- CalibrationSettings ----

void CalibrationSettings::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("alpha must lie strictly between 0 and 1");
  }
  if (n_boot < 100) {
    throw ValidationError("nboot must be at least 100");
  }
  if (!(delta_min > 0.0) || !(delta_max > delta_min)) {
    throw ValidationError("delta bracket must satisfy 0 < delta_min < delta_max");
  }
  if (!(tolerance > 0.0)) {
    throw ValidationError("tolerance must be positive");
  }
  if (max_bisection_steps < 1) {
    throw ValidationError("bisection step limit must be at least 1");
  }
}

}  // namespace predcal
