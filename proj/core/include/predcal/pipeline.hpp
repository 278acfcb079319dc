#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "predcal/calibration.hpp"
#include "predcal/design.hpp"
#include "predcal/fitting.hpp"
#include "predcal/types.hpp"

namespace predcal {

enum class TaskKind {
  quasi_bin,
  beta_bin,
  quasi_pois,
  lmm_unstruc,
  lmm_futvec,
  lmm_futmat,
};

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& text);

// Historical data plus the model, per family.
struct LmmHistorical {
  MixedModelData data;
  ModelSpec model;
};
using HistoricalData = std::variant<std::monostate, ClusteredBinomial,
                                    ClusteredCounts, LmmHistorical>;

// Observed future data (optional, display + cover column only; never
// consumes randomness).
struct NewdatBinomial {
  std::vector<ClusteredBinomial::Cluster> rows;
};
struct NewdatCounts {
  std::vector<std::int64_t> counts;
};
struct NewdatMixed {
  MixedModelData data;
};
using Newdat =
    std::variant<std::monostate, NewdatBinomial, NewdatCounts, NewdatMixed>;

struct TaskSpec {
  TaskKind kind = TaskKind::quasi_pois;
  HistoricalData historical;
  // Explicit future design; for several kinds it may instead be derived
  // from newdat (see run_task).  Exactly one source must determine it.
  std::optional<FutureDesign> future;
  Newdat newdat;
  CalibrationSettings settings;
};

struct ResultRow {
  std::int64_t slot = 1;
  std::optional<std::int64_t> total;  // binomial: future cluster size n*_m
  double hist_estimate = 0.0;         // pi_hat / lambda_hat / mu_hat
  double pred_se = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> observed;               // succ / y / response
  std::optional<std::int64_t> observed_failures;  // binomial newdat only
  std::optional<bool> covered;
};

struct ResultTable {
  TaskKind kind = TaskKind::quasi_pois;
  double alpha = 0.05;
  Alternative alternative = Alternative::both;
  std::int64_t n_boot = 0;
  std::uint64_t seed = 0;
  double quant_calib = 0.0;
  CalibrationResult calibration;
  std::vector<ResultRow> rows;  // one per future slot
  // Presentation metadata for mixed-model tables with observed data.
  std::string response_name;
  std::vector<std::string> factor_names;
  std::vector<std::vector<std::string>> factor_values;  // [row][factor]
  // Name/value pairs describing the historical fit (diagnostics).
  std::vector<std::pair<std::string, double>> fit_summary;

  bool has_observed() const;
};

// Fit -> bootstrap replicates -> bisection -> intervals -> table.
// Deterministic in (task, settings.seed); thread count never changes the
// result.  All mixed-model tasks with a single future slot share one
// replicate stream (simulate the historical design, draw one row), so the
// three lmm kinds coincide at M = 1.
ResultTable run_task(const TaskSpec& task, int threads = 1);

}  // namespace predcal
