#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "predcal/calibration.hpp"
#include "predcal/coverage_lab.hpp"
#include "predcal/pipeline.hpp"

namespace predcal {

// %.6g with Inf / -Inf / NaN spelled out (the one-sided bounds are
// infinite sentinels for the Gaussian family).
std::string format_number(double v);

// Writes the task result as CSV.  Column layout follows the family:
//   binomial            total,hist_prob,quant_calib,pred_se,lower,upper
//   binomial + newdat   succ,fail,total,... ,cover
//   counts              m,hist_mean,quant_calib,pred_se,lower,upper
//   counts + newdat     y,hist_mean,... ,cover
//   mixed               m,hist_mean,quant_calib,pred_se,lower,upper
//   mixed + newdat      <response>,<factors...>,hist_mean,... ,cover
// Families whose slots are exchangeable (counts, mixed) collapse to a
// single row with m = slot count when no observed data is attached.
void write_result_table(const ResultTable& table, std::ostream& out);
std::string result_table_to_string(const ResultTable& table);

// Bisection trace: `step,delta,coverage`, full double precision.
void write_trace_csv(const std::vector<TracePoint>& trace, std::ostream& out);

// Minimal self-contained SVG line chart of (delta, coverage - target)
// with the zero line marked; `target` is 1 - alpha (or the one-sided
// analogue).
void write_trace_svg(const std::vector<TracePoint>& trace, double target,
                     std::ostream& out);

// Coverage-study outputs: the one-line-per-scenario summary and the
// per-simulation log.
void write_coverage_summary(const std::vector<CoverageReport>& reports,
                            std::ostream& out);
void write_coverage_records(const CoverageReport& report, std::ostream& out);

}  // namespace predcal
