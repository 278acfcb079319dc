#include "predcal/table_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace predcal {
namespace {

const char* bool_text(bool b) { return b ? "TRUE" : "FALSE"; }

std::string format_precise(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string sanitize_cell(std::string text) {
  std::replace(text.begin(), text.end(), ',', ';');
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

bool is_binomial_kind(TaskKind k) {
  return k == TaskKind::quasi_bin || k == TaskKind::beta_bin;
}

bool is_lmm_kind(TaskKind k) {
  return k == TaskKind::lmm_unstruc || k == TaskKind::lmm_futvec ||
         k == TaskKind::lmm_futmat;
}

void write_binomial(const ResultTable& t, std::ostream& out) {
  const bool obs = t.has_observed();
  if (obs)
    out << "succ,fail,total,hist_prob,quant_calib,pred_se,lower,upper,"
           "cover\n";
  else
    out << "total,hist_prob,quant_calib,pred_se,lower,upper\n";
  for (const ResultRow& r : t.rows) {
    if (obs)
      out << static_cast<std::int64_t>(*r.observed) << ','
          << *r.observed_failures << ',';
    out << *r.total << ',' << format_number(r.hist_estimate) << ','
        << format_number(t.quant_calib) << ',' << format_number(r.pred_se)
        << ',' << format_number(r.lower) << ',' << format_number(r.upper);
    if (obs) out << ',' << bool_text(*r.covered);
    out << '\n';
  }
}

void write_counts(const ResultTable& t, std::ostream& out) {
  if (!t.has_observed()) {
    out << "m,hist_mean,quant_calib,pred_se,lower,upper\n";
    const ResultRow& r = t.rows.front();
    out << t.rows.size() << ',' << format_number(r.hist_estimate) << ','
        << format_number(t.quant_calib) << ',' << format_number(r.pred_se)
        << ',' << format_number(r.lower) << ',' << format_number(r.upper)
        << '\n';
    return;
  }
  out << "y,hist_mean,quant_calib,pred_se,lower,upper,cover\n";
  for (const ResultRow& r : t.rows)
    out << static_cast<std::int64_t>(*r.observed) << ','
        << format_number(r.hist_estimate) << ','
        << format_number(t.quant_calib) << ',' << format_number(r.pred_se)
        << ',' << format_number(r.lower) << ',' << format_number(r.upper)
        << ',' << bool_text(*r.covered) << '\n';
}

void write_mixed(const ResultTable& t, std::ostream& out) {
  if (!t.has_observed()) {
    out << "m,hist_mean,quant_calib,pred_se,lower,upper\n";
    const ResultRow& r = t.rows.front();
    out << t.rows.size() << ',' << format_number(r.hist_estimate) << ','
        << format_number(t.quant_calib) << ',' << format_number(r.pred_se)
        << ',' << format_number(r.lower) << ',' << format_number(r.upper)
        << '\n';
    return;
  }
  out << sanitize_cell(t.response_name);
  for (const std::string& f : t.factor_names) out << ',' << sanitize_cell(f);
  out << ",hist_mean,quant_calib,pred_se,lower,upper,cover\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const ResultRow& r = t.rows[i];
    out << format_number(*r.observed);
    for (const std::string& lv : t.factor_values[i])
      out << ',' << sanitize_cell(lv);
    out << ',' << format_number(r.hist_estimate) << ','
        << format_number(t.quant_calib) << ',' << format_number(r.pred_se)
        << ',' << format_number(r.lower) << ',' << format_number(r.upper)
        << ',' << bool_text(*r.covered) << '\n';
  }
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void write_result_table(const ResultTable& table, std::ostream& out) {
  if (table.rows.empty()) throw ComputeError("result table has no rows");
  if (is_binomial_kind(table.kind))
    write_binomial(table, out);
  else if (is_lmm_kind(table.kind))
    write_mixed(table, out);
  else
    write_counts(table, out);
}

std::string result_table_to_string(const ResultTable& table) {
  std::ostringstream ss;
  write_result_table(table, ss);
  return ss.str();
}

void write_trace_csv(const std::vector<TracePoint>& trace,
                     std::ostream& out) {
  out << "step,delta,coverage\n";
  for (const TracePoint& p : trace)
    out << p.step << ',' << format_precise(p.delta) << ','
        << format_precise(p.coverage) << '\n';
}

void write_trace_svg(const std::vector<TracePoint>& trace, double target,
                     std::ostream& out) {
  const double width = 640.0, height = 400.0;
  const double ml = 70.0, mr = 20.0, mt = 30.0, mb = 50.0;
  const double pw = width - ml - mr, ph = height - mt - mb;

  std::vector<TracePoint> pts = trace;
  std::sort(pts.begin(), pts.end(),
            [](const TracePoint& a, const TracePoint& b) {
              return a.delta < b.delta;
            });

  double x_lo = 0.0, x_hi = 1.0, y_lo = -1.0, y_hi = 1.0;
  if (!pts.empty()) {
    x_lo = pts.front().delta;
    x_hi = pts.back().delta;
    y_lo = y_hi = pts.front().coverage - target;
    for (const TracePoint& p : pts) {
      y_lo = std::min(y_lo, p.coverage - target);
      y_hi = std::max(y_hi, p.coverage - target);
    }
  }
  y_lo = std::min(y_lo, 0.0);
  y_hi = std::max(y_hi, 0.0);
  if (x_hi - x_lo < 1e-12) {
    x_lo -= 0.5;
    x_hi += 0.5;
  }
  const double y_pad = std::max(0.02 * (y_hi - y_lo), 0.005);
  y_lo -= y_pad;
  y_hi += y_pad;

  auto sx = [&](double v) { return ml + (v - x_lo) / (x_hi - x_lo) * pw; };
  auto sy = [&](double v) {
    return mt + ph - (v - y_lo) / (y_hi - y_lo) * ph;
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
      << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2
      << "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">bisection trace</text>\n";

  // axes
  out << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\""
      << ml + pw << "\" y2=\"" << mt + ph
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << mt + ph
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";

  // zero line (coverage equals the target)
  out << "<line x1=\"" << ml << "\" y1=\"" << sy(0.0) << "\" x2=\""
      << ml + pw << "\" y2=\"" << sy(0.0)
      << "\" stroke=\"steelblue\" stroke-dasharray=\"5,4\" "
         "stroke-width=\"1\"/>\n";

  if (!pts.empty()) {
    out << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" "
           "points=\"";
    for (const TracePoint& p : pts)
      out << sx(p.delta) << ',' << sy(p.coverage - target) << ' ';
    out << "\"/>\n";
    for (const TracePoint& p : pts)
      out << "<circle cx=\"" << sx(p.delta) << "\" cy=\""
          << sy(p.coverage - target)
          << "\" r=\"3\" fill=\"black\"/>\n";
  }

  // axis labels and extrema
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">delta</text>\n";
  out << "<text x=\"16\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\" transform=\"rotate(-90 16 "
      << mt + ph / 2 << ")\">coverage - target</text>\n";
  out << "<text x=\"" << ml << "\" y=\"" << height - 28
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"11\">"
      << format_number(x_lo) << "</text>\n";
  out << "<text x=\"" << ml + pw << "\" y=\"" << height - 28
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"11\">"
      << format_number(x_hi) << "</text>\n";
  out << "<text x=\"" << ml - 6 << "\" y=\"" << sy(y_lo) + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
         "font-size=\"11\">"
      << format_number(y_lo) << "</text>\n";
  out << "<text x=\"" << ml - 6 << "\" y=\"" << sy(y_hi) + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
         "font-size=\"11\">"
      << format_number(y_hi) << "</text>\n";
  out << "<text x=\"" << ml - 6 << "\" y=\"" << sy(0.0) + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
         "font-size=\"11\">0</text>\n";
  out << "</svg>\n";
}

void write_coverage_summary(const std::vector<CoverageReport>& reports,
                            std::ostream& out) {
  out << "scenario,n_sim,coverage,mc_se,failures\n";
  for (const CoverageReport& r : reports)
    out << sanitize_cell(r.name) << ',' << r.n_sim << ','
        << format_number(r.coverage) << ',' << format_number(r.mc_se) << ','
        << r.n_failed << '\n';
}

void write_coverage_records(const CoverageReport& report, std::ostream& out) {
  out << "sim,ok,covered,delta,converged,error\n";
  for (const SimRecord& r : report.records) {
    out << r.sim << ',' << bool_text(r.ok) << ',' << bool_text(r.covered)
        << ',' << format_number(r.delta) << ',' << bool_text(r.converged)
        << ',' << sanitize_cell(r.error) << '\n';
  }
}

}  // namespace predcal
