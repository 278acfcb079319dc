#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "predcal/coverage_lab.hpp"
#include "predcal/csv.hpp"
#include "predcal/design.hpp"
#include "predcal/pipeline.hpp"
#include "predcal/rng.hpp"
#include "predcal/sampling.hpp"
#include "predcal/table_io.hpp"
#include "predcal/types.hpp"

namespace {

using namespace predcal;

void write_to(const std::string& path,
              const std::function<void(std::ostream&)>& fn) {
  if (path.empty()) {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out)
    throw ValidationError("cannot open '" + path + "' for writing");
  fn(out);
  if (!out)
    throw ValidationError("writing to '" + path + "' failed");
}

// Flags shared by the six interval subcommands.
struct IntervalOpts {
  std::string hist;
  std::string newdat;
  std::string out;
  std::string trace_csv;
  std::string trace_svg;
  std::string formula;
  std::string futmat_list;
  std::string alternative = "both";
  std::vector<std::int64_t> newsize;
  std::vector<std::int64_t> futvec;
  std::int64_t m = -1;  // -1: not given
  CalibrationSettings settings;
  bool strict = false;
  int threads = 1;
};

void add_calibration_flags(CLI::App* cmd, IntervalOpts& o) {
  cmd->add_option("--alpha", o.settings.alpha,
                  "nominal error rate (default 0.05)");
  cmd->add_option("--nboot", o.settings.n_boot,
                  "bootstrap replicates (default 10000)");
  cmd->add_option("--delta-min", o.settings.delta_min,
                  "lower end of the calibration bracket (default 0.01)");
  cmd->add_option("--delta-max", o.settings.delta_max,
                  "upper end of the calibration bracket (default 10)");
  cmd->add_option("--tolerance", o.settings.tolerance,
                  "acceptable |coverage - target| (default 0.003)");
  cmd->add_option("--n-bisec", o.settings.max_bisection_steps,
                  "maximum bisection steps (default 30)");
  cmd->add_option("--alternative", o.alternative,
                  "both|lower|upper (default both)");
  cmd->add_option("--seed", o.settings.seed, "random seed")
      ->envname("PREDCAL_SEED");
  cmd->add_option("--trace-csv", o.trace_csv,
                  "write the bisection trace to this CSV file");
  cmd->add_option("--trace-svg", o.trace_svg,
                  "write the bisection trace chart to this SVG file");
  cmd->add_option("--out", o.out, "output file (default stdout)");
  cmd->add_flag("--strict", o.strict,
                "exit with status 3 when the bisection does not converge");
  cmd->add_option("--threads", o.threads,
                  "worker threads (never changes results)");
}

CLI::App* add_interval_command(CLI::App& app, const std::string& name,
                               const std::string& desc, IntervalOpts& o) {
  CLI::App* cmd = app.add_subcommand(name, desc);
  cmd->add_option("--hist", o.hist, "historical data CSV")->required();
  cmd->add_option("--newdat", o.newdat, "observed future data CSV");
  add_calibration_flags(cmd, o);
  return cmd;
}

int run_interval(TaskKind kind, const IntervalOpts& o) {
  TaskSpec task;
  task.kind = kind;
  task.settings = o.settings;
  task.settings.alternative = alternative_from_string(o.alternative);

  ModelSpec model;
  switch (kind) {
    case TaskKind::quasi_bin:
    case TaskKind::beta_bin:
      task.historical = load_binomial_csv(o.hist);
      if (!o.newdat.empty())
        task.newdat = NewdatBinomial{load_binomial_csv(o.newdat).clusters()};
      if (!o.newsize.empty()) task.future = FutureClusterSizes{o.newsize};
      break;
    case TaskKind::quasi_pois:
      task.historical = load_counts_csv(o.hist);
      if (!o.newdat.empty())
        task.newdat = NewdatCounts{load_counts_csv(o.newdat).counts()};
      if (o.m != -1) task.future = FutureRepeatCount{o.m};
      break;
    default: {
      if (o.formula.empty())
        throw ValidationError("--formula is required for mixed models");
      model = parse_formula(o.formula);
      LmmHistorical hist{load_mixed_csv(o.hist, model), model};
      task.historical = std::move(hist);
      if (!o.newdat.empty())
        task.newdat = NewdatMixed{load_mixed_csv(o.newdat, model)};
      if (kind == TaskKind::lmm_unstruc && o.m != -1)
        task.future = FutureUnstructured{o.m};
      if (kind == TaskKind::lmm_futvec) {
        if (o.futvec.empty())
          throw ValidationError("--futvec is required for lmm-futvec");
        task.future = FutureRowSubset{o.futvec};
      }
      if (kind == TaskKind::lmm_futmat && !o.futmat_list.empty())
        task.future = FutureMatrices{load_futmat_list_file(o.futmat_list)};
      break;
    }
  }

  const ResultTable table = run_task(task, o.threads);

  write_to(o.out, [&](std::ostream& os) { write_result_table(table, os); });
  if (!o.trace_csv.empty())
    write_to(o.trace_csv, [&](std::ostream& os) {
      write_trace_csv(table.calibration.trace, os);
    });
  if (!o.trace_svg.empty())
    write_to(o.trace_svg, [&](std::ostream& os) {
      write_trace_svg(table.calibration.trace, 1.0 - table.alpha, os);
    });

  if (!table.calibration.warning.empty())
    std::cerr << "warning: " << table.calibration.warning << "\n";
  if (o.strict && !table.calibration.converged) return 3;
  return 0;
}

// ---- sample: fixture (re)generation from the four generators ----

struct SampleOpts {
  std::vector<std::int64_t> sizes;
  double prob = 0.5;
  double phi = 1.5;
  double rho = 0.05;
  double lambda = 1.0;
  std::int64_t n_clusters = 0;
  double mu = 0.0;
  std::vector<double> sigma2;
  std::string hist;
  std::string formula;
  std::string out;
  std::uint64_t seed = 1;
};

void add_sample_common(CLI::App* cmd, SampleOpts& o) {
  cmd->add_option("--seed", o.seed, "random seed")->envname("PREDCAL_SEED");
  cmd->add_option("--out", o.out, "output file (default stdout)");
}

int run_sample_binomial(bool beta, const SampleOpts& o) {
  RandomStream rs(o.seed);
  const std::vector<std::int64_t> draws =
      beta ? sample_beta_binomial(rs, o.sizes, o.prob, o.rho)
           : sample_quasi_binomial(rs, o.sizes, o.prob, o.phi);
  write_to(o.out, [&](std::ostream& os) {
    os << "succ,fail\n";
    for (std::size_t i = 0; i < draws.size(); ++i)
      os << draws[i] << ',' << (o.sizes[i] - draws[i]) << '\n';
  });
  return 0;
}

int run_sample_poisson(const SampleOpts& o) {
  RandomStream rs(o.seed);
  const std::vector<std::int64_t> draws =
      sample_quasi_poisson(rs, o.n_clusters, o.lambda, o.phi);
  write_to(o.out, [&](std::ostream& os) {
    os << "y\n";
    for (std::int64_t y : draws) os << y << '\n';
  });
  return 0;
}

int run_sample_lmm(const SampleOpts& o) {
  if (o.formula.empty())
    throw ValidationError("--formula is required for lmer-bs");
  const ModelSpec model = parse_formula(o.formula);
  const MixedModelData layout = load_mixed_csv(o.hist, model);
  const DesignMatrices dm = build_design_matrices(layout, model);
  RandomStream rs(o.seed);
  const Eigen::VectorXd y = sample_lmm(rs, dm, o.mu, o.sigma2);
  write_to(o.out, [&](std::ostream& os) {
    os << model.response;
    for (const auto& f : layout.factors()) os << ',' << f.name;
    os << '\n';
    for (Eigen::Index r = 0; r < y.size(); ++r) {
      os << format_number(y[r]);
      for (const auto& f : layout.factors())
        os << ',' << f.levels[static_cast<std::size_t>(r)];
      os << '\n';
    }
  });
  return 0;
}

// ---- coverage-sim: Monte Carlo coverage study ----

struct CoverageOpts {
  std::string family;
  std::string name;
  double pi = 0.5;
  double phi = 1.0;
  double rho = 0.0;
  double lambda = 1.0;
  double mu = 0.0;
  std::vector<double> sigma2;
  std::vector<std::int64_t> hist_sizes;
  std::int64_t hist_clusters = 0;
  std::string hist;
  std::string formula;
  std::vector<std::int64_t> newsize;
  std::vector<std::int64_t> futvec;
  std::string futmat_list;
  std::int64_t m = -1;
  std::int64_t n_sim = 500;
  std::uint64_t seed = 1;
  CalibrationSettings settings;
  std::string alternative = "both";
  double baseline_delta = -1.0;  // <0: calibrate normally
  bool naive_se = false;
  std::string out;
  std::string records;
  int threads = 1;
};

int run_coverage(const CoverageOpts& o) {
  ScenarioSpec spec;
  spec.name = o.name.empty() ? o.family : o.name;
  spec.n_sim = o.n_sim;
  spec.seed = o.seed;
  spec.settings = o.settings;
  spec.settings.alternative = alternative_from_string(o.alternative);
  if (o.baseline_delta >= 0.0) spec.bypass.fixed_delta = o.baseline_delta;
  spec.bypass.naive_dispersion = o.naive_se;

  const TaskKind kind = task_kind_from_string(o.family);
  switch (kind) {
    case TaskKind::quasi_bin:
      spec.truth = TruthQuasiBinomial{o.pi, o.phi, o.hist_sizes};
      if (!o.newsize.empty()) spec.future = FutureClusterSizes{o.newsize};
      break;
    case TaskKind::beta_bin:
      spec.truth = TruthBetaBinomial{o.pi, o.rho, o.hist_sizes};
      if (!o.newsize.empty()) spec.future = FutureClusterSizes{o.newsize};
      break;
    case TaskKind::quasi_pois:
      spec.truth = TruthQuasiPoisson{o.lambda, o.phi, o.hist_clusters};
      if (o.m != -1) spec.future = FutureRepeatCount{o.m};
      break;
    default: {
      if (o.formula.empty())
        throw ValidationError("--formula is required for mixed-model truths");
      const ModelSpec model = parse_formula(o.formula);
      spec.truth =
          TruthLmm{o.mu, o.sigma2, load_mixed_csv(o.hist, model), model};
      if (kind == TaskKind::lmm_unstruc && o.m != -1)
        spec.future = FutureUnstructured{o.m};
      if (kind == TaskKind::lmm_futvec) {
        if (o.futvec.empty())
          throw ValidationError("--futvec is required for lmm-futvec truths");
        spec.future = FutureRowSubset{o.futvec};
      }
      if (kind == TaskKind::lmm_futmat) {
        if (o.futmat_list.empty())
          throw ValidationError(
              "--futmat-list is required for lmm-futmat truths");
        spec.future = FutureMatrices{load_futmat_list_file(o.futmat_list)};
      }
      break;
    }
  }

  const CoverageReport report = simulate_coverage(spec, o.threads);
  write_to(o.out, [&](std::ostream& os) {
    write_coverage_summary({report}, os);
  });
  if (!o.records.empty())
    write_to(o.records,
             [&](std::ostream& os) { write_coverage_records(report, os); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "bootstrap-calibrated prediction intervals for overdispersed "
      "binomial, Poisson and random-intercept Gaussian data"};
  app.require_subcommand(1);

  IntervalOpts io;
  CLI::App* c_qb = add_interval_command(
      app, "quasi-bin",
      "prediction intervals for quasi-binomial clustered data", io);
  c_qb->add_option("--newsize", io.newsize,
                   "future cluster sizes, e.g. 40,50,60")
      ->delimiter(',');
  CLI::App* c_bb = add_interval_command(
      app, "beta-bin", "prediction intervals for beta-binomial clustered data",
      io);
  c_bb->add_option("--newsize", io.newsize,
                   "future cluster sizes, e.g. 40,50,60")
      ->delimiter(',');
  CLI::App* c_qp = add_interval_command(
      app, "quasi-pois", "prediction intervals for quasi-Poisson counts", io);
  c_qp->add_option("--m", io.m, "number of future observations (default 1)");

  CLI::App* c_lu = add_interval_command(
      app, "lmm-unstruc",
      "prediction intervals for M unstructured future rows of a "
      "random-intercept mixed model",
      io);
  c_lu->add_option("--formula", io.formula,
                   "model formula, e.g. \"y~(1|a)+(1|b)+(1|a:b)\"")
      ->required();
  c_lu->add_option("--m", io.m, "number of future observations (default 1)");

  CLI::App* c_lv = add_interval_command(
      app, "lmm-futvec",
      "prediction intervals for selected rows of the historical design", io);
  c_lv->add_option("--formula", io.formula, "model formula")->required();
  c_lv->add_option("--futvec", io.futvec,
                   "1-based historical row numbers, e.g. 1,2,4")
      ->delimiter(',');

  CLI::App* c_lf = add_interval_command(
      app, "lmm-futmat",
      "prediction intervals for an explicit future design", io);
  c_lf->add_option("--formula", io.formula, "model formula")->required();
  c_lf->add_option("--futmat-list", io.futmat_list,
                   "future design matrices (JSON)");

  // sample: draw from the four generators
  SampleOpts so;
  CLI::App* c_sample =
      app.add_subcommand("sample", "draw data sets from the four generators");
  c_sample->require_subcommand(1);
  CLI::App* s_bb = c_sample->add_subcommand(
      "rbbinom", "beta-binomial clusters (succ,fail CSV)");
  s_bb->add_option("--size", so.sizes, "cluster sizes, e.g. 50,50,30")
      ->delimiter(',')
      ->required();
  s_bb->add_option("--prob", so.prob, "success probability")->required();
  s_bb->add_option("--rho", so.rho, "intraclass correlation")->required();
  add_sample_common(s_bb, so);
  CLI::App* s_qb = c_sample->add_subcommand(
      "rqbinom", "quasi-binomial clusters (succ,fail CSV)");
  s_qb->add_option("--size", so.sizes, "cluster sizes, e.g. 50,50,30")
      ->delimiter(',')
      ->required();
  s_qb->add_option("--prob", so.prob, "success probability")->required();
  s_qb->add_option("--phi", so.phi, "dispersion (1 < phi < min size)")
      ->required();
  add_sample_common(s_qb, so);
  CLI::App* s_qp =
      c_sample->add_subcommand("rqpois", "quasi-Poisson counts (y CSV)");
  s_qp->add_option("--n-clusters", so.n_clusters, "number of counts")
      ->required();
  s_qp->add_option("--lambda", so.lambda, "mean")->required();
  s_qp->add_option("--phi", so.phi, "dispersion (> 1)")->required();
  add_sample_common(s_qp, so);
  CLI::App* s_lm = c_sample->add_subcommand(
      "lmer-bs", "random-intercept Gaussian rows on a given design");
  s_lm->add_option("--hist", so.hist, "CSV giving the factor layout")
      ->required();
  s_lm->add_option("--formula", so.formula, "model formula")->required();
  s_lm->add_option("--mu", so.mu, "grand mean")->required();
  s_lm->add_option("--sigma2", so.sigma2,
                   "variance components: one per term plus residual, e.g. "
                   "2.5,1.2,0.5")
      ->delimiter(',')
      ->required();
  add_sample_common(s_lm, so);

  // coverage-sim: Monte Carlo coverage study
  CoverageOpts co;
  CLI::App* c_cov = app.add_subcommand(
      "coverage-sim",
      "estimate empirical coverage by simulating from a known truth");
  c_cov->add_option("--family", co.family,
                    "quasi-bin|beta-bin|quasi-pois|lmm-unstruc|lmm-futvec|"
                    "lmm-futmat")
      ->required();
  c_cov->add_option("--name", co.name, "scenario label (default: family)");
  c_cov->add_option("--pi", co.pi, "true success probability (binomial)");
  c_cov->add_option("--phi", co.phi, "true dispersion");
  c_cov->add_option("--rho", co.rho, "true intraclass correlation");
  c_cov->add_option("--lambda", co.lambda, "true mean (Poisson)");
  c_cov->add_option("--mu", co.mu, "true grand mean (mixed model)");
  c_cov->add_option("--sigma2", co.sigma2,
                    "true variance components, residual last")
      ->delimiter(',');
  c_cov->add_option("--hist-sizes", co.hist_sizes,
                    "historical cluster sizes (binomial)")
      ->delimiter(',');
  c_cov->add_option("--hist-clusters", co.hist_clusters,
                    "number of historical counts (Poisson)");
  c_cov->add_option("--hist", co.hist, "historical layout CSV (mixed model)");
  c_cov->add_option("--formula", co.formula, "model formula (mixed model)");
  c_cov->add_option("--newsize", co.newsize, "future cluster sizes")
      ->delimiter(',');
  c_cov->add_option("--futvec", co.futvec, "future row numbers")
      ->delimiter(',');
  c_cov->add_option("--futmat-list", co.futmat_list,
                    "future design matrices (JSON)");
  c_cov->add_option("--m", co.m, "number of future observations");
  c_cov->add_option("--n-sim", co.n_sim, "simulations (default 500)");
  c_cov->add_option("--seed", co.seed, "random seed")
      ->envname("PREDCAL_SEED");
  co.settings.n_boot = 2000;  // reduced default keeps studies desk-scale
  c_cov->add_option("--alpha", co.settings.alpha, "nominal error rate");
  c_cov->add_option("--nboot", co.settings.n_boot,
                    "bootstrap replicates per simulation (default 2000)");
  c_cov->add_option("--delta-min", co.settings.delta_min,
                    "calibration bracket lower end");
  c_cov->add_option("--delta-max", co.settings.delta_max,
                    "calibration bracket upper end");
  c_cov->add_option("--tolerance", co.settings.tolerance,
                    "bisection tolerance");
  c_cov->add_option("--n-bisec", co.settings.max_bisection_steps,
                    "maximum bisection steps");
  c_cov->add_option("--alternative", co.alternative, "both|lower|upper");
  c_cov->add_option("--baseline-delta", co.baseline_delta,
                    "skip calibration and use this fixed delta");
  c_cov->add_flag("--naive-se", co.naive_se,
                  "pair the fixed delta with the no-overdispersion "
                  "standard error");
  c_cov->add_option("--out", co.out, "summary CSV (default stdout)");
  c_cov->add_option("--records", co.records, "per-simulation CSV");
  c_cov->add_option("--threads", co.threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(c_qb)) return run_interval(TaskKind::quasi_bin, io);
    if (app.got_subcommand(c_bb)) return run_interval(TaskKind::beta_bin, io);
    if (app.got_subcommand(c_qp)) return run_interval(TaskKind::quasi_pois, io);
    if (app.got_subcommand(c_lu))
      return run_interval(TaskKind::lmm_unstruc, io);
    if (app.got_subcommand(c_lv)) return run_interval(TaskKind::lmm_futvec, io);
    if (app.got_subcommand(c_lf)) return run_interval(TaskKind::lmm_futmat, io);
    if (app.got_subcommand(c_sample)) {
      if (c_sample->got_subcommand(s_bb)) return run_sample_binomial(true, so);
      if (c_sample->got_subcommand(s_qb)) return run_sample_binomial(false, so);
      if (c_sample->got_subcommand(s_qp)) return run_sample_poisson(so);
      return run_sample_lmm(so);
    }
    return run_coverage(co);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ComputeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
