#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "sgn/errors.hpp"
#include "sgn/harness.hpp"
#include "sgn/solver.hpp"
#include "sgn/verify.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw sgn::IoError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Flags override values loaded from --config.
struct SolveFlags {
  std::string config;
  std::string output;
  std::optional<std::string> family, data, validation, ie_form, scaling, synthetic;
  std::optional<std::size_t> n, examples, feature_count;
  std::optional<double> margin;
  std::optional<std::string> kind, mode, cost;
  std::optional<double> eta, lambda, alpha, delta, gamma, xi, density, epsilon, budget, chi;
  std::optional<std::size_t> m_max, max_iterations;
  std::optional<std::uint64_t> seed;
  bool keep_diagonal = false;
};

template <typename T>
void set(const std::optional<T>& flag, T& target) {
  if (flag) target = *flag;
}
template <typename T>
void set(const std::optional<T>& flag, std::optional<T>& target) {
  if (flag) target = *flag;
}

int run_solve(const SolveFlags& f) {
  sgn::ProblemSpec spec;
  sgn::SolverConfig cfg;
  if (!f.config.empty()) sgn::parse_problem_and_solver(read_file(f.config), spec, cfg);
  set(f.family, spec.family);
  if (f.data) spec.data_path = *f.data;
  if (f.validation) spec.validation_path = *f.validation;
  if (f.ie_form) spec.ie_form = *f.ie_form == "quadrature_weighted" ? sgn::IeForm::quadrature_weighted : sgn::IeForm::unweighted;
  if (f.scaling) spec.scaling = *f.scaling == "sum_squares" ? sgn::LsScaling::sum_squares : sgn::LsScaling::mean_half;
  set(f.synthetic, spec.synthetic);
  set(f.n, spec.n);
  set(f.examples, spec.examples);
  if (f.feature_count) spec.feature_count = *f.feature_count;
  set(f.margin, spec.margin);

  auto& plan = cfg.sample_plan;
  if (f.kind) {
    static const std::map<std::string, sgn::SampleKind> kinds = {
        {"row_compression", sgn::SampleKind::row_compression},
        {"entry_sparsification", sgn::SampleKind::entry_sparsification},
        {"sum_subsampling", sgn::SampleKind::sum_subsampling}};
    plan.kind = kinds.at(*f.kind);
  }
  if (f.mode) plan.probability_mode = *f.mode == "importance" ? sgn::ProbabilityMode::importance : sgn::ProbabilityMode::uniform;
  if (f.cost) cfg.cost_variant = sgn::parse_cost_variant(*f.cost);
  set(f.eta, cfg.eta_bar);
  set(f.lambda, cfg.lambda);
  set(f.alpha, plan.alpha);
  set(f.delta, plan.delta);
  set(f.gamma, plan.gamma);
  set(f.xi, plan.min_fraction);
  set(f.density, plan.fixed_density);
  set(f.m_max, plan.m_max);
  if (f.keep_diagonal) plan.keep_diagonal = true;
  set(f.epsilon, cfg.stop.epsilon_F);
  set(f.budget, cfg.stop.budget_full_jacobian_evals);
  set(f.chi, cfg.stop.chi);
  set(f.max_iterations, cfg.stop.max_iterations);
  set(f.seed, cfg.seed);
  cfg.validate();

  const sgn::ProblemPtr problem = sgn::make_problem(spec);
  const sgn::Trace trace = sgn::sgn_run(problem, cfg);
  if (f.output.empty() || f.output == "-")
    sgn::write_trace_csv(trace, std::cout);
  else
    sgn::write_trace_csv(trace, std::filesystem::path(f.output));
  std::fprintf(stderr, "status=%s iterations=%zu f=%.6e residual_norm=%.6e cost=%.6e\n",
               std::string(sgn::to_string(trace.status)).c_str(), trace.iterations(), trace.f_final,
               trace.residual_norm_final, trace.total_cost);
  return 0;
}

int run_bench(const std::string& path) {
  const auto cfg = sgn::load_experiment_config(path);
  const auto summaries = sgn::experiment_run(cfg);
  for (const auto& s : summaries)
    std::printf("grid %zu [%s] median cost %.6e, median iters %zu\n", s.grid_id, s.param_string.c_str(), s.median_cost,
                s.median_iters);
  return 0;
}

int run_verify(bool informational) {
  int failed = 0;
  sgn::verify::run_all([&](const sgn::verify::CheckResult& r) {
    std::printf("%s\n", sgn::verify::format(r).c_str());
    std::fflush(stdout);
    if (!r.passed) ++failed;
  });
  if (informational) std::printf("%s\n", sgn::verify::format(sgn::verify::ie_quadrature_variant()).c_str());
  return failed == 0 ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic Gauss-Newton solver"};
  app.require_subcommand(1);

  SolveFlags f;
  auto* solve = app.add_subcommand("solve", "Run one solve and write its trace CSV");
  solve->add_option("--config", f.config, "JSON file with problem and solver sections");
  solve->add_option("-o,--output", f.output, "Trace CSV path (stdout when omitted)");
  solve->add_option("--family", f.family, "ie | sigmoid_ls | softmax");
  solve->add_option("--data", f.data, "libsvm training file");
  solve->add_option("--validation", f.validation, "libsvm validation file");
  solve->add_option("--ie-form", f.ie_form)->check(CLI::IsMember({"unweighted", "quadrature_weighted"}));
  solve->add_option("--scaling", f.scaling)->check(CLI::IsMember({"mean_half", "sum_squares"}));
  solve->add_option("--synthetic", f.synthetic)->check(CLI::IsMember({"separable", "logistic"}));
  solve->add_option("-n,--n", f.n, "IE size or synthetic feature count");
  solve->add_option("--examples", f.examples, "Synthetic example count");
  solve->add_option("--feature-count", f.feature_count);
  solve->add_option("--margin", f.margin);
  solve->add_option("--kind", f.kind)
      ->check(CLI::IsMember({"row_compression", "entry_sparsification", "sum_subsampling"}));
  solve->add_option("--mode", f.mode)->check(CLI::IsMember({"uniform", "importance"}));
  solve->add_option("--cost-variant", f.cost);
  solve->add_option("--eta", f.eta);
  solve->add_option("--lambda", f.lambda);
  solve->add_option("--alpha", f.alpha);
  solve->add_option("--delta", f.delta);
  solve->add_option("--gamma", f.gamma);
  solve->add_option("--xi,--min-fraction", f.xi);
  solve->add_option("--density", f.density);
  solve->add_option("--m-max", f.m_max);
  solve->add_flag("--keep-diagonal", f.keep_diagonal);
  solve->add_option("--epsilon", f.epsilon);
  solve->add_option("--budget", f.budget);
  solve->add_option("--chi", f.chi);
  solve->add_option("--max-iterations", f.max_iterations);
  solve->add_option("--seed", f.seed);

  std::string bench_config;
  auto* bench = app.add_subcommand("bench", "Run an experiment grid and write its artifacts");
  bench->add_option("config", bench_config, "Experiment JSON file")->required();

  bool informational = false;
  auto* verify = app.add_subcommand("verify", "Run the invariant and oracle checks");
  verify->add_flag("--informational", informational, "Also run the quadrature-weighted IE variant");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*solve) return run_solve(f);
    if (*bench) return run_bench(bench_config);
    if (*verify) return run_verify(informational);
  } catch (const sgn::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const sgn::RunFailure& e) {
    std::fprintf(stderr, "run failure: %s\n", e.what());
    return 2;
  } catch (const sgn::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
