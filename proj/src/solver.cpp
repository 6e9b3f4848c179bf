#include "sgn/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sgn/errors.hpp"

namespace sgn {

namespace {

constexpr std::size_t kStationaryLimit = 25;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

}  // namespace

void SolverConfig::validate() const {
  if (!(c > 0.0 && c < 1.0)) throw ConfigError("c must lie in (0, 1)");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  if (!(t_max > 0.0)) throw ConfigError("t_max must be positive");
  if (!(t0 > 0.0 && t0 <= t_max)) throw ConfigError("t0 must lie in (0, t_max]");
  if (!(eta_bar >= 0.0 && eta_bar < 1.0)) throw ConfigError("eta_bar must lie in [0, 1)");
  if (lambda && !(*lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (sigma_min && !(*sigma_min > 0.0)) throw ConfigError("sigma_min must be positive");
  if (sigma_max && !(*sigma_max > 0.0)) throw ConfigError("sigma_max must be positive");
  if (sigma_min && sigma_max && *sigma_min > *sigma_max) throw ConfigError("sigma_min exceeds sigma_max");
  if (!(stop.epsilon_F >= 0.0)) throw ConfigError("epsilon_F must be non-negative");
  if (stop.chi && !(*stop.chi > 0.0)) throw ConfigError("chi must be positive");
  if (!(stop.patience_full_evals > 0.0)) throw ConfigError("patience_full_evals must be positive");
  if (stop.budget_full_jacobian_evals && !(*stop.budget_full_jacobian_evals > 0.0))
    throw ConfigError("budget_full_jacobian_evals must be positive");
  for (double e : hitting_epsilons)
    if (!(e > 0.0)) throw ConfigError("hitting epsilons must be positive");
  sample_plan.validate();
}

double SolverConfig::forcing_term(std::size_t k) const {
  if (!forcing) return eta_bar;
  const double eta = forcing(k, eta_bar);
  if (!(eta >= 0.0 && eta < 1.0)) throw ConfigError("forcing rule returned a value outside [0, 1)");
  return eta;
}

std::string_view to_string(TerminationStatus status) {
  switch (status) {
    case TerminationStatus::residual_tol: return "residual_tol";
    case TerminationStatus::stabilized: return "stabilized";
    case TerminationStatus::budget: return "budget";
    case TerminationStatus::model_stationary: return "model_stationary";
    case TerminationStatus::max_iterations: return "max_iterations";
  }
  return "unknown";
}

bool armijo_accept(double f0, double f_trial, double t, double descent_value, double c) {
  return f_trial <= f0 + c * t * descent_value;
}

double step_update(double t, bool successful, double tau, double t_max) {
  return successful ? std::min(t_max, t / tau) : tau * t;
}

StepProposal solve_model(const SampledModel& model, const SolverConfig& config, double eta) {
  const LinearOperator& op = model.jacobian;
  KrylovResult kr;
  std::optional<LinearOperator> augmented;
  Vector rhs = model.residual;
  if (config.lambda) {
    // weight chosen so that −sᵀg >= λ‖s‖² whatever the gradient scaling
    augmented = tikhonov_augment(op, *config.lambda / model.scaling);
    rhs.resize(op.rows() + op.cols(), 0.0);
    kr = krylov_ls_solve(*augmented, rhs, eta, config.max_inner);
  } else if (op.symmetric()) {
    kr = minres_qlp_solve(op, rhs, eta, config.max_inner);
  } else {
    kr = krylov_ls_solve(op, rhs, eta, config.max_inner);
  }

  StepProposal prop;
  prop.g = model.gradient;
  prop.sample_size = model.sample_size;
  prop.evaluation_fraction = model.evaluation_fraction;
  prop.inner_iterations = kr.inner_iterations;
  prop.krylov_converged = kr.converged;
  prop.model_jacobian = op;
  if (kr.initial_normal_residual == 0.0 || norm2(prop.g) == 0.0) {
    prop.s.assign(op.cols(), 0.0);
    prop.stationary_model = true;
    prop.descent_value = 0.0;
    return prop;
  }
  prop.s = std::move(kr.step);
  prop.descent_value = dot(prop.s, prop.g);
  if (!(prop.descent_value <= 0.0) || !all_finite(prop.s)) {
    // steepest-descent minimizer of the same model
    const LinearOperator& a = augmented ? *augmented : op;
    Vector d = sgn::apply(a, rhs, true);
    scale(-1.0, d);
    const double ad = norm2(sgn::apply(a, d));
    const double dd = norm2(d);
    prop.s = d;
    scale(dd * dd / (ad * ad), prop.s);
    prop.descent_value = dot(prop.s, prop.g);
    prop.used_fallback = true;
  }
  return prop;
}

double pilot_gradient_norm(const ResidualProblem& problem, const JacobianView& jac, std::span<const double> residual,
                           Rng& rng) {
  const std::size_t m = jac.rows();
  const std::size_t size = std::max<std::size_t>(1, (m + 99) / 100);
  const Vector probs(m, 1.0 / static_cast<double>(m));
  const auto drawn = draw_indices(probs, size, rng);
  return norm2(row_compress(jac, residual, problem.gradient_scale(), drawn, probs).gradient);
}

StepProposal propose_step(const ResidualProblem& problem, std::shared_ptr<const JacobianView> jac,
                          std::span<const double> residual, double t, const SolverConfig& config, Rng& rng,
                          double previous_gradient_norm, std::size_t k) {
  if (!(t > 0.0)) throw std::invalid_argument("propose_step: t must be positive");
  const SampledModel model =
      build_sampled_model(problem, std::move(jac), residual, config.sample_plan, t, previous_gradient_norm, rng);
  return solve_model(model, config, config.forcing_term(k));
}

StepProposal propose_step(const ResidualProblem& problem, std::span<const double> x, double t,
                          const SolverConfig& config, Rng& rng, std::optional<double> previous_gradient_norm,
                          std::size_t k) {
  const Vector r = problem.residual(x);
  auto jac = problem.jacobian(x);
  double previous = 0.0;
  if (previous_gradient_norm)
    previous = *previous_gradient_norm;
  else if (config.sample_plan.kind == SampleKind::row_compression)
    previous = pilot_gradient_norm(problem, *jac, r, rng);
  return propose_step(problem, jac, r, t, config, rng, previous, k);
}

CostVariant default_cost_variant(const SamplePlan& plan, const ResidualProblem& problem) {
  switch (plan.kind) {
    case SampleKind::row_compression:
      return CostVariant::row_compression;
    case SampleKind::sum_subsampling:
      return CostVariant::sum_subsampling;
    case SampleKind::entry_sparsification: {
      if (plan.probability_mode == ProbabilityMode::importance) return CostVariant::sparsify_importance;
      const bool square = problem.residual_size() == problem.variable_size();
      if (square && plan.keep_diagonal) {
        if (plan.fixed_density && *plan.fixed_density >= 1.0) return CostVariant::exact_square;
        return CostVariant::sparsify_uniform_square;
      }
      return CostVariant::sparsify_uniform_ls;
    }
  }
  throw ConfigError("unknown sample kind");
}

bool spectral_event_check(const LinearOperator& jtilde, double sigma_min, double sigma_max) {
  const auto sv = singular_values(densify(jtilde));
  const double threshold = 1e-12 * sigma_max;
  for (double s : sv) {
    const double lambda = s * s;  // singular value of J̃ᵀJ̃
    if (lambda <= threshold) continue;
    if (lambda < sigma_min || lambda > sigma_max) return false;
  }
  return true;
}

bool true_iteration_check(const ResidualProblem& problem, std::span<const double> x, std::span<const double> g,
                          const LinearOperator& jtilde, double t, double alpha, AccuracyVariant variant) {
  if (variant == AccuracyVariant::gradient) {
    Vector diff = problem.gradient(x);
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= g[i];
    return norm2(diff) <= alpha * t * norm2(g);
  }
  const DenseMatrix j = problem.jacobian(x)->dense();
  return spectral_norm(j - densify(jtilde)) <= alpha * t;
}

Trace sgn_run(const ProblemPtr& problem_ptr, const SolverConfig& config) {
  config.validate();
  const ResidualProblem& problem = *problem_ptr;
  const std::size_t m = problem.residual_size(), n = problem.variable_size();
  if (config.diagnostics && std::min(m, n) > 64)
    throw ConfigError("diagnostics need min(m, n) <= 64 to densify the Jacobian");
  const SamplePlan& plan = config.sample_plan;

  Rng rng = make_rng(config.seed);
  Vector x = config.x0 ? *config.x0 : problem.initial_point(rng);
  if (x.size() != n) throw ConfigError("x0 has length " + std::to_string(x.size()) + ", expected " + std::to_string(n));
  if (!all_finite(x)) throw RunFailure("x0 is not finite");
  Vector r = problem.residual(x);
  double f = problem.objective_from_residual(r);
  if (!all_finite(r) || !std::isfinite(f)) throw RunFailure("residual is not finite at x0");

  Trace trace;
  trace.x_initial = x;
  auto jac = problem.jacobian(x);
  const std::size_t terms = jac->term_count();
  const CostVariant variant = config.cost_variant.value_or(default_cost_variant(plan, problem));
  const AccuracyVariant accuracy =
      plan.kind == SampleKind::row_compression ? AccuracyVariant::gradient : AccuracyVariant::jacobian;
  double previous_gnorm = plan.kind == SampleKind::row_compression ? pilot_gradient_norm(problem, *jac, r, rng) : 0.0;
  bool jac_current = true;

  double t = config.t0, cumulative = 0.0, evaluations = 0.0, fraction_sum = 0.0;
  std::size_t stationary_run = 0;
  std::vector<double> f_history{f};
  trace.status = TerminationStatus::max_iterations;

  for (std::size_t k = 0;; ++k) {
    const double rnorm = norm2(r);
    if (rnorm <= config.stop.epsilon_F) {
      trace.status = TerminationStatus::residual_tol;
      break;
    }
    if (config.stop.budget_full_jacobian_evals && evaluations >= *config.stop.budget_full_jacobian_evals) {
      trace.status = TerminationStatus::budget;
      break;
    }
    if (k >= config.stop.max_iterations) break;

    if (!jac_current) {
      jac = problem.jacobian(x);
      jac_current = true;
    }
    StepProposal prop = propose_step(problem, jac, r, t, config, rng, previous_gnorm, k);

    IterationRecord rec;
    rec.k = k;
    rec.t = t;
    rec.f = f;
    rec.grad_norm = norm2(prop.g);
    rec.residual_norm = rnorm;
    rec.sample_size = prop.sample_size;
    rec.inner_iterations = prop.inner_iterations;
    rec.descent_value = prop.descent_value;
    rec.evaluation_fraction = prop.evaluation_fraction;
    if (config.diagnostics) {
      Diagnostics d;
      if (config.sigma_min && config.sigma_max)
        d.spectral_event = spectral_event_check(*prop.model_jacobian, *config.sigma_min, *config.sigma_max);
      d.true_iteration = true_iteration_check(problem, x, prop.g, *prop.model_jacobian, t, plan.alpha, accuracy);
      rec.diagnostics = d;
    }

    bool success = false;
    rec.f_trial = f;
    if (prop.stationary_model) {
      ++stationary_run;
    } else {
      stationary_run = 0;
      Vector xt = x;
      axpy(t, prop.s, xt);
      Vector rt = problem.residual(xt);
      const double ft = problem.objective_from_residual(rt);
      rec.f_trial = ft;
      if (all_finite(rt) && std::isfinite(ft)) success = armijo_accept(f, ft, t, prop.descent_value, config.c);
      if (success) {
        x = std::move(xt);
        r = std::move(rt);
        f = ft;
        jac_current = false;
      }
    }
    rec.successful = success;
    const double density = plan.fixed_density.value_or(prop.evaluation_fraction);
    rec.cost_increment = per_iteration_cost(variant, m, n, terms, prop.sample_size, prop.inner_iterations, density);
    cumulative += rec.cost_increment;
    rec.cumulative_cost = cumulative;
    evaluations += prop.evaluation_fraction;
    previous_gnorm = rec.grad_norm;
    trace.records.push_back(rec);
    if (config.observer) config.observer(trace.records.back(), x);

    t = step_update(t, success, config.tau, config.t_max);
    f_history.push_back(f);
    if (stationary_run >= kStationaryLimit) {
      trace.status = TerminationStatus::model_stationary;
      break;
    }
    if (config.stop.chi) {
      fraction_sum += prop.evaluation_fraction;
      const double mean_fraction = fraction_sum / static_cast<double>(k + 1);
      const auto patience = static_cast<std::size_t>(std::ceil(config.stop.patience_full_evals / mean_fraction));
      if (stabilization_stop(f_history, *config.stop.chi, patience)) {
        trace.status = TerminationStatus::stabilized;
        break;
      }
    }
  }

  trace.total_cost = cumulative;
  trace.evaluations = evaluations;
  trace.f_final = f;
  trace.residual_norm_final = norm2(r);
  trace.x_final = std::move(x);
  for (double eps : config.hitting_epsilons) {
    std::optional<std::size_t> hit;
    for (const auto& rec : trace.records)
      if (rec.grad_norm <= eps) {
        hit = rec.k;
        break;
      }
    trace.hitting_times.emplace_back(eps, hit);
  }
  return trace;
}

}  // namespace sgn
