#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "sgn/cost.hpp"
#include "sgn/krylov.hpp"
#include "sgn/problems.hpp"
#include "sgn/sampling.hpp"

namespace sgn {

struct StopRules {
  double epsilon_F = 1e-6;  // on ‖R(x)‖ or ‖F(x)‖
  std::optional<double> budget_full_jacobian_evals;
  std::optional<double> chi;  // stabilization test, off when unset
  double patience_full_evals = 5.0;
  std::size_t max_iterations = 10000;
};

struct IterationRecord;

struct SolverConfig {
  double c = 1e-4;
  double tau = 0.5;
  double t_max = 1.0;
  double t0 = 1.0;
  double eta_bar = 0.1;
  // η_k from (k, eta_bar); constant eta_bar when empty.
  std::function<double(std::size_t, double)> forcing;
  std::optional<double> lambda;
  SamplePlan sample_plan;
  StopRules stop;
  std::optional<double> sigma_min;
  std::optional<double> sigma_max;
  bool diagnostics = false;
  std::optional<CostVariant> cost_variant;
  int max_inner = 0;  // 0: twice the column count
  std::uint64_t seed = 1;
  std::optional<Vector> x0;
  std::vector<double> hitting_epsilons;
  // Called after every iteration with the record and the new iterate.
  std::function<void(const IterationRecord&, std::span<const double>)> observer;

  // Throws ConfigError.
  void validate() const;
  double forcing_term(std::size_t k) const;
};

struct StepProposal {
  Vector s;
  Vector g;
  std::size_t sample_size = 0;
  int inner_iterations = 0;
  double descent_value = 0.0;  // sᵀg
  bool krylov_converged = false;
  bool stationary_model = false;
  bool used_fallback = false;  // Cauchy step replaced a numerically ascending Krylov step
  double evaluation_fraction = 0.0;
  std::optional<LinearOperator> model_jacobian;  // J̃ before any Tikhonov augmentation
};

struct Diagnostics {
  std::optional<bool> spectral_event;  // needs sigma_min and sigma_max
  bool true_iteration = false;
};

struct IterationRecord {
  std::size_t k = 0;
  double t = 0.0;
  bool successful = false;
  double f = 0.0;  // f(x_k)
  double grad_norm = 0.0;
  double residual_norm = 0.0;
  std::size_t sample_size = 0;
  int inner_iterations = 0;
  double cost_increment = 0.0;
  double cumulative_cost = 0.0;
  // in-memory only
  double descent_value = 0.0;
  double f_trial = 0.0;
  double evaluation_fraction = 0.0;
  std::optional<Diagnostics> diagnostics;
};

enum class TerminationStatus { residual_tol, stabilized, budget, model_stationary, max_iterations };
std::string_view to_string(TerminationStatus status);

struct Trace {
  std::vector<IterationRecord> records;
  TerminationStatus status = TerminationStatus::max_iterations;
  double total_cost = 0.0;
  Vector x_initial;
  Vector x_final;
  double f_final = 0.0;
  double residual_norm_final = 0.0;
  double evaluations = 0.0;  // cumulative full-Jacobian equivalents
  std::vector<std::pair<double, std::optional<std::size_t>>> hitting_times;  // on the gradient norm
  std::size_t iterations() const { return records.size(); }
};

bool armijo_accept(double f0, double f_trial, double t, double descent_value, double c);
double step_update(double t, bool successful, double tau, double t_max);

// Builds the sampled model at x and solves it inexactly. For row compression the accuracy target
// needs ‖g_{k-1}‖; when absent a uniform pilot sample of ceil(0.01·m) rows supplies it.
StepProposal propose_step(const ResidualProblem& problem, std::span<const double> x, double t,
                          const SolverConfig& config, Rng& rng,
                          std::optional<double> previous_gradient_norm = std::nullopt, std::size_t k = 0);
StepProposal propose_step(const ResidualProblem& problem, std::shared_ptr<const JacobianView> jac,
                          std::span<const double> residual, double t, const SolverConfig& config, Rng& rng,
                          double previous_gradient_norm, std::size_t k);

// Solves the model min ‖J̃s + b‖ (plus the Tikhonov term when configured) and applies the descent safeguard.
StepProposal solve_model(const SampledModel& model, const SolverConfig& config, double eta);

// ‖g‖ of a uniform row-compressed sample of ceil(0.01·m) rows.
double pilot_gradient_norm(const ResidualProblem& problem, const JacobianView& jac, std::span<const double> residual,
                           Rng& rng);

Trace sgn_run(const ProblemPtr& problem, const SolverConfig& config);

CostVariant default_cost_variant(const SamplePlan& plan, const ResidualProblem& problem);

bool spectral_event_check(const LinearOperator& jtilde, double sigma_min, double sigma_max);

enum class AccuracyVariant { gradient, jacobian };
bool true_iteration_check(const ResidualProblem& problem, std::span<const double> x, std::span<const double> g,
                          const LinearOperator& jtilde, double t, double alpha, AccuracyVariant variant);

}  // namespace sgn
