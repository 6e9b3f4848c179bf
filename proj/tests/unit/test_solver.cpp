#include <doctest.h>

#include <cmath>
#include <limits>

#include "sgn/errors.hpp"
#include "sgn/solver.hpp"

using namespace sgn;
using doctest::Approx;

namespace {

class DenseJacobian : public JacobianView {
 public:
  explicit DenseJacobian(DenseMatrix a, bool sym = false) : a_(std::move(a)), sym_(sym) {}
  std::size_t rows() const override { return a_.rows(); }
  std::size_t cols() const override { return a_.cols(); }
  double entry(std::size_t i, std::size_t j) const override { return a_(i, j); }
  LinearOperator full_operator() const override {
    auto a = a_;
    auto at = a_.transpose();
    return LinearOperator(
        a.rows(), a.cols(), [a](auto in, auto out) { a.multiply(in, out); },
        [at](auto in, auto out) { at.multiply(in, out); }, sym_);
  }
  bool symmetric() const override { return sym_; }

 private:
  DenseMatrix a_;
  bool sym_;
};

// R(x) = A x + c, optionally undefined below a threshold on x_0.
class AffineProblem : public ResidualProblem {
 public:
  AffineProblem(DenseMatrix a, Vector c, double scale, bool system, Vector x0,
                double nan_below = -std::numeric_limits<double>::infinity())
      : a_(std::move(a)), c_(std::move(c)), scale_(scale), system_(system), x0_(std::move(x0)), nan_below_(nan_below) {}
  std::string name() const override { return "affine"; }
  std::size_t residual_size() const override { return a_.rows(); }
  std::size_t variable_size() const override { return a_.cols(); }
  Vector residual(std::span<const double> x) const override {
    Vector r(a_.rows());
    a_.multiply(x, r);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += c_[i];
    if (x[0] < nan_below_) r[0] = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  std::shared_ptr<const JacobianView> jacobian(std::span<const double>) const override {
    return std::make_shared<DenseJacobian>(a_, system_);
  }
  Vector initial_point(Rng&) const override { return x0_; }
  double objective_scale() const override { return scale_; }
  bool is_system() const override { return system_; }

 private:
  DenseMatrix a_;
  Vector c_;
  double scale_;
  bool system_;
  Vector x0_;
  double nan_below_;
};

SolverConfig exact_square_config() {
  SolverConfig s;
  s.eta_bar = 0.0;
  s.sample_plan.kind = SampleKind::entry_sparsification;
  s.sample_plan.fixed_density = 1.0;
  s.sample_plan.keep_diagonal = true;
  return s;
}

SolverConfig full_rows_config() {
  SolverConfig s;
  s.eta_bar = 0.0;
  s.sample_plan.kind = SampleKind::row_compression;
  s.sample_plan.min_fraction = 1.0;
  return s;
}

}  // namespace

TEST_CASE("Armijo test") {
  CHECK(armijo_accept(1.0, 1.0, 1.0, 0.0, 1e-4));
  CHECK(armijo_accept(1.0, 0.99995, 0.5, -1.0, 1e-4));
  CHECK_FALSE(armijo_accept(1.0, 0.99996, 0.5, -1.0, 1e-4));
}

TEST_CASE("step length update") {
  CHECK(step_update(0.5, true, 0.5, 1.0) == 1.0);
  CHECK(step_update(1.0, false, 0.5, 1.0) == 0.5);
  CHECK(step_update(0.8, true, 0.5, 1.0) == 1.0);
}

TEST_CASE("step proposals") {
  SUBCASE("identity system gives the Newton step") {
    const AffineProblem p(DenseMatrix::identity(2), {0, 0}, 0.5, true, {1, 1});
    Rng rng = make_rng(1);
    const auto prop = propose_step(p, Vector{1, 1}, 1.0, exact_square_config(), rng);
    CHECK(prop.s[0] == Approx(-1));
    CHECK(prop.s[1] == Approx(-1));
    CHECK(prop.g == Vector{1, 1});
    CHECK(prop.descent_value == Approx(-2));
  }
  SUBCASE("least squares with the full row sample") {
    const AffineProblem p(DenseMatrix::from_rows({{1, 0}, {0, 2}}), {1, 1}, 0.25, false, {0, 0});
    Rng rng = make_rng(1);
    const auto prop = propose_step(p, Vector{0, 0}, 1.0, full_rows_config(), rng);
    CHECK(prop.g[0] == Approx(0.5));
    CHECK(prop.g[1] == Approx(1.0));
    CHECK(prop.s[0] == Approx(-1));
    CHECK(prop.s[1] == Approx(-0.5));
  }
  SUBCASE("Tikhonov term bounds the step") {
    const AffineProblem p(DenseMatrix::from_rows({{3}}), {3}, 0.5, true, {0});
    auto cfg = exact_square_config();
    cfg.eta_bar = 1e-12;
    cfg.lambda = 1.0;
    Rng rng = make_rng(1);
    const auto prop = propose_step(p, Vector{0}, 1.0, cfg, rng);
    CHECK(prop.s[0] == Approx(-0.9));
    CHECK(-prop.descent_value == Approx(8.1));
    CHECK(-prop.descent_value >= 1.0 * prop.s[0] * prop.s[0]);
  }
  SUBCASE("zero gradient is a stationary model") {
    const AffineProblem p(DenseMatrix::identity(2), {0, 0}, 0.5, true, {0, 0});
    Rng rng = make_rng(1);
    const auto prop = propose_step(p, Vector{0, 0}, 1.0, exact_square_config(), rng);
    CHECK(prop.stationary_model);
    CHECK(prop.s == Vector{0, 0});
  }
}

TEST_CASE("outer loop") {
  SUBCASE("linear system converges in at most two iterations") {
    auto p = std::make_shared<AffineProblem>(DenseMatrix::identity(2), Vector{0, 0}, 0.5, true, Vector{1, 1});
    const auto tr = sgn_run(p, exact_square_config());
    CHECK(tr.status == TerminationStatus::residual_tol);
    CHECK(tr.iterations() <= 2);
    CHECK(tr.residual_norm_final <= 1e-6);
  }
  SUBCASE("non-finite start is a run failure") {
    auto p = std::make_shared<AffineProblem>(DenseMatrix::identity(1), Vector{0}, 0.5, true, Vector{-1.0}, 0.0);
    CHECK_THROWS_AS(sgn_run(p, exact_square_config()), RunFailure);
  }
  SUBCASE("non-finite trial point is an unsuccessful iteration") {
    auto p = std::make_shared<AffineProblem>(DenseMatrix::identity(1), Vector{0}, 0.5, true, Vector{1.0}, 0.25);
    auto cfg = exact_square_config();
    cfg.stop.max_iterations = 6;
    const auto tr = sgn_run(p, cfg);
    REQUIRE(tr.iterations() >= 2);
    CHECK_FALSE(tr.records[0].successful);
    CHECK(tr.records[1].t == 0.5);
    CHECK(tr.records[1].successful);
    CHECK(std::isfinite(tr.f_final));
  }
  SUBCASE("invalid configuration is rejected") {
    auto p = std::make_shared<AffineProblem>(DenseMatrix::identity(1), Vector{0}, 0.5, true, Vector{1.0});
    auto cfg = exact_square_config();
    cfg.tau = 1.5;
    CHECK_THROWS_AS(sgn_run(p, cfg), ConfigError);
    cfg = exact_square_config();
    cfg.sample_plan.delta = 0.0;
    CHECK_THROWS_AS(sgn_run(p, cfg), ConfigError);
  }
  SUBCASE("cost bookkeeping adds up") {
    const auto p = ie_problem(60);
    SolverConfig cfg;
    cfg.sample_plan.kind = SampleKind::entry_sparsification;
    cfg.sample_plan.fixed_density = 0.25;
    cfg.sample_plan.keep_diagonal = true;
    cfg.seed = 5;
    const auto tr = sgn_run(p, cfg);
    double total = 0.0;
    for (const auto& r : tr.records) {
      const double c =
          per_iteration_cost(CostVariant::sparsify_uniform_square, 60, 60, 0, r.sample_size, r.inner_iterations, 0.25);
      CHECK(r.cost_increment == c);
      total += c;
      CHECK(r.cumulative_cost == total);
    }
    CHECK(tr.total_cost == total);
    CHECK(default_cost_variant(cfg.sample_plan, *p) == CostVariant::sparsify_uniform_square);
    cfg.sample_plan.fixed_density = 1.0;
    CHECK(default_cost_variant(cfg.sample_plan, *p) == CostVariant::exact_square);
  }
  SUBCASE("budget stops the run") {
    const auto p = ie_problem(60);
    SolverConfig cfg;
    cfg.sample_plan.kind = SampleKind::entry_sparsification;
    cfg.sample_plan.fixed_density = 0.25;
    cfg.stop.epsilon_F = 0.0;
    cfg.stop.budget_full_jacobian_evals = 2.0;
    const auto tr = sgn_run(p, cfg);
    CHECK(tr.status == TerminationStatus::budget);
    CHECK(tr.evaluations >= 2.0);
  }
  SUBCASE("same seed, same trace") {
    const auto p = ie_problem(40);
    SolverConfig cfg;
    cfg.sample_plan.kind = SampleKind::entry_sparsification;
    cfg.sample_plan.probability_mode = ProbabilityMode::importance;
    cfg.seed = 9;
    const auto a = sgn_run(p, cfg), b = sgn_run(p, cfg);
    REQUIRE(a.iterations() == b.iterations());
    for (std::size_t k = 0; k < a.iterations(); ++k) {
      CHECK(a.records[k].f == b.records[k].f);
      CHECK(a.records[k].sample_size == b.records[k].sample_size);
    }
    CHECK(a.x_final == b.x_final);
  }
}

TEST_CASE("spectral event") {
  CHECK(spectral_event_check(LinearOperator::identity(2), 0.5, 2.0));
  CHECK_FALSE(spectral_event_check(LinearOperator::from_dense(DenseMatrix::from_rows({{3, 0}, {0, 1}})), 2.0, 10.0));
  CHECK(spectral_event_check(LinearOperator::from_dense(DenseMatrix::from_rows({{1, 0}, {0, 0}})), 0.5, 2.0));
}

TEST_CASE("true iteration test") {
  const AffineProblem p(DenseMatrix::identity(2), {0, 0}, 0.5, true, {0, 0});
  const Vector x{0.8, 0.0};
  const auto jt = LinearOperator::identity(2);
  CHECK(true_iteration_check(p, x, x, jt, 0.1, 1.0, AccuracyVariant::gradient));
  CHECK_FALSE(true_iteration_check(p, x, Vector{1.0, 0.0}, jt, 0.1, 1.0, AccuracyVariant::gradient));
  CHECK(true_iteration_check(p, x, Vector{1.0, 0.0}, jt, 0.3, 1.0, AccuracyVariant::gradient));
  CHECK(true_iteration_check(p, x, x, jt, 0.1, 1.0, AccuracyVariant::jacobian));
}
