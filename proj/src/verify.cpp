#include "sgn/verify.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "sgn/harness.hpp"
#include "sgn/krylov.hpp"
#include "sgn/linops.hpp"
#include "sgn/problems.hpp"
#include "sgn/sampling.hpp"
#include "sgn/solver.hpp"

namespace sgn::verify {

namespace {

struct Outcome {
  bool passed;
  std::string detail;
};

template <typename Fn>
CheckResult timed(int id, std::string name, double limit, Fn&& fn) {
  CheckResult r;
  r.id = id;
  r.name = std::move(name);
  r.limit_seconds = limit;
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.passed = o.passed && r.seconds < limit;
  r.detail = o.detail;
  if (o.passed && r.seconds >= limit) r.detail += " [over time limit]";
  return r;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Vector normal_vector(std::size_t n, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Vector v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

DenseMatrix to_dense(const Eigen::MatrixXd& a) {
  DenseMatrix d(static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(a.cols()));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) d(i, j) = a(i, j);
  return d;
}

// Small instances of the three families shared by the randomized property checks.
struct Family {
  ProblemPtr problem;
  std::vector<SampleKind> kinds;
};

std::vector<Family> small_families() {
  Rng rng = make_rng(2024);
  auto logistic = std::make_shared<Dataset>(make_logistic_dataset(60, 8, rng));
  auto separable = std::make_shared<Dataset>(make_separable_dataset(80, 6, 0.2, rng));
  return {
      {sigmoid_ls_problem(logistic), {SampleKind::row_compression, SampleKind::entry_sparsification}},
      {ie_problem(20), {SampleKind::row_compression, SampleKind::entry_sparsification}},
      {softmax_problem(separable),
       {SampleKind::row_compression, SampleKind::entry_sparsification, SampleKind::sum_subsampling}},
  };
}

SolverConfig random_config(SampleKind kind, bool square, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SolverConfig s;
  s.eta_bar = 0.9 * unit(rng);
  if (unit(rng) < 0.1) s.eta_bar = 0.0;
  SamplePlan& p = s.sample_plan;
  p.kind = kind;
  p.probability_mode = unit(rng) < 0.5 ? ProbabilityMode::uniform : ProbabilityMode::importance;
  p.alpha = 0.1 + 2.0 * unit(rng);
  p.delta = 0.05 + 0.9 * unit(rng);
  p.gamma = 0.05 + 0.95 * unit(rng);
  p.keep_diagonal = square && unit(rng) < 0.7;
  if (kind == SampleKind::entry_sparsification && unit(rng) < 0.5) p.fixed_density = 0.1 + 0.85 * unit(rng);
  if (kind == SampleKind::sum_subsampling) p.min_fraction = 0.3 * unit(rng);
  return s;
}

Outcome run_proposals(int count, const std::vector<double>& lambdas, std::uint64_t seed) {
  const auto families = small_families();
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_descent = -1.0, worst_ratio = 1e300;
  int fallbacks = 0, stationary = 0, violations = 0;
  for (int i = 0; i < count; ++i) {
    const Family& fam = families[static_cast<std::size_t>(i) % families.size()];
    const SampleKind kind = fam.kinds[(static_cast<std::size_t>(i) / families.size()) % fam.kinds.size()];
    const ResidualProblem& prob = *fam.problem;
    SolverConfig cfg = random_config(kind, prob.residual_size() == prob.variable_size(), rng);
    if (!lambdas.empty()) cfg.lambda = lambdas[static_cast<std::size_t>(i) % lambdas.size()];
    const Vector x = normal_vector(prob.variable_size(), rng, prob.name() == "ie" ? 1.0 : 0.7);
    const double t = std::pow(10.0, -3.0 * unit(rng));
    std::optional<double> previous;
    if (unit(rng) < 0.5) previous = std::pow(10.0, -2.0 + 3.0 * unit(rng));
    const StepProposal p = propose_step(prob, x, t, cfg, rng, previous);
    if (p.used_fallback) ++fallbacks;
    if (p.stationary_model) ++stationary;
    const double ns = norm2(p.s), ng = norm2(p.g);
    if (lambdas.empty()) {
      if (!(p.descent_value <= 1e-12 * ns * ng)) ++violations;
      if (ns > 0 && ng > 0) worst_descent = std::max(worst_descent, p.descent_value / (ns * ng));
    } else {
      const double lam = *cfg.lambda;
      if (!(-p.descent_value >= lam * ns * ns * (1.0 - 1e-8))) ++violations;
      if (ns > 0) worst_ratio = std::min(worst_ratio, -p.descent_value / (lam * ns * ns));
    }
  }
  std::ostringstream d;
  d << count << " proposals, violations=" << violations;
  if (lambdas.empty())
    d << ", max sᵀg/(‖s‖‖g‖)=" << fmt("%.3e", worst_descent);
  else
    d << ", min −sᵀg/(λ‖s‖²)=" << fmt("%.6f", worst_ratio);
  d << ", fallbacks=" << fallbacks << ", stationary=" << stationary;
  return {violations == 0, d.str()};
}

// Outer-loop ledger on one trace; returns the first inconsistency or empty.
std::string ledger_error(const Trace& tr, const SolverConfig& cfg) {
  const auto& rs = tr.records;
  for (std::size_t k = 0; k < rs.size(); ++k) {
    const auto& r = rs[k];
    const double f_next = k + 1 < rs.size() ? rs[k + 1].f : tr.f_final;
    if (r.successful) {
      if (!armijo_accept(r.f, r.f_trial, r.t, r.descent_value, cfg.c)) return "Armijo fails at k=" + std::to_string(k);
      if (f_next != r.f_trial) return "accepted f not carried at k=" + std::to_string(k);
      if (f_next > r.f) return "f increased at k=" + std::to_string(k);
    } else if (f_next != r.f) {
      return "f changed on unsuccessful k=" + std::to_string(k);
    }
    if (r.descent_value > 0.0) return "ascent direction at k=" + std::to_string(k);
    if (k + 1 < rs.size() && rs[k + 1].t != step_update(r.t, r.successful, cfg.tau, cfg.t_max))
      return "step length transition broken at k=" + std::to_string(k);
  }
  return {};
}

struct IeRuns {
  std::vector<Trace> exact, sparse;
};

IeRuns ie_runs(IeForm form) {
  const ProblemPtr prob = ie_problem(300, form);
  IeRuns out;
  for (std::uint64_t seed = 1; seed <= 11; ++seed) {
    for (int variant = 0; variant < 2; ++variant) {
      SolverConfig s;
      s.eta_bar = 0.1;
      s.seed = seed;
      s.sample_plan.kind = SampleKind::entry_sparsification;
      s.sample_plan.probability_mode = ProbabilityMode::uniform;
      s.sample_plan.keep_diagonal = true;
      s.sample_plan.fixed_density = variant == 0 ? 1.0 : 0.25;
      s.stop.epsilon_F = 1e-6;
      s.stop.max_iterations = 300;
      (variant == 0 ? out.exact : out.sparse).push_back(sgn_run(prob, s));
    }
  }
  return out;
}

double median_cost(const std::vector<Trace>& traces) {
  std::vector<ReplicateResult> reps;
  for (std::size_t i = 0; i < traces.size(); ++i) reps.push_back({i, traces[i], {}});
  return traces[median_replicate(reps)].total_cost;
}

struct RunStats {
  std::size_t max_iters = 0;
  std::size_t converged = 0;
  double median = 0.0;
};

RunStats stats(const std::vector<Trace>& traces) {
  RunStats s;
  for (const auto& t : traces) {
    s.max_iters = std::max(s.max_iters, t.iterations());
    if (t.status == TerminationStatus::residual_tol) ++s.converged;
  }
  s.median = median_cost(traces);
  return s;
}

Outcome ie_outcome(const IeRuns& runs) {
  const RunStats e = stats(runs.exact), s = stats(runs.sparse);
  std::ostringstream d;
  d << "exact: " << e.converged << "/11 converged, max iters " << e.max_iters << " (limit 15), median cost "
    << fmt("%.4e", e.median) << "; s=0.25: " << s.converged << "/11 converged, max iters " << s.max_iters
    << " (limit 60), median cost " << fmt("%.4e", s.median);
  const bool ok = e.converged == 11 && e.max_iters <= 15 && s.converged == 11 && s.max_iters <= 60 && s.median < e.median;
  return {ok, d.str()};
}

}  // namespace

CheckResult krylov_oracle() {
  return timed(1, "Krylov oracle equivalence", 10.0, [] {
    Rng rng = make_rng(101);
    std::uniform_int_distribution<int> rows(1, 50), cols(1, 30);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    int deficient = 0;
    for (int inst = 0; inst < 100; ++inst) {
      const int m = rows(rng), n = cols(rng), full = std::min(m, n);
      int r = full;
      if (inst % 3 == 0 && full > 1) r = std::uniform_int_distribution<int>(1, full - 1)(rng);
      if (r < full) ++deficient;
      Eigen::MatrixXd u(m, r), v(r, n);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < r; ++j) u(i, j) = normal(rng);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < n; ++j) v(i, j) = normal(rng);
      const Eigen::MatrixXd a = u * v;
      Eigen::VectorXd b(m);
      for (int i = 0; i < m; ++i) b(i) = normal(rng);
      const Eigen::VectorXd expected = a.completeOrthogonalDecomposition().solve(-b);
      const Vector bv(b.data(), b.data() + m);
      const KrylovResult res = krylov_ls_solve(LinearOperator::from_dense(to_dense(a)), bv, 1e-12);
      double diff = 0.0;
      for (int j = 0; j < n; ++j) diff += std::pow(res.step[j] - expected(j), 2);
      worst = std::max(worst, std::sqrt(diff) / std::max(expected.norm(), 1e-300));
    }
    return Outcome{worst <= 1e-6, "100 instances (" + std::to_string(deficient) + " rank-deficient), max relative error " +
                                      fmt("%.3e", worst) + " (limit 1e-6)"};
  });
}

CheckResult descent_invariant() {
  return timed(2, "Descent invariant sᵀg <= 0", 60.0, [] { return run_proposals(1000, {}, 202); });
}

CheckResult estimator_unbiasedness() {
  return timed(3, "Estimator unbiasedness", 60.0, [] {
    const int draws = 20000;
    int checked = 0, outside = 0;
    double worst_z = 0.0;
    auto compare = [&](const std::vector<Vector>& samples_sum, const Vector& exact) {
      // samples_sum[0] = Σx, samples_sum[1] = Σx²
      for (std::size_t c = 0; c < exact.size(); ++c) {
        const double mean = samples_sum[0][c] / draws;
        const double var = std::max(0.0, samples_sum[1][c] / draws - mean * mean);
        const double se = std::sqrt(var / draws);
        ++checked;
        if (se == 0.0) {
          if (std::abs(mean - exact[c]) > 1e-12 * (1.0 + std::abs(exact[c]))) ++outside;
          continue;
        }
        const double z = std::abs(mean - exact[c]) / se;
        worst_z = std::max(worst_z, z);
        if (z > 4.0) ++outside;
      }
    };
    auto accumulate = [](std::vector<Vector>& acc, std::span<const double> x) {
      for (std::size_t c = 0; c < x.size(); ++c) {
        acc[0][c] += x[c];
        acc[1][c] += x[c] * x[c];
      }
    };

    Rng rng = make_rng(303);
    // row-compressed gradient, 20×5
    auto data = std::make_shared<Dataset>(make_logistic_dataset(20, 5, rng));
    const ProblemPtr ls = sigmoid_ls_problem(data);
    const Vector x = normal_vector(5, rng);
    const Vector grad = ls->gradient(x);
    const Vector r = ls->residual(x);
    auto jac = ls->jacobian(x);
    for (int mode = 0; mode < 2; ++mode) {
      const Vector probs = mode == 0 ? Vector(20, 1.0 / 20) : row_probs_importance(*jac, r);
      std::vector<Vector> acc(2, Vector(5, 0.0));
      for (int d = 0; d < draws; ++d)
        accumulate(acc, row_compress(*jac, r, ls->gradient_scale(), draw_indices(probs, 4, rng), probs).gradient);
      compare(acc, grad);
    }

    // sparsified 6×6
    DenseMatrix j(6, 6);
    std::normal_distribution<double> normal;
    for (std::size_t a = 0; a < 6; ++a)
      for (std::size_t b = 0; b < 6; ++b) j(a, b) = (a + b) % 4 == 3 ? 0.0 : normal(rng);
    {
      const DenseMatrix probs = entry_probs_importance(j);
      std::vector<Vector> acc(2, Vector(36, 0.0));
      for (int d = 0; d < draws; ++d) accumulate(acc, sparsify_importance(j, probs, 7, false, rng).to_dense().data());
      compare(acc, Vector(j.data().begin(), j.data().end()));
    }

    // subsampled sum operator, N = 50
    auto sep = std::make_shared<Dataset>(make_separable_dataset(50, 4, 0.1, rng));
    const ProblemPtr sm = softmax_problem(sep);
    const Vector xs = normal_vector(4, rng);
    const Vector v = normal_vector(4, rng);
    auto sj = sm->jacobian(xs);
    const Vector exact = sgn::apply(sj->full_operator(), v);
    std::vector<Vector> acc(2, Vector(4, 0.0));
    std::uniform_int_distribution<std::size_t> pick(0, 49);
    for (int d = 0; d < draws; ++d) {
      std::vector<std::size_t> sample(5);
      for (auto& i : sample) i = pick(rng);
      accumulate(acc, sgn::apply(subsample_sum_operator(sj, sample, 50.0), v));
    }
    compare(acc, exact);

    return Outcome{outside == 0, std::to_string(checked) + " components over " + std::to_string(draws) +
                                     " draws each, outside 4 SE: " + std::to_string(outside) + ", max |z| " +
                                     fmt("%.2f", worst_z)};
  });
}

CheckResult bernstein_coverage() {
  return timed(4, "Bernstein coverage", 60.0, [] {
    Rng rng = make_rng(404);
    DenseMatrix j(10, 10);
    std::normal_distribution<double> normal;
    for (std::size_t a = 0; a < 10; ++a)
      for (std::size_t b = 0; b < 10; ++b) j(a, b) = normal(rng);
    const double rho = 0.5 * spectral_norm(j);
    const DenseMatrix probs = entry_probs_importance(j);
    const EntryMoments mom = entry_sampling_moments(j, probs);
    const std::size_t w = bernstein_sample_size(mom.v, mom.M, rho, 0.2, 20);
    int hits = 0;
    for (int trial = 0; trial < 500; ++trial) {
      const DenseMatrix approx = sparsify_importance(j, probs, w, false, rng).to_dense();
      if (spectral_norm(j - approx) <= rho) ++hits;
    }
    const double freq = hits / 500.0;
    const double threshold = 0.8 - 3.0 * std::sqrt(0.8 * 0.2 / 500.0);
    return Outcome{freq >= threshold, "w=" + std::to_string(w) + ", coverage " + fmt("%.3f", freq) + " (threshold " +
                                          fmt("%.3f", threshold) + ")"};
  });
}

CheckResult armijo_ledger() {
  return timed(5, "Armijo and step-length ledger", 60.0, [] {
    Rng data_rng = make_rng(505);
    auto logistic = std::make_shared<Dataset>(make_logistic_dataset(200, 10, data_rng));
    auto separable = std::make_shared<Dataset>(make_separable_dataset(200, 5, 0.3, data_rng));
    const ProblemPtr problems[] = {ie_problem(50), sigmoid_ls_problem(logistic), softmax_problem(separable)};
    int runs = 0, records = 0, successes = 0;
    std::string error;
    for (int i = 0; i < 20 && error.empty(); ++i) {
      const ProblemPtr& prob = problems[i % 3];
      SolverConfig s;
      s.seed = 1000 + static_cast<std::uint64_t>(i);
      s.eta_bar = (i % 4 == 0) ? 0.5 : 0.1;
      s.stop.epsilon_F = 1e-6;
      s.stop.max_iterations = 150;
      SamplePlan& p = s.sample_plan;
      if (prob->name() == "ie") {
        p.kind = SampleKind::entry_sparsification;
        p.keep_diagonal = true;
        if (i % 2 == 0)
          p.fixed_density = 0.5;
        else
          p.probability_mode = ProbabilityMode::importance;
      } else if (prob->name() == "sigmoid_ls") {
        p.kind = i % 2 == 0 ? SampleKind::row_compression : SampleKind::entry_sparsification;
        p.probability_mode = i % 4 < 2 ? ProbabilityMode::uniform : ProbabilityMode::importance;
        p.gamma = 0.1;
        s.stop.chi = 1e-3;
        s.stop.epsilon_F = 1e-3;
      } else {
        p.kind = SampleKind::sum_subsampling;
        p.min_fraction = 0.1;
        s.eta_bar = 1e-3;
        s.stop.epsilon_F = 1e-3;
      }
      const Trace tr = sgn_run(prob, s);
      ++runs;
      records += static_cast<int>(tr.records.size());
      for (const auto& r : tr.records) successes += r.successful ? 1 : 0;
      error = ledger_error(tr, s);
      if (!error.empty()) error = prob->name() + " run " + std::to_string(i) + ": " + error;
    }
    return Outcome{error.empty(), error.empty() ? std::to_string(runs) + " runs, " + std::to_string(records) +
                                                      " records (" + std::to_string(successes) + " successful) consistent"
                                                : error};
  });
}

CheckResult weyl_perturbation() {
  return timed(6, "Weyl perturbation bound", 10.0, [] {
    Rng rng = make_rng(606);
    std::uniform_int_distribution<int> dim(1, 20);
    std::uniform_real_distribution<double> mag(-6.0, 1.0);
    std::normal_distribution<double> normal;
    double worst = -1e300;
    for (int inst = 0; inst < 100; ++inst) {
      const std::size_t m = static_cast<std::size_t>(dim(rng)), n = static_cast<std::size_t>(dim(rng));
      const double eps = std::pow(10.0, mag(rng));
      DenseMatrix a(m, n), delta(m, n);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          a(i, j) = normal(rng);
          delta(i, j) = eps * normal(rng);
        }
      const auto sa = singular_values(a);
      const auto sb = singular_values(a + delta);
      const double bound = spectral_norm(delta);
      for (std::size_t i = 0; i < sa.size(); ++i) worst = std::max(worst, std::abs(sa[i] - sb[i]) - bound);
    }
    return Outcome{worst <= 1e-10, "100 pairs, max |σ_i(A)−σ_i(A+Δ)| − ‖Δ‖ = " + fmt("%.3e", worst)};
  });
}

CheckResult regularized_bound() {
  return timed(7, "Regularized model bound", 30.0, [] { return run_proposals(200, {1e-3, 1e-1}, 707); });
}

CheckResult ie_desk_scale() {
  return timed(8, "IE desk-scale convergence (n=300)", 300.0, [] { return ie_outcome(ie_runs(IeForm::unweighted)); });
}

CheckResult ie_quadrature_variant() {
  return timed(0, "IE with quadrature weights (informational)", 300.0,
               [] { return ie_outcome(ie_runs(IeForm::quadrature_weighted)); });
}

CheckResult softmax_desk_scale() {
  return timed(9, "Softmax desk-scale (N=2000, n=10)", 300.0, [] {
    ProblemSpec spec;
    spec.family = "softmax";
    spec.examples = 2000;
    spec.n = 10;
    spec.synthetic = "separable";
    spec.margin = 0.5;
    spec.data_seed = 9;
    const ProblemPtr prob = make_problem(spec);
    std::vector<Trace> sub, full;
    for (std::uint64_t seed = 1; seed <= 11; ++seed) {
      for (double xi : {0.1, 1.0}) {
        SolverConfig s;
        s.seed = seed;
        s.eta_bar = 1e-3;
        s.sample_plan.kind = SampleKind::sum_subsampling;
        s.sample_plan.alpha = 1.0;
        s.sample_plan.delta = 0.4;
        s.sample_plan.min_fraction = xi;
        s.stop.epsilon_F = 1e-3;
        s.stop.max_iterations = 2000;
        (xi < 1.0 ? sub : full).push_back(sgn_run(prob, s));
      }
    }
    const RunStats a = stats(sub), b = stats(full);
    std::ostringstream d;
    d << "xi=0.1: " << a.converged << "/11 converged, median cost " << fmt("%.4e", a.median) << "; xi=1: "
      << b.converged << "/11 converged, median cost " << fmt("%.4e", b.median);
    return Outcome{a.converged == 11 && b.converged == 11 && a.median < b.median, d.str()};
  });
}

CheckResult gradient_consistency() {
  return timed(10, "Gradient consistency (finite differences)", 30.0, [] {
    Rng rng = make_rng(1010);
    auto logistic = std::make_shared<Dataset>(make_logistic_dataset(40, 6, rng));
    auto separable = std::make_shared<Dataset>(make_separable_dataset(30, 5, 0.1, rng));
    const ProblemPtr problems[] = {sigmoid_ls_problem(logistic), sigmoid_ls_problem(logistic, LsScaling::sum_squares),
                                   ie_problem(12), softmax_problem(separable)};
    double worst = 0.0;
    int points = 0;
    for (const auto& prob : problems) {
      const std::size_t n = prob->variable_size();
      for (int p = 0; p < 10; ++p, ++points) {
        const Vector x = normal_vector(n, rng, 0.8);
        const Vector r = prob->residual(x);
        auto jac = prob->jacobian(x);
        // JᵀR from row access, or from the terms when the Jacobian is a sum
        Vector jtr(n, 0.0);
        if (jac->term_count() > 0) {
          for (std::size_t i = 0; i < jac->term_count(); ++i) jac->accumulate_term(i, 1.0, r, jtr);
        } else {
          std::vector<std::size_t> cols;
          std::vector<double> vals;
          for (std::size_t i = 0; i < jac->rows(); ++i) {
            jac->row(i, cols, vals);
            for (std::size_t c = 0; c < cols.size(); ++c) jtr[cols[c]] += vals[c] * r[i];
          }
        }
        scale(prob->gradient_scale(), jtr);
        const double h = 1e-6;
        Vector fd(n), xp = x, xm = x;
        for (std::size_t j = 0; j < n; ++j) {
          xp[j] += h;
          xm[j] -= h;
          fd[j] = (prob->objective(xp) - prob->objective(xm)) / (2 * h);
          xp[j] = xm[j] = x[j];
        }
        double diff = 0.0;
        for (std::size_t j = 0; j < n; ++j) diff += std::pow(fd[j] - jtr[j], 2);
        worst = std::max(worst, std::sqrt(diff) / norm2(jtr));
      }
    }
    return Outcome{worst <= 1e-5, std::to_string(points) + " points over 3 families, max relative error " +
                                      fmt("%.3e", worst) + " (limit 1e-5)"};
  });
}

CheckResult determinism_roundtrip() {
  return timed(11, "Determinism and CSV round-trip", 10.0, [] {
    Rng rng = make_rng(1111);
    auto data = std::make_shared<Dataset>(make_logistic_dataset(300, 10, rng));
    const ProblemPtr prob = sigmoid_ls_problem(data);
    SolverConfig s;
    s.seed = 77;
    s.sample_plan.kind = SampleKind::row_compression;
    s.sample_plan.probability_mode = ProbabilityMode::importance;
    s.sample_plan.gamma = 0.1;
    s.stop.max_iterations = 40;
    const Trace a = sgn_run(prob, s), b = sgn_run(prob, s);
    std::ostringstream ca, cb;
    write_trace_csv(a, ca);
    write_trace_csv(b, cb);
    if (ca.str() != cb.str()) return Outcome{false, "trace CSV differs between identical runs"};
    std::istringstream in(ca.str());
    const Trace back = read_trace_csv(in);
    if (back.records.size() != a.records.size()) return Outcome{false, "record count changed in round-trip"};
    for (std::size_t k = 0; k < a.records.size(); ++k) {
      const auto &x = a.records[k], &y = back.records[k];
      const bool same = x.k == y.k && x.t == y.t && x.successful == y.successful && x.f == y.f &&
                        x.grad_norm == y.grad_norm && x.residual_norm == y.residual_norm &&
                        x.sample_size == y.sample_size && x.inner_iterations == y.inner_iterations &&
                        x.cost_increment == y.cost_increment && x.cumulative_cost == y.cumulative_cost;
      if (!same) return Outcome{false, "record " + std::to_string(k) + " differs after round-trip"};
    }
    if (back.total_cost != a.total_cost) return Outcome{false, "total cost differs after round-trip"};
    return Outcome{true, std::to_string(a.records.size()) + " records, " + std::to_string(ca.str().size()) +
                             " bytes identical, parse-back exact"};
  });
}

std::vector<CheckResult> run_all(const std::function<void(const CheckResult&)>& on_result) {
  std::vector<CheckResult> out;
  for (auto check : {krylov_oracle, descent_invariant, estimator_unbiasedness, bernstein_coverage, armijo_ledger,
                     weyl_perturbation, regularized_bound, ie_desk_scale, softmax_desk_scale, gradient_consistency,
                     determinism_roundtrip}) {
    out.push_back(check());
    if (on_result) on_result(out.back());
  }
  return out;
}

std::string format(const CheckResult& r) {
  char head[160];
  if (r.id > 0)
    std::snprintf(head, sizeof head, "[%s] criterion %d: %s (%.2fs, limit %.0fs)", r.passed ? "PASS" : "FAIL", r.id,
                  r.name.c_str(), r.seconds, r.limit_seconds);
  else
    std::snprintf(head, sizeof head, "[INFO] %s (%.2fs)", r.name.c_str(), r.seconds);
  return std::string(head) + " :: " + r.detail;
}

}  // namespace sgn::verify
