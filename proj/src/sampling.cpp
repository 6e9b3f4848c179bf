#include "sgn/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <ranges>
#include <stdexcept>
#include <string>

#include "sgn/errors.hpp"

namespace sgn {

namespace {

constexpr double kHugeCount = 1e18;

std::size_t ceil_count(double x) {
  if (!(x < kHugeCount)) return static_cast<std::size_t>(kHugeCount);
  if (x <= 0.0) return 0;
  // absorb rounding noise such as 0.01*6000 = 60.000000000000007
  return static_cast<std::size_t>(std::ceil(x * (1.0 - 4.0 * std::numeric_limits<double>::epsilon())));
}

void require_probability(double delta, const char* name) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument(std::string(name) + " must lie in (0, 1)");
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0)) throw std::invalid_argument(std::string(name) + " must be positive");
}

}  // namespace

void SamplePlan::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("sample plan: alpha must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("sample plan: delta must lie in (0, 1)");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("sample plan: gamma must lie in (0, 1]");
  if (!(min_fraction >= 0.0 && min_fraction <= 1.0)) throw ConfigError("sample plan: min_fraction must lie in [0, 1]");
  if (m_max && *m_max == 0) throw ConfigError("sample plan: m_max must be at least 1");
  if (fixed_density && !(*fixed_density > 0.0 && *fixed_density <= 1.0))
    throw ConfigError("sample plan: fixed_density must lie in (0, 1]");
  if (total_scaling && !(*total_scaling > 0.0)) throw ConfigError("sample plan: total_scaling must be positive");
  if (!(gradient_floor >= 0.0)) throw ConfigError("sample plan: gradient_floor must be non-negative");
}

std::size_t bernstein_sample_size(double v, double M, double rho, double delta, std::size_t dims_sum) {
  require_probability(delta, "delta");
  require_positive(rho, "rho");
  if (dims_sum < 2) throw std::invalid_argument("dims_sum must be at least 2");
  if (v < 0.0 || M < 0.0) throw std::invalid_argument("v and M must be non-negative");
  const double w = (2.0 * v / (rho * rho) + 4.0 * M / (3.0 * rho)) * std::log(static_cast<double>(dims_sum) / delta);
  return std::max<std::size_t>(1, ceil_count(w));
}

std::size_t rc_sample_size(std::span<const double> residual, double rho, double gamma, std::size_t m_max,
                           std::size_t m, std::size_t n, double delta_g, double min_fraction) {
  require_positive(rho, "rho");
  require_probability(delta_g, "delta_g");
  const double r2 = std::pow(norm2(residual), 2);
  const double rinf = norm_inf(residual);
  const double rule = 2.0 * gamma * (r2 / (rho * rho) + 2.0 * rinf / (3.0 * rho)) *
                      std::log(static_cast<double>(n + 1) / delta_g);
  const std::size_t floor = ceil_count(min_fraction * static_cast<double>(m));
  const std::size_t size = std::max(floor, std::min(m_max, ceil_count(rule)));
  return std::clamp<std::size_t>(size, 1, std::max<std::size_t>(m, 1));
}

std::vector<std::size_t> draw_indices(std::span<const double> probabilities, std::size_t size, Rng& rng) {
  std::discrete_distribution<std::size_t> dist(probabilities.begin(), probabilities.end());
  std::vector<std::size_t> drawn(size);
  for (auto& i : drawn) i = dist(rng);
  return drawn;
}

Vector row_probs_importance(const JacobianView& jac, std::span<const double> residual) {
  const std::size_t m = jac.rows();
  Vector row_sq(m), contrib(m);
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  for (std::size_t i = 0; i < m; ++i) {
    jac.row(i, cols, vals);
    const double nr = norm2(vals);
    row_sq[i] = nr * nr;
    contrib[i] = nr * std::abs(residual[i]);
  }
  const double fro2 = std::accumulate(row_sq.begin(), row_sq.end(), 0.0);
  const double total = std::accumulate(contrib.begin(), contrib.end(), 0.0);
  if (fro2 == 0.0) return Vector(m, 1.0 / static_cast<double>(m));
  Vector p(m);
  for (std::size_t i = 0; i < m; ++i)
    p[i] = total > 0.0 ? 0.5 * (row_sq[i] / fro2 + contrib[i] / total) : row_sq[i] / fro2;
  return p;
}

namespace {

SampledModel model_from(LinearOperator op, std::span<const double> residual, double scaling) {
  Vector g = sgn::apply(op, residual, true);
  scale(scaling, g);
  SampledModel model{std::move(op), Vector(residual.begin(), residual.end()), std::move(g)};
  model.scaling = scaling;
  return model;
}

SampledModel exact_model(const JacobianView& jac, std::span<const double> residual, double scaling,
                         std::size_t population) {
  SampledModel model = model_from(jac.full_operator(), residual, scaling);
  model.sample_size = population;
  model.evaluation_fraction = 1.0;
  model.exact = true;
  return model;
}

}  // namespace

SampledModel row_compress(const JacobianView& jac, std::span<const double> residual, double scaling,
                          std::span<const std::size_t> drawn, std::span<const double> probabilities) {
  const std::size_t m = jac.rows(), size = drawn.size();
  if (size == 0) throw std::invalid_argument("row_compress: empty sample");
  if (residual.size() != m || probabilities.size() != m)
    throw std::invalid_argument("dimension mismatch: row_compress expects " + std::to_string(m) + " rows");
  std::vector<Triplet> triplets;
  Vector compressed(size);
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  for (std::size_t k = 0; k < size; ++k) {
    const std::size_t i = drawn[k];
    if (!(probabilities[i] > 0.0)) throw std::invalid_argument("row_compress: drawn row has zero probability");
    const double weight = 1.0 / (static_cast<double>(size) * probabilities[i]);
    jac.row(i, cols, vals);
    for (std::size_t c = 0; c < cols.size(); ++c) triplets.push_back({k, cols[c], weight * vals[c]});
    compressed[k] = residual[i];
  }
  SampledModel model =
      model_from(LinearOperator::from_sparse(assemble_sparse(triplets, size, jac.cols())), compressed, scaling);
  model.sample_size = size;
  model.evaluation_fraction = static_cast<double>(size) / static_cast<double>(m);
  return model;
}

SampledModel row_compress(const ResidualProblem& problem, std::span<const double> x, std::size_t size,
                          std::span<const double> probabilities, Rng& rng) {
  if (size == 0) throw std::invalid_argument("row_compress: size must be at least 1");
  const double total = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-10) throw std::invalid_argument("row_compress: probabilities must sum to 1");
  const Vector r = problem.residual(x);
  auto jac = problem.jacobian(x);
  const auto drawn = draw_indices(probabilities, size, rng);
  return row_compress(*jac, r, problem.gradient_scale(), drawn, probabilities);
}

DenseMatrix entry_probs_importance(const DenseMatrix& j, bool exclude_diagonal) {
  double fro2 = 0.0, l1 = 0.0;
  for (std::size_t r = 0; r < j.rows(); ++r)
    for (std::size_t c = 0; c < j.cols(); ++c) {
      if (exclude_diagonal && r == c) continue;
      fro2 += j(r, c) * j(r, c);
      l1 += std::abs(j(r, c));
    }
  if (l1 == 0.0) throw std::invalid_argument("entry_probs_importance: matrix has no nonzero entries to sample");
  DenseMatrix p(j.rows(), j.cols());
  for (std::size_t r = 0; r < j.rows(); ++r)
    for (std::size_t c = 0; c < j.cols(); ++c) {
      if (exclude_diagonal && r == c) continue;
      p(r, c) = 0.5 * (j(r, c) * j(r, c) / fro2 + std::abs(j(r, c)) / l1);
    }
  return p;
}

std::size_t sparsify_size_importance(double l1, double fro2, std::size_t n, double alpha, double t,
                                     double delta_J) {
  return sparsify_size_importance(l1, fro2, n, n, alpha, t, delta_J, n * (n - 1));
}

std::size_t sparsify_size_importance(double l1, double fro2, std::size_t m, std::size_t n, double alpha, double t,
                                     double delta_J, std::size_t cap) {
  require_positive(t, "t");
  require_positive(alpha, "alpha");
  require_probability(delta_J, "delta_J");
  const double at = alpha * t;
  const double big = static_cast<double>(std::max(m, n));
  const double rule =
      (8.0 * l1 / (3.0 * at) + 4.0 * big * fro2 / (at * at)) * std::log(static_cast<double>(m + n) / delta_J);
  return std::max<std::size_t>(1, std::min(cap, ceil_count(rule)));
}

EntryMoments entry_sampling_moments(const DenseMatrix& j, const DenseMatrix& probs) {
  Vector row_sum(j.rows(), 0.0), col_sum(j.cols(), 0.0);
  EntryMoments out;
  for (std::size_t r = 0; r < j.rows(); ++r)
    for (std::size_t c = 0; c < j.cols(); ++c) {
      const double p = probs(r, c);
      if (p <= 0.0) continue;
      const double a = j(r, c);
      row_sum[r] += a * a / p;
      col_sum[c] += a * a / p;
      out.M = std::max(out.M, std::abs(a) / p);
    }
  out.v = std::max(*std::max_element(row_sum.begin(), row_sum.end()), *std::max_element(col_sum.begin(), col_sum.end()));
  return out;
}

SparseMatrix sparsify_importance(const DenseMatrix& j, const DenseMatrix& probs, std::size_t size,
                                 bool keep_diagonal, Rng& rng) {
  if (size == 0) throw std::invalid_argument("sparsify_importance: size must be at least 1");
  const std::size_t cols = j.cols();
  Vector flat(probs.data().begin(), probs.data().end());
  if (keep_diagonal)
    for (std::size_t i = 0; i < std::min(j.rows(), cols); ++i) flat[i * cols + i] = 0.0;
  const double total = std::accumulate(flat.begin(), flat.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("sparsify_importance: no entry has positive probability");
  for (double& p : flat) p /= total;
  const auto drawn = draw_indices(flat, size, rng);
  std::vector<Triplet> triplets;
  triplets.reserve(size + cols);
  const double inv = 1.0 / static_cast<double>(size);
  for (std::size_t k : drawn) {
    const std::size_t r = k / cols, c = k % cols;
    triplets.push_back({r, c, inv * j(r, c) / flat[k]});
  }
  if (keep_diagonal)
    for (std::size_t i = 0; i < std::min(j.rows(), cols); ++i) triplets.push_back({i, i, j(i, i)});
  return assemble_sparse(triplets, j.rows(), cols);
}

namespace {

// Position k of the sampled population: all entries, or off-diagonal ones of a square matrix.
struct Population {
  std::size_t rows, cols;
  bool skip_diagonal;
  std::size_t size() const { return skip_diagonal ? rows * (cols - 1) : rows * cols; }
  std::pair<std::size_t, std::size_t> at(std::size_t k) const {
    if (!skip_diagonal) return {k / cols, k % cols};
    const std::size_t r = k / (cols - 1), c = k % (cols - 1);
    return {r, c < r ? c : c + 1};
  }
};

Population population_of(const JacobianView& jac, bool keep_diagonal) {
  const bool skip = keep_diagonal && jac.rows() == jac.cols() && jac.cols() > 1;
  return {jac.rows(), jac.cols(), skip};
}

void append_diagonal(const JacobianView& jac, const Population& pop, std::vector<Triplet>& triplets) {
  if (!pop.skip_diagonal) return;
  for (std::size_t i = 0; i < jac.rows(); ++i) triplets.push_back({i, i, jac.entry(i, i)});
}

}  // namespace

SparseMatrix sparsify_uniform_fixed(const JacobianView& jac, std::size_t size, bool keep_diagonal, Rng& rng) {
  const Population pop = population_of(jac, keep_diagonal);
  size = std::min(size, pop.size());
  std::vector<std::size_t> chosen(size);
  std::ranges::sample(std::views::iota(std::size_t{0}, pop.size()), chosen.begin(),
                      static_cast<std::ptrdiff_t>(size), rng);
  std::vector<Triplet> triplets;
  triplets.reserve(size + jac.rows());
  for (std::size_t k : chosen) {
    auto [r, c] = pop.at(k);
    triplets.push_back({r, c, jac.entry(r, c)});
  }
  append_diagonal(jac, pop, triplets);
  return assemble_sparse(triplets, jac.rows(), jac.cols());
}

SparseMatrix sparsify_uniform_weighted(const JacobianView& jac, std::size_t size, bool keep_diagonal, Rng& rng) {
  if (size == 0) throw std::invalid_argument("sparsify_uniform_weighted: size must be at least 1");
  const Population pop = population_of(jac, keep_diagonal);
  std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
  const double weight = static_cast<double>(pop.size()) / static_cast<double>(size);
  std::vector<Triplet> triplets;
  triplets.reserve(size + jac.rows());
  for (std::size_t d = 0; d < size; ++d) {
    auto [r, c] = pop.at(pick(rng));
    triplets.push_back({r, c, weight * jac.entry(r, c)});
  }
  append_diagonal(jac, pop, triplets);
  return assemble_sparse(triplets, jac.rows(), jac.cols());
}

std::size_t sum_sample_size(double alpha, double t, double delta_J, std::size_t n, std::size_t N, double xi) {
  require_positive(t, "t");
  require_positive(alpha, "alpha");
  require_probability(delta_J, "delta_J");
  if (!(xi >= 0.0 && xi <= 1.0)) throw std::invalid_argument("xi must lie in [0, 1]");
  const double at = alpha * t;
  const double rule = (4.0 / at) * (1.0 / at + 1.0 / 3.0) * std::log(2.0 * static_cast<double>(n) / delta_J);
  const std::size_t size = std::max(ceil_count(xi * static_cast<double>(N)), std::min(N, ceil_count(rule)));
  return std::clamp<std::size_t>(size, 1, std::max<std::size_t>(N, 1));
}

LinearOperator subsample_sum_operator(std::shared_ptr<const JacobianView> terms, std::vector<std::size_t> sample,
                                      double total_scaling) {
  if (sample.empty()) throw std::invalid_argument("subsample_sum_operator: empty sample");
  for (std::size_t i : sample)
    if (i >= terms->term_count()) throw std::out_of_range("subsample_sum_operator: term index " + std::to_string(i));
  const double weight = total_scaling / static_cast<double>(sample.size());
  auto drawn = std::make_shared<const std::vector<std::size_t>>(std::move(sample));
  auto fn = [terms, drawn, weight](std::span<const double> v, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i : *drawn) terms->accumulate_term(i, weight, v, out);
  };
  return LinearOperator(terms->cols(), terms->cols(), fn, fn, true);
}

SampledModel build_sampled_model(const ResidualProblem& problem, std::shared_ptr<const JacobianView> jac,
                                 std::span<const double> residual, const SamplePlan& plan, double t,
                                 double previous_gradient_norm, Rng& rng) {
  const std::size_t m = jac->rows(), n = jac->cols();
  const double scaling = problem.gradient_scale();

  switch (plan.kind) {
    case SampleKind::row_compression: {
      const std::size_t m_max = std::min(plan.m_max.value_or(m), m);
      const double rho = plan.alpha * t * std::max(plan.gradient_floor, previous_gradient_norm);
      const std::size_t size =
          rho > 0.0 ? rc_sample_size(residual, rho, plan.gamma, m_max, m, n, plan.delta, plan.min_fraction)
                    : std::max(m_max, ceil_count(plan.min_fraction * static_cast<double>(m)));
      if (size >= m) return exact_model(*jac, residual, scaling, m);
      const Vector probs = plan.probability_mode == ProbabilityMode::importance
                               ? row_probs_importance(*jac, residual)
                               : Vector(m, 1.0 / static_cast<double>(m));
      return row_compress(*jac, residual, scaling, draw_indices(probs, size, rng), probs);
    }

    case SampleKind::entry_sparsification: {
      const Population pop = population_of(*jac, plan.keep_diagonal);
      const std::size_t diagonal_extra = pop.skip_diagonal ? n : 0;
      std::size_t size = 0;
      if (plan.fixed_density) {
        const double s = *plan.fixed_density;
        const double target = s * static_cast<double>(m) * static_cast<double>(n) - static_cast<double>(diagonal_extra);
        size = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(std::max(target, 1.0))), 1, pop.size());
      }
      SparseMatrix sparse;
      if (plan.probability_mode == ProbabilityMode::importance) {
        const DenseMatrix j = jac->dense();
        const DenseMatrix probs = entry_probs_importance(j, pop.skip_diagonal);
        if (!plan.fixed_density) {
          double l1 = 0.0, fro2 = 0.0;
          for (std::size_t k = 0; k < pop.size(); ++k) {
            auto [r, c] = pop.at(k);
            l1 += std::abs(j(r, c));
            fro2 += j(r, c) * j(r, c);
          }
          size = sparsify_size_importance(l1, fro2, m, n, plan.alpha, t, plan.delta, pop.size());
        }
        if (size >= pop.size()) return exact_model(*jac, residual, scaling, pop.size());
        sparse = sparsify_importance(j, probs, size, pop.skip_diagonal, rng);
      } else if (plan.fixed_density) {
        if (size >= pop.size()) return exact_model(*jac, residual, scaling, pop.size());
        sparse = sparsify_uniform_fixed(*jac, size, plan.keep_diagonal, rng);
      } else {
        // Bernstein size from the exact moments of uniform entry sampling
        const double p = 1.0 / static_cast<double>(pop.size());
        Vector row_sum(m, 0.0), col_sum(n, 0.0);
        double largest = 0.0;
        for (std::size_t k = 0; k < pop.size(); ++k) {
          auto [r, c] = pop.at(k);
          const double a = jac->entry(r, c);
          row_sum[r] += a * a / p;
          col_sum[c] += a * a / p;
          largest = std::max(largest, std::abs(a) / p);
        }
        const double v = std::max(*std::max_element(row_sum.begin(), row_sum.end()),
                                  *std::max_element(col_sum.begin(), col_sum.end()));
        size = std::min(pop.size(), bernstein_sample_size(v, largest, plan.alpha * t, plan.delta, m + n));
        if (size >= pop.size()) return exact_model(*jac, residual, scaling, pop.size());
        sparse = sparsify_uniform_weighted(*jac, size, plan.keep_diagonal, rng);
      }
      SampledModel model = model_from(LinearOperator::from_sparse(std::move(sparse)), residual, scaling);
      model.sample_size = size;
      model.evaluation_fraction =
          static_cast<double>(size + diagonal_extra) / (static_cast<double>(m) * static_cast<double>(n));
      return model;
    }

    case SampleKind::sum_subsampling: {
      const std::size_t terms = jac->term_count();
      if (terms == 0) throw ConfigError("sum subsampling needs a problem with term structure");
      const std::size_t size = sum_sample_size(plan.alpha, t, plan.delta, n, terms, plan.min_fraction);
      const double total = plan.total_scaling.value_or(static_cast<double>(terms));
      std::vector<std::size_t> sample(size);
      if (size >= terms) {
        std::iota(sample.begin(), sample.end(), std::size_t{0});
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, terms - 1);
        for (auto& i : sample) i = pick(rng);
      }
      SampledModel model = model_from(subsample_sum_operator(jac, std::move(sample), total), residual, scaling);
      model.sample_size = size;
      model.evaluation_fraction = static_cast<double>(size) / static_cast<double>(terms);
      model.exact = size >= terms && total == static_cast<double>(terms);
      return model;
    }
  }
  throw std::logic_error("unknown sample kind");
}

}  // namespace sgn
