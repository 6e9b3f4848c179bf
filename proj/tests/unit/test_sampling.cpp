#include <doctest.h>

#include <cmath>
#include <numeric>

#include "sgn/cost.hpp"
#include "sgn/errors.hpp"
#include "sgn/sampling.hpp"

using namespace sgn;
using doctest::Approx;

namespace {

class MatrixJacobian : public JacobianView {
 public:
  explicit MatrixJacobian(DenseMatrix a) : a_(std::move(a)) {}
  std::size_t rows() const override { return a_.rows(); }
  std::size_t cols() const override { return a_.cols(); }
  double entry(std::size_t i, std::size_t j) const override { return a_(i, j); }
  LinearOperator full_operator() const override { return LinearOperator::from_dense(a_); }

 private:
  DenseMatrix a_;
};

// J = Σ_i diag(d_i)
class DiagonalTerms : public JacobianView {
 public:
  explicit DiagonalTerms(std::vector<Vector> d) : d_(std::move(d)) {}
  std::size_t rows() const override { return d_[0].size(); }
  std::size_t cols() const override { return d_[0].size(); }
  double entry(std::size_t i, std::size_t j) const override {
    if (i != j) return 0.0;
    double s = 0.0;
    for (const auto& d : d_) s += d[i];
    return s;
  }
  LinearOperator full_operator() const override { return LinearOperator::from_dense(dense()); }
  bool symmetric() const override { return true; }
  std::size_t term_count() const override { return d_.size(); }
  void accumulate_term(std::size_t i, double weight, std::span<const double> v, std::span<double> out) const override {
    for (std::size_t k = 0; k < v.size(); ++k) out[k] += weight * d_[i][k] * v[k];
  }

 private:
  std::vector<Vector> d_;
};

}  // namespace

TEST_CASE("Bernstein sample size") {
  CHECK(bernstein_sample_size(0, 0, 1.0, 0.5, 4) == 1);
  CHECK(bernstein_sample_size(1, 1, 1, 2.0 / std::exp(1.0), 2) == 4);
  CHECK(bernstein_sample_size(2, 3, 0.5, 0.1, 6) == 99);
  CHECK_THROWS_AS(bernstein_sample_size(1, 1, 1, 1.5, 2), std::invalid_argument);
  CHECK_THROWS_AS(bernstein_sample_size(1, 1, 1, 0.0, 2), std::invalid_argument);
}

TEST_CASE("row compression sample size") {
  const Vector r(100, 0.5);
  CHECK(rc_sample_size(r, 1e12, 1.0, 100, 100, 10, 0.4) == 1);
  CHECK(rc_sample_size(r, 1e-9, 1.0, 70, 100, 10, 0.4) == 70);
  Vector spec_r(6000, std::sqrt(1500.0 / 6000.0));
  CHECK(rc_sample_size(spec_r, 1.0, 1.0, 6000, 6000, 5000, 0.4) == 6000);
  CHECK(rc_sample_size(spec_r, 1e9, 1.0, 6000, 6000, 5000, 0.4) == 60);

  SUBCASE("non-increasing in rho") {
    std::size_t prev = SIZE_MAX;
    for (double rho = 0.1; rho < 1e4; rho *= 1.7) {
      const auto s = rc_sample_size(spec_r, rho, 0.5, 6000, 6000, 50, 0.4);
      CHECK(s <= prev);
      prev = s;
    }
  }
}

TEST_CASE("row compression estimator") {
  SUBCASE("full sample recovers J and the gradient") {
    const auto j = DenseMatrix::from_rows({{1, 2}, {0, 3}, {-1, 1}});
    const MatrixJacobian jac(j);
    const Vector r{1, -2, 0.5};
    const Vector p(3, 1.0 / 3);
    const std::vector<std::size_t> all{0, 1, 2};
    const auto model = row_compress(jac, r, 0.5, all, p);
    const auto jt = densify(model.jacobian);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < 2; ++k) CHECK(jt(i, k) == Approx(j(i, k)));
    Vector g(2);
    j.multiply_transpose(r, g);
    CHECK(model.gradient[0] == Approx(0.5 * g[0]));
    CHECK(model.gradient[1] == Approx(0.5 * g[1]));
  }
  SUBCASE("hand example") {
    const MatrixJacobian jac(DenseMatrix::identity(2));
    const Vector r{2, 4};
    const Vector p{0.5, 0.5};
    const std::vector<std::size_t> drawn{1};
    const auto model = row_compress(jac, r, 0.5, drawn, p);
    const auto jt = densify(model.jacobian);
    REQUIRE(jt.rows() == 1);
    CHECK(jt(0, 0) == 0.0);
    CHECK(jt(0, 1) == Approx(2.0));
    CHECK(model.residual == Vector{4});
    CHECK(model.gradient[0] == 0.0);
    CHECK(model.gradient[1] == Approx(4.0));
  }
  SUBCASE("importance probabilities sum to one") {
    const MatrixJacobian jac(DenseMatrix::from_rows({{1, 2}, {0, 3}, {-1, 1}}));
    const auto p = row_probs_importance(jac, Vector{1, 0, 2});
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == Approx(1.0));
  }
  SUBCASE("same seed, same draw") {
    const Vector p{0.1, 0.2, 0.3, 0.4};
    Rng a = make_rng(4), b = make_rng(4);
    CHECK(draw_indices(p, 50, a) == draw_indices(p, 50, b));
  }
  SUBCASE("zero-probability rows are never drawn") {
    const Vector p{0.0, 1.0, 0.0};
    Rng rng = make_rng(1);
    for (auto i : draw_indices(p, 100, rng)) CHECK(i == 1);
  }
}

TEST_CASE("entry importance probabilities") {
  const auto p = entry_probs_importance(DenseMatrix::from_rows({{3, 0}, {0, 4}}));
  CHECK(p(0, 0) == Approx(0.5 * (9.0 / 25 + 3.0 / 7)).epsilon(1e-12));
  CHECK(p(0, 1) == 0.0);
  CHECK(std::accumulate(p.data().begin(), p.data().end(), 0.0) == Approx(1.0));
  CHECK_THROWS(entry_probs_importance(DenseMatrix(2, 2)));
}

TEST_CASE("sparsification sample size") {
  CHECK(sparsify_size_importance(3, 2, 4, 1e-9, 1e-9, 0.4) == 12);
  CHECK(sparsify_size_importance(3, 2, 4, 1, 1, 0.4) == 12);
  CHECK(sparsify_size_importance(3, 2, 400, 1e12, 1, 0.4) == 1);
}

TEST_CASE("sparsified matrix estimator") {
  Rng rng = make_rng(2);
  const auto j = DenseMatrix::from_rows({{0, 2}, {0, 0}});
  auto p = DenseMatrix(2, 2);
  p(0, 1) = 1.0;
  const auto s = sparsify_importance(j, p, 3, false, rng).to_dense();
  CHECK(s(0, 1) == Approx(2.0));
  CHECK(s(0, 0) == 0.0);

  SUBCASE("uniform fixed keeps the diagonal and copies entries") {
    const MatrixJacobian jac(DenseMatrix::from_rows({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}}));
    Rng r = make_rng(8);
    const auto a = sparsify_uniform_fixed(jac, 2, true, r).to_dense();
    int off = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(a(i, i) == jac.entry(i, i));
      for (std::size_t k = 0; k < 3; ++k)
        if (i != k && a(i, k) != 0.0) {
          CHECK(a(i, k) == jac.entry(i, k));
          ++off;
        }
    }
    CHECK(off == 2);
    Rng r2 = make_rng(8);
    const auto full = sparsify_uniform_fixed(jac, 9, false, r2).to_dense();
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < 3; ++k) CHECK(full(i, k) == jac.entry(i, k));
  }
}

TEST_CASE("sum subsampling") {
  CHECK(sum_sample_size(1, 1, 0.4, 14, 30162, 1.0) == 30162);
  CHECK(sum_sample_size(1e12, 1, 0.4, 14, 30162, 0.0) == 1);
  CHECK(sum_sample_size(1, 1, 0.4, 14, 30162, 0.0) == 23);
  std::size_t prev = SIZE_MAX;
  for (double t = 1e-3; t <= 1.0; t *= 2) {
    const auto s = sum_sample_size(1, t, 0.4, 14, 30162, 0.0);
    CHECK(s <= prev);
    prev = s;
  }

  auto terms = std::make_shared<DiagonalTerms>(std::vector<Vector>{{2.0}, {4.0}});
  CHECK(sgn::apply(subsample_sum_operator(terms, {0}, 2.0), Vector{1.0})[0] == Approx(4.0));
  CHECK(sgn::apply(subsample_sum_operator(terms, {0, 1}, 2.0), Vector{1.0})[0] == Approx(6.0));
  CHECK_THROWS(subsample_sum_operator(terms, {}, 2.0));
}

TEST_CASE("per-iteration cost") {
  CHECK(per_iteration_cost(CostVariant::row_compression, 6000, 5000, 0, 60, 3, 0) == Approx(421.2));
  CHECK(per_iteration_cost(CostVariant::sum_subsampling, 14, 14, 30162, 23, 4, 0) == Approx(30254));
  CHECK(per_iteration_cost(CostVariant::sparsify_uniform_square, 100, 100, 0, 0, 2, 0.25) == Approx(127));
  CHECK(per_iteration_cost(CostVariant::exact_square, 100, 100, 0, 0, 2, 1.0) == Approx(1 + 100 + 400));
  CHECK(parse_cost_variant(to_string(CostVariant::sparsify_importance)) == CostVariant::sparsify_importance);
  CHECK_THROWS_AS(parse_cost_variant("nope"), ConfigError);
}

TEST_CASE("stabilization test") {
  const Vector flat(8, 2.0);
  CHECK(stabilization_stop(flat, 1e-3, 5));
  CHECK(stabilization_stop(Vector{1, 0.9995}, 1e-3, 1));
  Vector halving{1};
  for (int i = 0; i < 10; ++i) halving.push_back(halving.back() / 2);
  CHECK_FALSE(stabilization_stop(halving, 1e-3, 5));
  CHECK_FALSE(stabilization_stop(Vector{1, 1}, 1e-3, 5));
}
