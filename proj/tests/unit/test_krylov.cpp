#include <doctest.h>

#include <Eigen/Dense>

#include <random>

#include "sgn/krylov.hpp"

using namespace sgn;
using doctest::Approx;

namespace {
LinearOperator dense_op(std::initializer_list<std::initializer_list<double>> rows) {
  return LinearOperator::from_dense(DenseMatrix::from_rows(rows));
}
LinearOperator sym_op(std::initializer_list<std::initializer_list<double>> rows) {
  auto a = DenseMatrix::from_rows(rows);
  auto at = a.transpose();
  return LinearOperator(
      a.rows(), a.cols(), [a](auto in, auto out) { a.multiply(in, out); },
      [at](auto in, auto out) { at.multiply(in, out); }, true);
}
}  // namespace

TEST_CASE("least-squares Krylov solve") {
  SUBCASE("identity") {
    const auto r = krylov_ls_solve(LinearOperator::identity(2), Vector{1, 2}, 0.5);
    CHECK(r.step[0] == Approx(-1));
    CHECK(r.step[1] == Approx(-2));
    CHECK(r.converged);
    CHECK(r.inner_iterations == 1);
  }
  SUBCASE("diagonal") {
    const auto r = krylov_ls_solve(dense_op({{1, 0}, {0, 2}}), Vector{1, 1}, 1e-12);
    CHECK(r.step[0] == Approx(-1));
    CHECK(r.step[1] == Approx(-0.5));
  }
  SUBCASE("singular, minimum length") {
    const auto r = krylov_ls_solve(dense_op({{1, 0}, {0, 0}}), Vector{1, 1}, 1e-12);
    CHECK(r.step[0] == Approx(-1));
    CHECK(r.step[1] == 0.0);
  }
  SUBCASE("stationary model") {
    const auto r = krylov_ls_solve(dense_op({{1, 0}, {0, 0}}), Vector{0, 1}, 1e-3);
    CHECK(r.step == Vector{0, 0});
    CHECK(r.inner_iterations == 0);
    CHECK(r.converged);
  }
  SUBCASE("stopping test holds on return") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    DenseMatrix a(40, 15);
    for (std::size_t i = 0; i < 40; ++i)
      for (std::size_t j = 0; j < 15; ++j) a(i, j) = normal(rng);
    Vector b(40);
    for (auto& x : b) x = normal(rng);
    for (double eta : {0.5, 0.1, 1e-3}) {
      const auto r = krylov_ls_solve(LinearOperator::from_dense(a), b, eta);
      CHECK(r.converged);
      CHECK(r.normal_residual <= eta * r.initial_normal_residual);
    }
  }
}

TEST_CASE("symmetric Krylov solve") {
  SUBCASE("identity") {
    const auto r = minres_qlp_solve(LinearOperator::identity(3), Vector{1, 0, -1}, 1e-12);
    CHECK(r.step[0] == Approx(-1));
    CHECK(r.step[1] == Approx(0).epsilon(1e-12));
    CHECK(r.step[2] == Approx(1));
  }
  SUBCASE("singular, minimum length") {
    const auto r = minres_qlp_solve(sym_op({{2, 0}, {0, 0}}), Vector{4, 0}, 1e-12);
    CHECK(r.step[0] == Approx(-2));
    CHECK(r.step[1] == 0.0);
  }
  SUBCASE("2x2 solve") {
    const auto r = minres_qlp_solve(sym_op({{2, 1}, {1, 2}}), Vector{3, 3}, 1e-12);
    CHECK(r.step[0] == Approx(-1));
    CHECK(r.step[1] == Approx(-1));
  }
  SUBCASE("asymmetric operator rejected") {
    CHECK_THROWS(minres_qlp_solve(dense_op({{2, 1}, {0, 2}}), Vector{1, 1}, 1e-6));
  }
  SUBCASE("singular random systems match the pseudoinverse") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 40; ++trial) {
      // odd trials keep the raw Gaussian factor, which spreads the nonzero spectrum
      const bool orthonormal = trial % 2 == 0;
      const int n = 12, r = 1 + trial % 11;
      Eigen::MatrixXd g(n, r);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < r; ++j) g(i, j) = normal(rng);
      const Eigen::MatrixXd u =
          orthonormal ? Eigen::MatrixXd(Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ() * Eigen::MatrixXd::Identity(n, r))
                      : g;
      Eigen::VectorXd d(r);
      for (int j = 0; j < r; ++j) d(j) = (j % 2 ? -1.0 : 1.0) * (0.5 + j);
      const Eigen::MatrixXd a = u * d.asDiagonal() * u.transpose();
      Eigen::VectorXd b(n);
      for (int i = 0; i < n; ++i) b(i) = normal(rng);
      const Eigen::VectorXd expected = a.completeOrthogonalDecomposition().solve(-b);
      DenseMatrix ad(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) ad(i, j) = a(i, j);
      auto at = ad;
      const LinearOperator op(
          n, n, [ad](auto in, auto out) { ad.multiply(in, out); }, [at](auto in, auto out) { at.multiply(in, out); },
          true);
      const auto res = minres_qlp_solve(op, Vector(b.data(), b.data() + n), 1e-12, 200);
      double diff = 0.0;
      for (int i = 0; i < n; ++i) diff += (res.step[i] - expected(i)) * (res.step[i] - expected(i));
      CHECK(std::sqrt(diff) <= 1e-6 * expected.norm());
    }
  }
}

TEST_CASE("Tikhonov augmentation") {
  const auto aug = tikhonov_augment(LinearOperator::identity(1), 4.0);
  CHECK(sgn::apply(aug, Vector{1}) == Vector{1, 2});
  const auto aug3 = tikhonov_augment(dense_op({{3}}), 4.0);
  CHECK(sgn::apply(aug3, Vector{1, 1}, true)[0] == Approx(5.0));
  const auto r = krylov_ls_solve(tikhonov_augment(dense_op({{3}}), 1.0), Vector{3, 0}, 1e-12);
  CHECK(r.step[0] == Approx(-0.9));
}
