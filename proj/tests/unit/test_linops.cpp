#include <doctest.h>

#include <Eigen/Dense>

#include <random>

#include "sgn/linops.hpp"

using namespace sgn;
using doctest::Approx;

TEST_CASE("assemble_sparse builds CSR from triplets") {
  SUBCASE("single entry") {
    const Triplet t[] = {{0, 0, 1.0}};
    const auto a = assemble_sparse(t, 1, 1);
    CHECK(a.nonzeros() == 1);
    CHECK(a.entry(0, 0) == 1.0);
  }
  SUBCASE("duplicates are summed") {
    const Triplet t[] = {{0, 1, 2.0}, {0, 1, 3.0}};
    const auto a = assemble_sparse(t, 1, 2);
    REQUIRE(a.row_columns(0).size() == 1);
    CHECK(a.row_columns(0)[0] == 1);
    CHECK(a.row_values(0)[0] == 5.0);
  }
  SUBCASE("dense form") {
    const Triplet t[] = {{1, 0, 4.0}, {0, 1, -1.0}};
    const auto d = assemble_sparse(t, 2, 2).to_dense();
    CHECK(d(0, 0) == 0.0);
    CHECK(d(0, 1) == -1.0);
    CHECK(d(1, 0) == 4.0);
    CHECK(d(1, 1) == 0.0);
  }
  SUBCASE("out-of-bounds index names the triplet") {
    const Triplet t[] = {{0, 0, 1.0}, {2, 0, 1.0}};
    try {
      assemble_sparse(t, 2, 2);
      FAIL("expected rejection");
    } catch (const std::out_of_range& e) {
      CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
  }
}

TEST_CASE("linear operator forward and adjoint") {
  const auto id = LinearOperator::identity(3);
  const Vector v{1, 2, 3};
  CHECK(sgn::apply(id, v) == v);

  const auto a = LinearOperator::from_dense(DenseMatrix::from_rows({{1, 2}, {0, 3}}));
  CHECK(sgn::apply(a, Vector{1, 1}) == Vector{3, 3});
  CHECK(sgn::apply(a, Vector{1, 1}, true) == Vector{1, 5});

  CHECK_THROWS(sgn::apply(a, Vector{1, 2, 3}));
  Vector out(3);
  CHECK_THROWS(a.apply_into(Vector{1, 1}, out));
}

TEST_CASE("sparse and dense operators agree and are adjoint-consistent") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if ((i + 2 * j) % 3 != 0) t.push_back({i, j, normal(rng)});
  const auto s = assemble_sparse(t, 7, 4);
  const auto op_s = LinearOperator::from_sparse(s);
  const auto op_d = LinearOperator::from_dense(s.to_dense());
  const Vector v{0.3, -1.0, 2.0, 0.5};
  const Vector u{1, 2, 3, 4, 5, 6, 7};
  const auto a = sgn::apply(op_s, v), b = sgn::apply(op_d, v);
  for (std::size_t i = 0; i < 7; ++i) CHECK(a[i] == Approx(b[i]));
  const auto c = sgn::apply(op_s, u, true), d = sgn::apply(op_d, u, true);
  for (std::size_t i = 0; i < 4; ++i) CHECK(c[i] == Approx(d[i]));
  CHECK(adjoint_mismatch(op_s) < 1e-13);
  CHECK(densify(op_s).frobenius_norm() == Approx(s.to_dense().frobenius_norm()));
}

TEST_CASE("symmetry probe") {
  CHECK(symmetry_mismatch(LinearOperator::from_dense(DenseMatrix::from_rows({{2, 1}, {1, 2}}))) < 1e-14);
  CHECK(symmetry_mismatch(LinearOperator::from_dense(DenseMatrix::from_rows({{2, 1}, {0, 2}}))) > 1e-3);
}

TEST_CASE("singular values of small matrices") {
  const Vector d{3, 1};
  auto s = singular_values(DenseMatrix::diagonal(d));
  CHECK(s[0] == Approx(3.0));
  CHECK(s[1] == Approx(1.0));
  s = singular_values(DenseMatrix(2, 2));
  CHECK(s[0] == 0.0);
  CHECK(s[1] == 0.0);
  s = singular_values(DenseMatrix::from_rows({{0, 1}, {1, 0}}));
  CHECK(s[0] == Approx(1.0));
  CHECK(s[1] == Approx(1.0));
}

TEST_CASE("singular values match a dense SVD") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> dim(1, 12);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = dim(rng), n = dim(rng);
    DenseMatrix a(m, n);
    Eigen::MatrixXd e(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) e(i, j) = a(i, j) = normal(rng);
    const auto s = singular_values(a);
    const Eigen::VectorXd ref = Eigen::JacobiSVD<Eigen::MatrixXd>(e).singularValues();
    REQUIRE(s.size() == static_cast<std::size_t>(ref.size()));
    for (Eigen::Index i = 0; i < ref.size(); ++i) CHECK(s[i] == Approx(ref(i)).epsilon(1e-10));
    CHECK(spectral_norm(a) == Approx(ref(0)).epsilon(1e-10));
  }
}

TEST_CASE("singular values refuse large matrices") {
  CHECK_THROWS(singular_values(DenseMatrix(100, 80)));
}
