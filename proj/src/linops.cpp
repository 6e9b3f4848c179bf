#include "sgn/linops.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace sgn {

namespace {

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string("dimension mismatch: ") + what + " has length " +
                                std::to_string(got) + ", expected " + std::to_string(want));
  }
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  require_size(b.size(), a.size(), "dot operand");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) {
  // scaled accumulation, avoids overflow for large entries
  double scale_ = 0.0, ssq = 1.0;
  for (double v : a) {
    if (v == 0.0) continue;
    double av = std::abs(v);
    if (scale_ < av) {
      ssq = 1.0 + ssq * (scale_ / av) * (scale_ / av);
      scale_ = av;
    } else {
      ssq += (av / scale_) * (av / scale_);
    }
  }
  return scale_ * std::sqrt(ssq);
}

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  require_size(y.size(), x.size(), "axpy target");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void scale(double a, std::span<double> x) {
  for (double& v : x) v *= a;
}

// ---- DenseMatrix

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t nr = rows.size();
  std::size_t nc = nr ? rows.begin()->size() : 0;
  DenseMatrix a(nr, nc);
  std::size_t i = 0;
  for (const auto& r : rows) {
    if (r.size() != nc) throw std::invalid_argument("ragged rows in DenseMatrix::from_rows");
    std::copy(r.begin(), r.end(), a.row(i).begin());
    ++i;
  }
  return a;
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0;
  return a;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> d) {
  DenseMatrix a(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) a(i, i) = d[i];
  return a;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double DenseMatrix::frobenius_norm() const { return norm2(values_); }

void DenseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  require_size(x.size(), cols_, "input vector");
  require_size(y.size(), rows_, "output vector");
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    const double* r = values_.data() + i * cols_;
    for (std::size_t j = 0; j < cols_; ++j) s += r[j] * x[j];
    y[i] = s;
  }
}

void DenseMatrix::multiply_transpose(std::span<const double> u, std::span<double> y) const {
  require_size(u.size(), rows_, "input vector");
  require_size(y.size(), cols_, "output vector");
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    const double ui = u[i];
    if (ui == 0.0) continue;
    const double* r = values_.data() + i * cols_;
    for (std::size_t j = 0; j < cols_; ++j) y[j] += r[j] * ui;
  }
}

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw std::invalid_argument("dimension mismatch in +");
  DenseMatrix c = a;
  for (std::size_t k = 0; k < c.values_.size(); ++k) c.values_[k] += b.values_[k];
  return c;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw std::invalid_argument("dimension mismatch in -");
  DenseMatrix c = a;
  for (std::size_t k = 0; k < c.values_.size(); ++k) c.values_[k] -= b.values_[k];
  return c;
}

// ---- SparseMatrix

std::span<const std::size_t> SparseMatrix::row_columns(std::size_t i) const {
  return {columns_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
}

std::span<const double> SparseMatrix::row_values(std::size_t i) const {
  return {values_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
}

double SparseMatrix::entry(std::size_t i, std::size_t j) const {
  auto cols = row_columns(i);
  auto it = std::lower_bound(cols.begin(), cols.end(), j);
  if (it == cols.end() || *it != j) return 0.0;
  return row_values(i)[static_cast<std::size_t>(it - cols.begin())];
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  require_size(x.size(), cols_, "input vector");
  require_size(y.size(), rows_, "output vector");
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) s += values_[k] * x[columns_[k]];
    y[i] = s;
  }
}

void SparseMatrix::multiply_transpose(std::span<const double> u, std::span<double> y) const {
  require_size(u.size(), rows_, "input vector");
  require_size(y.size(), cols_, "output vector");
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    const double ui = u[i];
    if (ui == 0.0) continue;
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) y[columns_[k]] += values_[k] * ui;
  }
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix a(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) a(i, columns_[k]) = values_[k];
  return a;
}

SparseMatrix assemble_sparse(std::span<const Triplet> triplets, std::size_t nrows, std::size_t ncols) {
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    if (t.row >= nrows || t.col >= ncols) {
      throw std::out_of_range("triplet " + std::to_string(k) + " index (" + std::to_string(t.row) + ", " +
                              std::to_string(t.col) + ") out of bounds for " + std::to_string(nrows) + "x" +
                              std::to_string(ncols));
    }
  }
  std::vector<std::size_t> order(triplets.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (triplets[a].row != triplets[b].row) return triplets[a].row < triplets[b].row;
    return triplets[a].col < triplets[b].col;
  });

  SparseMatrix s;
  s.rows_ = nrows;
  s.cols_ = ncols;
  s.row_offsets_.assign(nrows + 1, 0);
  for (std::size_t idx = 0; idx < order.size(); ++idx) {
    const auto& t = triplets[order[idx]];
    if (idx > 0) {
      const auto& p = triplets[order[idx - 1]];
      if (p.row == t.row && p.col == t.col) {
        s.values_.back() += t.value;
        continue;
      }
    }
    s.columns_.push_back(t.col);
    s.values_.push_back(t.value);
    ++s.row_offsets_[t.row + 1];
  }
  for (std::size_t i = 0; i < nrows; ++i) s.row_offsets_[i + 1] += s.row_offsets_[i];
  return s;
}

// ---- LinearOperator

LinearOperator::LinearOperator(std::size_t rows, std::size_t cols, Apply forward, Apply adjoint, bool symmetric)
    : rows_(rows), cols_(cols), forward_(std::move(forward)), adjoint_(std::move(adjoint)), symmetric_(symmetric) {
  if (symmetric && rows != cols) throw std::invalid_argument("symmetric operator must be square");
}

LinearOperator LinearOperator::from_dense(DenseMatrix a) {
  auto m = std::make_shared<const DenseMatrix>(std::move(a));
  return LinearOperator(
      m->rows(), m->cols(), [m](std::span<const double> v, std::span<double> out) { m->multiply(v, out); },
      [m](std::span<const double> u, std::span<double> out) { m->multiply_transpose(u, out); });
}

LinearOperator LinearOperator::from_sparse(SparseMatrix a) {
  auto m = std::make_shared<const SparseMatrix>(std::move(a));
  return LinearOperator(
      m->rows(), m->cols(), [m](std::span<const double> v, std::span<double> out) { m->multiply(v, out); },
      [m](std::span<const double> u, std::span<double> out) { m->multiply_transpose(u, out); });
}

LinearOperator LinearOperator::identity(std::size_t n) {
  auto copy = [](std::span<const double> v, std::span<double> out) { std::copy(v.begin(), v.end(), out.begin()); };
  return LinearOperator(n, n, copy, copy, true);
}

void LinearOperator::apply_into(std::span<const double> v, std::span<double> out, bool adjoint) const {
  require_size(v.size(), adjoint ? rows_ : cols_, "operator input");
  require_size(out.size(), adjoint ? cols_ : rows_, "operator output");
  if (adjoint)
    adjoint_(v, out);
  else
    forward_(v, out);
}

Vector apply(const LinearOperator& op, std::span<const double> v, bool adjoint) {
  Vector out(adjoint ? op.cols() : op.rows());
  op.apply_into(v, out, adjoint);
  return out;
}

DenseMatrix densify(const LinearOperator& op) {
  DenseMatrix a(op.rows(), op.cols());
  Vector e(op.cols(), 0.0), col(op.rows());
  for (std::size_t j = 0; j < op.cols(); ++j) {
    e[j] = 1.0;
    op.apply_into(e, col);
    for (std::size_t i = 0; i < op.rows(); ++i) a(i, j) = col[i];
    e[j] = 0.0;
  }
  return a;
}

namespace {

double probe_mismatch(const LinearOperator& op, int probes, unsigned seed, bool use_adjoint) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector v(op.cols()), u(op.rows()), av(op.rows()), bu(op.cols());
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    for (double& x : v) x = normal(rng);
    for (double& x : u) x = normal(rng);
    op.apply_into(v, av);
    op.apply_into(u, bu, use_adjoint);
    double lhs = dot(av, u), rhs = dot(v, bu);
    double denom = norm2(av) * norm2(u) + norm2(v) * norm2(bu);
    if (denom == 0.0) continue;
    worst = std::max(worst, std::abs(lhs - rhs) / denom);
  }
  return worst;
}

}  // namespace

double adjoint_mismatch(const LinearOperator& op, int probes, unsigned seed) {
  return probe_mismatch(op, probes, seed, true);
}

double symmetry_mismatch(const LinearOperator& op, int probes, unsigned seed) {
  if (op.rows() != op.cols()) return 1.0;
  return probe_mismatch(op, probes, seed, false);
}

std::vector<double> singular_values(const DenseMatrix& a) {
  if (std::min(a.rows(), a.cols()) > 64)
    throw std::invalid_argument("singular_values: min dimension exceeds 64");
  // Columns of w are rotated until mutually orthogonal; their norms are the singular values.
  DenseMatrix w = a.rows() >= a.cols() ? a.transpose() : a;  // rows of w are the columns
  const std::size_t k = w.rows(), len = w.cols();
  if (k == 0) return {};
  const double eps = 1e-15;
  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < k; ++p) {
      for (std::size_t q = p + 1; q < k; ++q) {
        auto wp = w.row(p), wq = w.row(q);
        double alpha = 0, beta = 0, gamma = 0;
        for (std::size_t i = 0; i < len; ++i) {
          alpha += wp[i] * wp[i];
          beta += wq[i] * wq[i];
          gamma += wp[i] * wq[i];
        }
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        double zeta = (beta - alpha) / (2.0 * gamma);
        double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        double c = 1.0 / std::sqrt(1.0 + t * t), s = c * t;
        for (std::size_t i = 0; i < len; ++i) {
          double x = wp[i], y = wq[i];
          wp[i] = c * x - s * y;
          wq[i] = s * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }
  std::vector<double> sv(k);
  for (std::size_t p = 0; p < k; ++p) sv[p] = norm2(w.row(p));
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

double spectral_norm(const DenseMatrix& a) {
  auto sv = singular_values(a);
  return sv.empty() ? 0.0 : sv.front();
}

}  // namespace sgn
