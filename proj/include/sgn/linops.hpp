#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

namespace sgn {

using Vector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);
// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);
void scale(double a, std::span<double> x);

// Row-major dense storage.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> d);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }
  std::span<const double> data() const { return values_; }

  DenseMatrix transpose() const;
  double frobenius_norm() const;
  void multiply(std::span<const double> x, std::span<double> y) const;
  void multiply_transpose(std::span<const double> u, std::span<double> y) const;

  friend DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
  friend DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

// Compressed-row storage. Column indices are strictly increasing within each row.
class SparseMatrix {
 public:
  SparseMatrix() : row_offsets_(1, 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nonzeros() const { return values_.size(); }
  std::span<const std::size_t> row_offsets() const { return row_offsets_; }
  std::span<const std::size_t> column_indices() const { return columns_; }
  std::span<const double> values() const { return values_; }
  std::span<const std::size_t> row_columns(std::size_t i) const;
  std::span<const double> row_values(std::size_t i) const;
  double entry(std::size_t i, std::size_t j) const;

  void multiply(std::span<const double> x, std::span<double> y) const;
  void multiply_transpose(std::span<const double> u, std::span<double> y) const;
  DenseMatrix to_dense() const;

  friend SparseMatrix assemble_sparse(std::span<const Triplet> triplets, std::size_t nrows,
                                      std::size_t ncols);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_offsets_;
  std::vector<std::size_t> columns_;
  std::vector<double> values_;
};

// Sums duplicates, sorts columns. Throws std::out_of_range naming the offending index.
SparseMatrix assemble_sparse(std::span<const Triplet> triplets, std::size_t nrows, std::size_t ncols);

class LinearOperator {
 public:
  // out is fully overwritten.
  using Apply = std::function<void(std::span<const double> in, std::span<double> out)>;

  LinearOperator(std::size_t rows, std::size_t cols, Apply forward, Apply adjoint,
                 bool symmetric = false);

  static LinearOperator from_dense(DenseMatrix a);
  static LinearOperator from_sparse(SparseMatrix a);
  static LinearOperator identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  // Declared symmetry; the symmetric solver still probes it.
  bool symmetric() const { return symmetric_; }

  void apply_into(std::span<const double> v, std::span<double> out, bool adjoint = false) const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  Apply forward_;
  Apply adjoint_;
  bool symmetric_;
};

// Checked product: A v, or Aᵀ v when adjoint is set.
Vector apply(const LinearOperator& op, std::span<const double> v, bool adjoint = false);

DenseMatrix densify(const LinearOperator& op);

// max over random probes of |<Av,u> - <v,Aᵀu>| / (‖Av‖‖u‖ + ‖v‖‖Aᵀu‖)
double adjoint_mismatch(const LinearOperator& op, int probes = 3, unsigned seed = 12345);
// Same idea for <Av,u> versus <v,Au> on a square operator.
double symmetry_mismatch(const LinearOperator& op, int probes = 3, unsigned seed = 54321);

// Descending singular values by one-sided Jacobi. Requires min(rows, cols) <= 64.
std::vector<double> singular_values(const DenseMatrix& a);
double spectral_norm(const DenseMatrix& a);

}  // namespace sgn
