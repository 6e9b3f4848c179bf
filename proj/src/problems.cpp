#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "sgn/errors.hpp"
#include "sgn/problems.hpp"

namespace sgn {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double sigmoid_derivative(double z) { return sigmoid(z) * sigmoid(-z); }

double log1p_exp(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void JacobianView::row(std::size_t i, std::vector<std::size_t>& columns, std::vector<double>& values) const {
  columns.clear();
  values.clear();
  for (std::size_t j = 0; j < cols(); ++j) {
    double v = entry(i, j);
    if (v != 0.0) {
      columns.push_back(j);
      values.push_back(v);
    }
  }
}

DenseMatrix JacobianView::dense() const {
  DenseMatrix a(rows(), cols());
  std::vector<std::size_t> c;
  std::vector<double> v;
  for (std::size_t i = 0; i < rows(); ++i) {
    row(i, c, v);
    for (std::size_t k = 0; k < c.size(); ++k) a(i, c[k]) = v[k];
  }
  return a;
}

void JacobianView::accumulate_term(std::size_t, double, std::span<const double>, std::span<double>) const {
  throw std::logic_error("this Jacobian has no term structure");
}

double ResidualProblem::objective(std::span<const double> x) const { return objective_from_residual(residual(x)); }

double ResidualProblem::objective_from_residual(std::span<const double> r) const {
  const double nr = norm2(r);
  return objective_scale() * nr * nr;
}

Vector ResidualProblem::gradient(std::span<const double> x) const {
  Vector r = residual(x);
  Vector g = sgn::apply(jacobian(x)->full_operator(), r, true);
  scale(gradient_scale(), g);
  return g;
}

namespace {

// a_iᵀx for every example
Vector margins(const SparseMatrix& a, std::span<const double> x) {
  if (x.size() != a.cols())
    throw std::invalid_argument("dimension mismatch: x has length " + std::to_string(x.size()) + ", expected " +
                                std::to_string(a.cols()));
  Vector z(a.rows());
  a.multiply(x, z);
  return z;
}

// ---- sigmoid least squares

class SigmoidJacobian final : public JacobianView {
 public:
  SigmoidJacobian(std::shared_ptr<const Dataset> data, Vector weights)
      : data_(std::move(data)), weights_(std::move(weights)) {}

  std::size_t rows() const override { return data_->examples(); }
  std::size_t cols() const override { return data_->feature_count(); }
  double entry(std::size_t i, std::size_t j) const override { return weights_[i] * data_->features.entry(i, j); }
  void row(std::size_t i, std::vector<std::size_t>& columns, std::vector<double>& values) const override {
    auto c = data_->features.row_columns(i);
    auto v = data_->features.row_values(i);
    columns.assign(c.begin(), c.end());
    values.resize(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) values[k] = weights_[i] * v[k];
  }
  LinearOperator full_operator() const override {
    auto data = data_;
    auto w = std::make_shared<const Vector>(weights_);
    return LinearOperator(
        rows(), cols(),
        [data, w](std::span<const double> v, std::span<double> out) {
          data->features.multiply(v, out);
          for (std::size_t i = 0; i < out.size(); ++i) out[i] *= (*w)[i];
        },
        [data, w](std::span<const double> u, std::span<double> out) {
          Vector wu(u.size());
          for (std::size_t i = 0; i < u.size(); ++i) wu[i] = (*w)[i] * u[i];
          data->features.multiply_transpose(wu, out);
        });
  }

 private:
  std::shared_ptr<const Dataset> data_;
  Vector weights_;  // −σ'(a_iᵀx)
};

class SigmoidLsProblem final : public ResidualProblem {
 public:
  SigmoidLsProblem(std::shared_ptr<const Dataset> data, LsScaling scaling) : data_(std::move(data)), scaling_(scaling) {
    data_->validate();
    validation_ = data_->validation;
  }

  std::string name() const override { return "sigmoid_ls"; }
  std::size_t residual_size() const override { return data_->examples(); }
  std::size_t variable_size() const override { return data_->feature_count(); }
  double objective_scale() const override {
    return scaling_ == LsScaling::mean_half ? 0.5 / static_cast<double>(data_->examples()) : 1.0;
  }
  Vector residual(std::span<const double> x) const override {
    Vector z = margins(data_->features, x);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = data_->labels[i] - sigmoid(z[i]);
    return z;
  }
  std::shared_ptr<const JacobianView> jacobian(std::span<const double> x) const override {
    Vector z = margins(data_->features, x);
    for (double& v : z) v = -sigmoid_derivative(v);
    return std::make_shared<SigmoidJacobian>(data_, std::move(z));
  }
  Vector initial_point(Rng&) const override { return Vector(variable_size(), 0.0); }

 private:
  std::shared_ptr<const Dataset> data_;
  LsScaling scaling_;
};

// ---- softmax system

class SoftmaxJacobian final : public JacobianView {
 public:
  SoftmaxJacobian(std::shared_ptr<const Dataset> data, Vector curvature)
      : data_(std::move(data)), curvature_(std::move(curvature)) {}

  std::size_t rows() const override { return data_->feature_count(); }
  std::size_t cols() const override { return data_->feature_count(); }
  bool symmetric() const override { return true; }
  double entry(std::size_t i, std::size_t j) const override { return assembled()(i, j); }
  DenseMatrix dense() const override { return assembled(); }
  LinearOperator full_operator() const override {
    auto self = std::make_shared<const SoftmaxJacobian>(*this);
    auto fwd = [self](std::span<const double> v, std::span<double> out) {
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t i = 0; i < self->term_count(); ++i) self->accumulate_term(i, 1.0, v, out);
    };
    return LinearOperator(rows(), cols(), fwd, fwd, true);
  }
  std::size_t term_count() const override { return data_->examples(); }
  void accumulate_term(std::size_t i, double weight, std::span<const double> v, std::span<double> out) const override {
    auto c = data_->features.row_columns(i);
    auto a = data_->features.row_values(i);
    double s = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) s += a[k] * v[c[k]];
    s *= weight * curvature_[i];
    if (s == 0.0) return;
    for (std::size_t k = 0; k < c.size(); ++k) out[c[k]] += s * a[k];
  }

 private:
  const DenseMatrix& assembled() const {
    std::call_once(*once_, [this] {
      const std::size_t n = cols();
      DenseMatrix j(n, n);
      for (std::size_t i = 0; i < term_count(); ++i) {
        auto c = data_->features.row_columns(i);
        auto a = data_->features.row_values(i);
        for (std::size_t p = 0; p < c.size(); ++p)
          for (std::size_t q = 0; q < c.size(); ++q) j(c[p], c[q]) += curvature_[i] * a[p] * a[q];
      }
      *dense_ = std::move(j);
    });
    return *dense_;
  }

  std::shared_ptr<const Dataset> data_;
  Vector curvature_;  // σ'(a_iᵀx)
  std::shared_ptr<std::once_flag> once_ = std::make_shared<std::once_flag>();
  std::shared_ptr<DenseMatrix> dense_ = std::make_shared<DenseMatrix>();
};

class SoftmaxProblem final : public ResidualProblem {
 public:
  explicit SoftmaxProblem(std::shared_ptr<const Dataset> data) : data_(std::move(data)) {
    data_->validate();
    validation_ = data_->validation;
  }

  std::string name() const override { return "softmax"; }
  std::size_t residual_size() const override { return data_->feature_count(); }
  std::size_t variable_size() const override { return data_->feature_count(); }
  double objective_scale() const override { return 0.5; }
  bool is_system() const override { return true; }
  Vector residual(std::span<const double> x) const override {
    Vector z = margins(data_->features, x);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = sigmoid(z[i]) - (data_->labels[i] == 1 ? 1.0 : 0.0);
    Vector f(variable_size());
    data_->features.multiply_transpose(z, f);
    return f;
  }
  std::shared_ptr<const JacobianView> jacobian(std::span<const double> x) const override {
    Vector z = margins(data_->features, x);
    for (double& v : z) v = sigmoid_derivative(v);
    return std::make_shared<SoftmaxJacobian>(data_, std::move(z));
  }
  Vector initial_point(Rng&) const override { return Vector(variable_size(), 0.0); }

 private:
  std::shared_ptr<const Dataset> data_;
};

}  // namespace

ProblemPtr sigmoid_ls_problem(std::shared_ptr<const Dataset> data, LsScaling scaling) {
  if (!data) throw ConfigError("sigmoid_ls_problem: no dataset");
  return std::make_shared<SigmoidLsProblem>(std::move(data), scaling);
}

ProblemPtr softmax_problem(std::shared_ptr<const Dataset> data) {
  if (!data) throw ConfigError("softmax_problem: no dataset");
  return std::make_shared<SoftmaxProblem>(std::move(data));
}

double softmax_loss(const Dataset& data, std::span<const double> x) {
  Vector z = margins(data.features, x);
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) total += log1p_exp(z[i]) - (data.labels[i] == 1 ? z[i] : 0.0);
  return total;
}

double classification_accuracy(std::span<const double> x, const Dataset& data) {
  if (data.examples() == 0) throw std::invalid_argument("classification_accuracy: empty dataset");
  Vector z = margins(data.features, x);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const int predicted = sigmoid(z[i]) >= 0.5 ? 1 : 0;
    if (predicted == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(z.size());
}

}  // namespace sgn
