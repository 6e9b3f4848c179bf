#include <cmath>
#include <random>
#include <stdexcept>

#include "sgn/errors.hpp"
#include "sgn/problems.hpp"

namespace sgn {

namespace {

Vector grid(std::size_t n) {
  Vector h(n);
  for (std::size_t j = 0; j < n; ++j) h[j] = static_cast<double>(j + 1) / static_cast<double>(n + 1);
  return h;
}

double weight_for(IeForm form, std::size_t n) {
  return form == IeForm::quadrature_weighted ? 1.0 / static_cast<double>(n + 1) : 1.0;
}

void check_length(std::span<const double> x, std::size_t n) {
  if (x.size() != n)
    throw std::invalid_argument("dimension mismatch: x has length " + std::to_string(x.size()) + ", expected " +
                                std::to_string(n));
}

class IeJacobian final : public JacobianView {
 public:
  IeJacobian(Vector h, Vector z, double w) : h_(std::move(h)), z_(std::move(z)), w_(w) {}

  std::size_t rows() const override { return h_.size(); }
  std::size_t cols() const override { return h_.size(); }
  double entry(std::size_t i, std::size_t j) const override {
    if (j < i) return w_ * 1.5 * (1.0 - h_[i]) * h_[j] * z_[j] * z_[j];
    if (j > i) return w_ * h_[i] * (1.0 - h_[j]) * z_[j];
    return 1.0 + w_ * 1.5 * (1.0 - h_[i]) * h_[i] * z_[i] * z_[i];
  }
  void row(std::size_t i, std::vector<std::size_t>& columns, std::vector<double>& values) const override {
    const std::size_t n = cols();
    columns.resize(n);
    values.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      columns[j] = j;
      values[j] = entry(i, j);
    }
  }
  LinearOperator full_operator() const override {
    auto h = std::make_shared<const Vector>(h_);
    auto z = std::make_shared<const Vector>(z_);
    const double w = w_;
    const std::size_t n = h_.size();
    auto forward = [h, z, w, n](std::span<const double> v, std::span<double> out) {
      const Vector& hh = *h;
      const Vector& zz = *z;
      // upper part: suffix sums of (1−h_j) z_j v_j over j > i
      double suffix = 0.0;
      for (std::size_t k = n; k-- > 0;) {
        out[k] = hh[k] * suffix;
        suffix += (1.0 - hh[k]) * zz[k] * v[k];
      }
      double prefix = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        prefix += hh[i] * zz[i] * zz[i] * v[i];
        out[i] = v[i] + w * (1.5 * (1.0 - hh[i]) * prefix + out[i]);
      }
    };
    auto adjoint = [h, z, w, n](std::span<const double> u, std::span<double> out) {
      const Vector& hh = *h;
      const Vector& zz = *z;
      // lower part: Σ_{i≥j} (1−h_i) u_i
      double suffix = 0.0;
      for (std::size_t k = n; k-- > 0;) {
        suffix += (1.0 - hh[k]) * u[k];
        out[k] = 1.5 * hh[k] * zz[k] * zz[k] * suffix;
      }
      double prefix = 0.0;  // Σ_{i<j} h_i u_i
      for (std::size_t j = 0; j < n; ++j) {
        out[j] = u[j] + w * (out[j] + (1.0 - hh[j]) * zz[j] * prefix);
        prefix += hh[j] * u[j];
      }
    };
    return LinearOperator(n, n, forward, adjoint);
  }

 private:
  Vector h_;
  Vector z_;  // x_j + h_j + 1
  double w_;
};

class IeProblem final : public ResidualProblem {
 public:
  IeProblem(std::size_t n, IeForm form) : n_(n), form_(form), h_(grid(n)) {}

  std::string name() const override { return "ie"; }
  std::size_t residual_size() const override { return n_; }
  std::size_t variable_size() const override { return n_; }
  double objective_scale() const override { return 0.5; }
  bool is_system() const override { return true; }

  Vector residual(std::span<const double> x) const override {
    check_length(x, n_);
    const double w = weight_for(form_, n_);
    Vector f(n_);
    double suffix = 0.0;
    for (std::size_t k = n_; k-- > 0;) {
      f[k] = 0.5 * h_[k] * suffix;
      const double z = x[k] + h_[k] + 1.0;
      suffix += (1.0 - h_[k]) * z * z;
    }
    double prefix = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double z = x[i] + h_[i] + 1.0;
      prefix += h_[i] * z * z * z;
      f[i] = x[i] + w * (0.5 * (1.0 - h_[i]) * prefix + f[i]);
    }
    return f;
  }

  std::shared_ptr<const JacobianView> jacobian(std::span<const double> x) const override {
    check_length(x, n_);
    Vector z(n_);
    for (std::size_t j = 0; j < n_; ++j) z[j] = x[j] + h_[j] + 1.0;
    return std::make_shared<IeJacobian>(h_, std::move(z), weight_for(form_, n_));
  }

  Vector initial_point(Rng& rng) const override {
    std::normal_distribution<double> normal;
    Vector x(n_);
    for (double& v : x) v = normal(rng);
    return x;
  }

 private:
  std::size_t n_;
  IeForm form_;
  Vector h_;
};

}  // namespace

ProblemPtr ie_problem(std::size_t n, IeForm form) {
  if (n < 1) throw ConfigError("ie_problem: n must be at least 1");
  return std::make_shared<IeProblem>(n, form);
}

Vector ie_residual_reference(std::span<const double> x, IeForm form) {
  const std::size_t n = x.size();
  const Vector h = grid(n);
  const double w = weight_for(form, n);
  Vector f(n);
  for (std::size_t i = 0; i < n; ++i) {
    double lower = 0.0, upper = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double z = x[j] + h[j] + 1.0;
      if (j <= i)
        lower += h[j] * std::pow(z, 3);
      else
        upper += (1.0 - h[j]) * std::pow(z, 2);
    }
    f[i] = x[i] + w * (0.5 * (1.0 - h[i]) * lower + 0.5 * h[i] * upper);
  }
  return f;
}

}  // namespace sgn
