#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sgn/linops.hpp"
#include "sgn/random.hpp"

namespace sgn {

struct Dataset {
  SparseMatrix features;  // one row per example
  std::vector<int> labels;  // 0 or 1
  std::shared_ptr<const Dataset> validation;

  std::size_t examples() const { return features.rows(); }
  std::size_t feature_count() const { return features.cols(); }
  // Throws ConfigError on label/row count mismatch or non-binary labels.
  void validate() const;
};

// Jacobian of a residual at a fixed point. Keeps whatever state it needs alive, so operators
// built from it stay valid after the problem call returns.
class JacobianView {
 public:
  virtual ~JacobianView() = default;
  virtual std::size_t rows() const = 0;
  virtual std::size_t cols() const = 0;
  virtual double entry(std::size_t i, std::size_t j) const = 0;
  // Structural nonzeros of row i.
  virtual void row(std::size_t i, std::vector<std::size_t>& columns, std::vector<double>& values) const;
  virtual DenseMatrix dense() const;
  virtual LinearOperator full_operator() const = 0;
  virtual bool symmetric() const { return false; }

  // Sum-structured Jacobians (J = Σ Θ_i) expose their terms.
  virtual std::size_t term_count() const { return 0; }
  // out += weight·Θ_i·v
  virtual void accumulate_term(std::size_t i, double weight, std::span<const double> v,
                               std::span<double> out) const;
};

class ResidualProblem {
 public:
  virtual ~ResidualProblem() = default;
  virtual std::string name() const = 0;
  virtual std::size_t residual_size() const = 0;
  virtual std::size_t variable_size() const = 0;
  virtual Vector residual(std::span<const double> x) const = 0;
  virtual std::shared_ptr<const JacobianView> jacobian(std::span<const double> x) const = 0;
  virtual Vector initial_point(Rng& rng) const = 0;
  // f = objective_scale()·‖R‖²
  virtual double objective_scale() const = 0;
  // Nonlinear systems (square, F = 0 sought) versus least squares.
  virtual bool is_system() const { return false; }

  double gradient_scale() const { return 2.0 * objective_scale(); }
  double objective(std::span<const double> x) const;
  double objective_from_residual(std::span<const double> r) const;
  // gradient_scale()·JᵀR
  Vector gradient(std::span<const double> x) const;
  const Dataset* validation_data() const { return validation_.get(); }

 protected:
  std::shared_ptr<const Dataset> validation_;
};

using ProblemPtr = std::shared_ptr<const ResidualProblem>;

enum class LsScaling {
  mean_half,    // f = ‖R‖²/(2m)
  sum_squares,  // f = ‖R‖²
};

enum class IeForm {
  unweighted,           // sums enter F without a quadrature factor
  quadrature_weighted,  // both sums multiplied by 1/(n+1)
};

double sigmoid(double z);
double sigmoid_derivative(double z);
// log(1 + e^z) without overflow
double log1p_exp(double z);

ProblemPtr sigmoid_ls_problem(std::shared_ptr<const Dataset> data, LsScaling scaling = LsScaling::mean_half);
ProblemPtr ie_problem(std::size_t n, IeForm form = IeForm::unweighted);
ProblemPtr softmax_problem(std::shared_ptr<const Dataset> data);

// Σ_i log(1 + e^{a_iᵀx}) − 1(b_i = 1)·a_iᵀx, whose gradient is the softmax residual.
double softmax_loss(const Dataset& data, std::span<const double> x);
// O(n²) literal evaluation of the IE residual.
Vector ie_residual_reference(std::span<const double> x, IeForm form = IeForm::unweighted);

Dataset libsvm_load(const std::filesystem::path& path, std::optional<std::size_t> feature_count = {});
void libsvm_save(const Dataset& data, const std::filesystem::path& path);

// Gaussian features, labels from a random hyperplane, points closer than margin to it rejected.
Dataset make_separable_dataset(std::size_t m, std::size_t n, double margin, Rng& rng);
// Gaussian features, labels drawn from the logistic model of a random weight vector.
Dataset make_logistic_dataset(std::size_t m, std::size_t n, Rng& rng);

double classification_accuracy(std::span<const double> x, const Dataset& data);

}  // namespace sgn
