#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "sgn/linops.hpp"
#include "sgn/problems.hpp"
#include "sgn/random.hpp"

namespace sgn {

enum class SampleKind { row_compression, entry_sparsification, sum_subsampling };
enum class ProbabilityMode { uniform, importance };

struct SamplePlan {
  SampleKind kind = SampleKind::row_compression;
  ProbabilityMode probability_mode = ProbabilityMode::uniform;
  double alpha = 1.0;
  double delta = 0.4;  // δ_g for row compression, δ_J otherwise
  double gamma = 1.0;
  std::optional<std::size_t> m_max;  // defaults to the row count
  double min_fraction = 0.01;        // row floor for row compression, ξ for sum subsampling
  std::optional<double> fixed_density;
  bool keep_diagonal = false;
  // Sum subsampling: J = total_scaling · mean of the terms. Defaults to the term count.
  std::optional<double> total_scaling;
  // Lower bound εψ on ‖g_{k-1}‖ inside the gradient accuracy target; 0 disables it.
  double gradient_floor = 0.0;

  // Throws ConfigError.
  void validate() const;
};

struct SampledModel {
  LinearOperator jacobian;
  Vector residual;
  Vector gradient;
  std::size_t sample_size = 0;
  double scaling = 1.0;  // gradient = scaling · jacobianᵀ residual
  // Sampled rows, entries or terms as a fraction of a full Jacobian evaluation.
  double evaluation_fraction = 0.0;
  bool exact = false;  // the whole population was used with unit weights
};

std::size_t bernstein_sample_size(double v, double M, double rho, double delta, std::size_t dims_sum);

std::size_t rc_sample_size(std::span<const double> residual, double rho, double gamma, std::size_t m_max,
                           std::size_t m, std::size_t n, double delta_g, double min_fraction = 0.01);

// i.i.d. draws from a discrete distribution.
std::vector<std::size_t> draw_indices(std::span<const double> probabilities, std::size_t size, Rng& rng);

// p_i ∝ ½(‖J_i‖²/‖J‖_F² + ‖J_i‖|R_i| / Σ_k ‖J_k‖|R_k|)
Vector row_probs_importance(const JacobianView& jac, std::span<const double> residual);

// Rows J_i/(size·p_i) for each drawn i, residual entries unweighted.
SampledModel row_compress(const JacobianView& jac, std::span<const double> residual, double scaling,
                          std::span<const std::size_t> drawn, std::span<const double> probabilities);
SampledModel row_compress(const ResidualProblem& problem, std::span<const double> x, std::size_t size,
                          std::span<const double> probabilities, Rng& rng);

// p_ij = ½(J_ij²/‖J‖_F² + |J_ij|/‖J‖_ℓ1). With exclude_diagonal the diagonal gets probability 0
// and the norms run over off-diagonal entries.
DenseMatrix entry_probs_importance(const DenseMatrix& j, bool exclude_diagonal = false);

// Square rule with cap n(n-1).
std::size_t sparsify_size_importance(double l1, double fro2, std::size_t n, double alpha, double t,
                                     double delta_J);
// m×n generalization: log((m+n)/δ), factor max(m, n), explicit cap.
std::size_t sparsify_size_importance(double l1, double fro2, std::size_t m, std::size_t n, double alpha, double t,
                                     double delta_J, std::size_t cap);

// Second moment v = max(‖E[XXᵀ]‖, ‖E[XᵀX]‖) and bound M = max‖X‖ of the single-draw estimator
// X = (J_ij/p_ij)·E_ij.
struct EntryMoments {
  double v = 0.0;
  double M = 0.0;
};
EntryMoments entry_sampling_moments(const DenseMatrix& j, const DenseMatrix& probs);

// (1/size)·Σ J_ij/p_ij E_ij over i.i.d. draws from probs.
SparseMatrix sparsify_importance(const DenseMatrix& j, const DenseMatrix& probs, std::size_t size,
                                 bool keep_diagonal, Rng& rng);
// size distinct positions drawn uniformly without replacement, copied without reweighting.
SparseMatrix sparsify_uniform_fixed(const JacobianView& jac, std::size_t size, bool keep_diagonal, Rng& rng);
// size i.i.d. uniform draws, each weighted by population/size.
SparseMatrix sparsify_uniform_weighted(const JacobianView& jac, std::size_t size, bool keep_diagonal, Rng& rng);

std::size_t sum_sample_size(double alpha, double t, double delta_J, std::size_t n, std::size_t N, double xi);

// v ↦ (total_scaling/|sample|)·Σ_{i∈sample} Θ_i v
LinearOperator subsample_sum_operator(std::shared_ptr<const JacobianView> terms, std::vector<std::size_t> sample,
                                      double total_scaling);

// Step 1.1 of the outer iteration: builds the sampled model at the current point.
// previous_gradient_norm feeds the row-compression accuracy target.
SampledModel build_sampled_model(const ResidualProblem& problem, std::shared_ptr<const JacobianView> jac,
                                 std::span<const double> residual, const SamplePlan& plan, double t,
                                 double previous_gradient_norm, Rng& rng);

}  // namespace sgn
