#pragma once

#include "sgn/linops.hpp"

namespace sgn {

struct KrylovResult {
  Vector step;
  int inner_iterations = 0;
  double normal_residual = 0.0;          // ‖opᵀ(op·s + b)‖, evaluated explicitly on return
  double initial_normal_residual = 0.0;  // ‖opᵀb‖
  bool converged = false;
};

// Minimizes ‖op·s + b‖ from s = 0 with Golub-Kahan bidiagonalization (LSQR recurrences).
// Stops once ‖opᵀ(op·s + b)‖ <= eta·‖opᵀb‖. max_inner <= 0 selects 2·cols.
KrylovResult krylov_ls_solve(const LinearOperator& op, std::span<const double> b, double eta,
                             int max_inner = 0);

// MINRES-QLP for op·s = -b with op symmetric. Same stopping test and return contract.
KrylovResult minres_qlp_solve(const LinearOperator& op, std::span<const double> b, double eta,
                              int max_inner = 0);

// Stacks (op; sqrt(lambda)·I).
LinearOperator tikhonov_augment(const LinearOperator& op, double lambda);

}  // namespace sgn
