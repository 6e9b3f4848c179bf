#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace sgn {

// Per-iteration work, in units of n scalar operations.
enum class CostVariant {
  row_compression,          // m/n + 2ℓ|M| + |M|
  sparsify_importance,      // 1 + 2n + 2ℓ(|M|+n)/n
  sparsify_uniform_square,  // 2 + sn + 2ℓsn
  sparsify_uniform_ls,      // (m + 2ℓ|M| + |M|)/n
  sum_subsampling,          // N + |M|ℓ
  exact_square,             // 1 + n + 2ℓn
};

double per_iteration_cost(CostVariant variant, std::size_t m, std::size_t n, std::size_t N, std::size_t sample_size,
                          int inner_iterations, double density);

std::string_view to_string(CostVariant variant);
// Throws ConfigError on an unknown tag.
CostVariant parse_cost_variant(std::string_view tag);

// True iff |f_{k+1} − f_k| <= chi·f_k + chi held for each of the last patience_iters steps.
bool stabilization_stop(std::span<const double> f_history, double chi, std::size_t patience_iters);

}  // namespace sgn
