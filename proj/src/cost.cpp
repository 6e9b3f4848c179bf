#include "sgn/cost.hpp"

#include <cmath>

#include "sgn/errors.hpp"

namespace sgn {

double per_iteration_cost(CostVariant variant, std::size_t m, std::size_t n, std::size_t N, std::size_t sample_size,
                          int inner_iterations, double density) {
  if (m == 0 || n == 0) throw std::invalid_argument("per_iteration_cost: dimensions must be positive");
  const double md = static_cast<double>(m), nd = static_cast<double>(n), Nd = static_cast<double>(N);
  const double size = static_cast<double>(sample_size), ell = static_cast<double>(inner_iterations);
  switch (variant) {
    case CostVariant::row_compression:
      return md / nd + 2.0 * ell * size + size;
    case CostVariant::sparsify_importance:
      return 1.0 + 2.0 * nd + 2.0 * ell * (size + nd) / nd;
    case CostVariant::sparsify_uniform_square:
      return 2.0 + density * nd + 2.0 * ell * density * nd;
    case CostVariant::sparsify_uniform_ls:
      return (md + 2.0 * ell * size + size) / nd;
    case CostVariant::sum_subsampling:
      return Nd + size * ell;
    case CostVariant::exact_square:
      return 1.0 + nd + 2.0 * ell * nd;
  }
  throw ConfigError("unknown cost variant");
}

namespace {

constexpr std::pair<CostVariant, std::string_view> kVariantNames[] = {
    {CostVariant::row_compression, "row_compression"},
    {CostVariant::sparsify_importance, "sparsify_importance"},
    {CostVariant::sparsify_uniform_square, "sparsify_uniform_square"},
    {CostVariant::sparsify_uniform_ls, "sparsify_uniform_ls"},
    {CostVariant::sum_subsampling, "sum_subsampling"},
    {CostVariant::exact_square, "exact_square"},
};

}  // namespace

std::string_view to_string(CostVariant variant) {
  for (const auto& [v, name] : kVariantNames)
    if (v == variant) return name;
  return "unknown";
}

CostVariant parse_cost_variant(std::string_view tag) {
  for (const auto& [v, name] : kVariantNames)
    if (name == tag) return v;
  throw ConfigError("unknown cost variant '" + std::string(tag) + "'");
}

bool stabilization_stop(std::span<const double> f_history, double chi, std::size_t patience_iters) {
  if (!(chi > 0.0)) throw std::invalid_argument("stabilization_stop: chi must be positive");
  if (patience_iters == 0) return true;
  if (f_history.size() < patience_iters + 1) return false;
  for (std::size_t k = f_history.size() - patience_iters; k < f_history.size(); ++k) {
    const double prev = f_history[k - 1];
    if (!(std::abs(f_history[k] - prev) <= chi * prev + chi)) return false;
  }
  return true;
}

}  // namespace sgn
