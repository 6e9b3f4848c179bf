#include "sgn/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sgn {

namespace {

constexpr int kRefreshEvery = 20;
constexpr double kEps = std::numeric_limits<double>::epsilon();
// Below this multiple of ‖A‖ the last rotated diagonal is roundoff from a Lanczos breakdown.
constexpr double kSingularTol = 1e-10;

double effective_eta(double eta) {
  if (!(eta >= 0.0 && eta < 1.0)) throw std::invalid_argument("eta must lie in [0, 1)");
  return eta == 0.0 ? 1e-14 : eta;
}

// ‖opᵀ(op·x + b)‖
double normal_residual(const LinearOperator& op, std::span<const double> b, std::span<const double> x) {
  Vector r = sgn::apply(op, x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
  return norm2(sgn::apply(op, r, true));
}

}  // namespace

KrylovResult krylov_ls_solve(const LinearOperator& op, std::span<const double> b, double eta, int max_inner) {
  if (b.size() != op.rows())
    throw std::invalid_argument("dimension mismatch: rhs has length " + std::to_string(b.size()) +
                                ", operator has " + std::to_string(op.rows()) + " rows");
  eta = effective_eta(eta);
  const std::size_t m = op.rows(), n = op.cols();
  if (max_inner <= 0) max_inner = static_cast<int>(2 * n);

  KrylovResult result;
  result.step.assign(n, 0.0);
  Vector& x = result.step;

  Vector u(b.begin(), b.end());
  scale(-1.0, u);
  double beta = norm2(u);
  Vector v(n, 0.0);
  double alpha = 0.0;
  if (beta > 0.0) {
    scale(1.0 / beta, u);
    op.apply_into(u, v, true);
    alpha = norm2(v);
  }
  result.initial_normal_residual = alpha * beta;
  if (alpha == 0.0 || beta == 0.0) {
    result.initial_normal_residual = 0.0;
    result.converged = true;
    return result;
  }
  scale(1.0 / alpha, v);
  const double tolerance = eta * result.initial_normal_residual;

  Vector w = v, av(m), atu(n);
  double phibar = beta, rhobar = alpha;
  for (int it = 1; it <= max_inner; ++it) {
    op.apply_into(v, av);
    for (std::size_t i = 0; i < m; ++i) u[i] = av[i] - alpha * u[i];
    beta = norm2(u);
    if (beta > 0.0) {
      scale(1.0 / beta, u);
      op.apply_into(u, atu, true);
      for (std::size_t j = 0; j < n; ++j) v[j] = atu[j] - beta * v[j];
      alpha = norm2(v);
      if (alpha > 0.0) scale(1.0 / alpha, v);
    } else {
      alpha = 0.0;
    }

    const double rho = std::hypot(rhobar, beta);
    const double c = rhobar / rho, s = beta / rho;
    const double theta = s * alpha;
    rhobar = -c * alpha;
    const double phi = c * phibar;
    phibar = s * phibar;
    axpy(phi / rho, w, x);
    for (std::size_t j = 0; j < n; ++j) w[j] = v[j] - (theta / rho) * w[j];
    result.inner_iterations = it;

    // recurrence estimate of ‖opᵀr‖; confirmed explicitly before stopping
    const double estimate = phibar * alpha * std::abs(c);
    const bool exhausted = alpha == 0.0 || beta == 0.0;
    if (estimate <= tolerance || exhausted || it % kRefreshEvery == 0 || it == max_inner) {
      result.normal_residual = normal_residual(op, b, x);
      if (result.normal_residual <= tolerance) {
        result.converged = true;
        return result;
      }
      if (exhausted) break;
    }
  }
  result.normal_residual = normal_residual(op, b, x);
  result.converged = result.normal_residual <= tolerance;
  return result;
}

namespace {

void sym_ortho(double a, double b, double& c, double& s, double& r) {
  if (b == 0.0) {
    s = 0.0;
    r = std::abs(a);
    c = a == 0.0 ? 1.0 : std::copysign(1.0, a);
  } else if (a == 0.0) {
    c = 0.0;
    s = std::copysign(1.0, b);
    r = std::abs(b);
  } else if (std::abs(b) > std::abs(a)) {
    const double t = a / b;
    s = std::copysign(1.0, b) / std::sqrt(1.0 + t * t);
    c = s * t;
    r = b / s;
  } else {
    const double t = b / a;
    c = std::copysign(1.0, a) / std::sqrt(1.0 + t * t);
    s = c * t;
    r = a / c;
  }
}

}  // namespace

KrylovResult minres_qlp_solve(const LinearOperator& op, std::span<const double> b, double eta, int max_inner) {
  if (op.rows() != op.cols()) throw std::invalid_argument("minres_qlp_solve: operator is not square");
  if (b.size() != op.rows())
    throw std::invalid_argument("dimension mismatch: rhs has length " + std::to_string(b.size()) +
                                ", operator has " + std::to_string(op.rows()) + " rows");
  if (symmetry_mismatch(op) > 1e-10) throw std::invalid_argument("minres_qlp_solve: operator is not symmetric");
  eta = effective_eta(eta);
  const std::size_t n = op.rows();
  if (max_inner <= 0) max_inner = static_cast<int>(2 * n);

  KrylovResult result;
  result.step.assign(n, 0.0);
  Vector& x = result.step;

  Vector rhs(b.begin(), b.end());
  scale(-1.0, rhs);
  const double beta1 = norm2(rhs);
  result.initial_normal_residual = beta1 > 0.0 ? norm2(sgn::apply(op, rhs)) : 0.0;
  if (result.initial_normal_residual == 0.0) {
    result.converged = true;
    return result;
  }
  const double tolerance = eta * result.initial_normal_residual;
  const double trancond = 1e7;
  const double acond_limit = 0.1 / kEps;

  Vector r1 = rhs, r2 = rhs, y = rhs, v(n), w(n, 0.0), wl(n, 0.0), wl2(n, 0.0), xl2(n, 0.0);
  double beta = 0.0, betan = beta1, phi = beta1;
  double cs = -1.0, sn = 0.0, cr1 = -1.0, sr1 = 0.0, cr2 = -1.0, sr2 = 0.0;
  double dltan = 0.0, eplnn = 0.0, epln = 0.0;
  double gama = 0.0, gamal = 0.0, gamal2 = 0.0, gamal3 = 0.0;
  double eta_ = 0.0, etal = 0.0, etal2 = 0.0;
  double vepln = 0.0, veplnl = 0.0, veplnl2 = 0.0;
  double tau = 0.0, taul = 0.0, taul2 = 0.0;
  double u = 0.0, ul = 0.0, ul2 = 0.0, ul3 = 0.0, ul4 = 0.0;
  double anorm = 0.0, acond = 1.0, gmin = 0.0, gminl = 0.0, rnorm = beta1;
  double gama_qlp = 0.0, gamal_qlp = 0.0, vepln_qlp = 0.0, u_qlp = 0.0, ul_qlp = 0.0;
  int qlp_iter = 0;

  for (int it = 1; it <= max_inner; ++it) {
    // Lanczos step
    const double betal = beta;
    beta = betan;
    for (std::size_t i = 0; i < n; ++i) v[i] = y[i] / beta;
    op.apply_into(v, y);
    if (it >= 2) axpy(-beta / betal, r1, y);
    const double alfa = dot(v, y);
    axpy(-alfa / beta, r2, y);
    r1 = r2;
    r2 = y;
    betan = norm2(y);
    const double pnorm = it == 1 ? std::hypot(alfa, betan) : std::sqrt(beta * beta + alfa * alfa + betan * betan);

    // previous left reflection
    const double dbar = dltan;
    double dlta = cs * dbar + sn * alfa;
    epln = eplnn;
    const double gbar = sn * dbar - cs * alfa;
    eplnn = sn * betan;
    dltan = -cs * betan;
    const double dlta_qlp = dlta;

    // current left reflection
    gamal3 = gamal2;
    gamal2 = gamal;
    gamal = gama;
    sym_ortho(gbar, betan, cs, sn, gama);
    const double gama_tmp = gama;
    taul2 = taul;
    taul = tau;
    tau = cs * phi;
    phi = sn * phi;

    // previous right reflection P_{k-2,k}
    if (it > 2) {
      veplnl2 = veplnl;
      etal2 = etal;
      etal = eta_;
      const double dlta_tmp = sr2 * vepln - cr2 * dlta;
      veplnl = cr2 * vepln + sr2 * dlta;
      dlta = dlta_tmp;
      eta_ = sr2 * gama;
      gama = -cr2 * gama;
    }
    // current right reflection P_{k-1,k}
    if (it > 1) {
      double gamal_tmp;
      sym_ortho(gamal, dlta, cr1, sr1, gamal_tmp);
      gamal = gamal_tmp;
      vepln = sr1 * gama;
      gama = -cr1 * gama;
    }

    // solution-norm bookkeeping
    ul4 = ul3;
    ul3 = ul2;
    if (it > 2) ul2 = (taul2 - etal2 * ul4 - veplnl2 * ul3) / gamal2;
    if (it > 1) ul = (taul - etal * ul3 - veplnl * ul2) / gamal;
    bool singular_stop = false;
    const double scale_now = std::max(anorm, pnorm);
    if (std::abs(gama) > kSingularTol * scale_now) {
      u = (tau - eta_ * ul2 - vepln * ul) / gama;
    } else {
      u = 0.0;
      singular_stop = true;
    }

    // switch on the current column too, so a near-singular pivot never enters a MINRES update
    const bool ill_now = scale_now >= trancond * std::abs(gama);
    if (acond < trancond && !ill_now && !singular_stop && qlp_iter == 0) {
      // MINRES update
      wl2 = wl;
      wl = w;
      if (gama_tmp > 0.0) {
        for (std::size_t i = 0; i < n; ++i) w[i] = (v[i] - epln * wl2[i] - dlta_qlp * wl[i]) / gama_tmp;
      }
      axpy(tau, w, x);
    } else {
      // MINRES-QLP update
      ++qlp_iter;
      if (qlp_iter == 1) {
        std::fill(xl2.begin(), xl2.end(), 0.0);
        if (it > 1) {
          if (it > 3)
            for (std::size_t i = 0; i < n; ++i) wl2[i] = gamal3 * wl2[i] + veplnl2 * wl[i] + etal * w[i];
          if (it > 2)
            for (std::size_t i = 0; i < n; ++i) wl[i] = gamal_qlp * wl[i] + vepln_qlp * w[i];
          scale(gama_qlp, w);
          for (std::size_t i = 0; i < n; ++i) xl2[i] = x[i] - ul_qlp * wl[i] - u_qlp * w[i];
        }
      }
      if (it == 1) {
        wl2 = wl;
        for (std::size_t i = 0; i < n; ++i) {
          wl[i] = sr1 * v[i];
          w[i] = -cr1 * v[i];
        }
      } else if (it == 2) {
        wl2 = wl;
        for (std::size_t i = 0; i < n; ++i) {
          const double wi = w[i];
          wl[i] = cr1 * wi + sr1 * v[i];
          w[i] = sr1 * wi - cr1 * v[i];
        }
      } else {
        wl2 = wl;
        wl = w;
        for (std::size_t i = 0; i < n; ++i) {
          const double w_new = sr2 * wl2[i] - cr2 * v[i];
          wl2[i] = cr2 * wl2[i] + sr2 * v[i];
          const double tmp = cr1 * wl[i] + sr1 * w_new;
          w[i] = sr1 * wl[i] - cr1 * w_new;
          wl[i] = tmp;
        }
      }
      axpy(ul2, wl2, xl2);
      for (std::size_t i = 0; i < n; ++i) x[i] = xl2[i] + ul * wl[i] + u * w[i];
    }

    // next right reflection P_{k-1,k+1}
    const double gamal_tmp = gamal;
    sym_ortho(gamal_tmp, eplnn, cr2, sr2, gamal);
    gamal_qlp = gamal_tmp;
    vepln_qlp = vepln;
    gama_qlp = gama;
    ul_qlp = ul;
    u_qlp = u;

    // norm and condition estimates
    const double abs_gama = std::abs(gama);
    anorm = std::max({anorm, pnorm, gamal, abs_gama});
    if (it == 1) {
      gmin = gama;
      gminl = gmin;
    } else {
      const double gminl2 = gminl;
      gminl = gmin;
      gmin = std::min({gminl2, gamal, abs_gama});
    }
    acond = anorm / gmin;
    const double rnorml = rnorm;
    if (!singular_stop) rnorm = phi;
    // ‖op·r_{k-1}‖ from the recurrences (lags one iteration)
    const double lagged_estimate = rnorml * std::hypot(gbar, dltan);

    result.inner_iterations = it;
    const bool breakdown = betan <= kEps * anorm;
    const bool stop = singular_stop || breakdown || acond >= acond_limit || it == max_inner;
    if (lagged_estimate <= tolerance || rnorm <= kEps * beta1 || stop || it % kRefreshEvery == 0) {
      result.normal_residual = normal_residual(op, b, x);
      if (result.normal_residual <= tolerance) {
        result.converged = true;
        return result;
      }
      if (stop) break;
    }
  }
  result.normal_residual = normal_residual(op, b, x);
  result.converged = result.normal_residual <= tolerance;
  return result;
}

LinearOperator tikhonov_augment(const LinearOperator& op, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("tikhonov_augment: lambda must be positive");
  const double root = std::sqrt(lambda);
  const std::size_t m = op.rows(), n = op.cols();
  auto forward = [op, root, m, n](std::span<const double> v, std::span<double> out) {
    op.apply_into(v, out.subspan(0, m));
    for (std::size_t j = 0; j < n; ++j) out[m + j] = root * v[j];
  };
  auto adjoint = [op, root, m, n](std::span<const double> u, std::span<double> out) {
    op.apply_into(u.subspan(0, m), out, true);
    for (std::size_t j = 0; j < n; ++j) out[j] += root * u[m + j];
  };
  return LinearOperator(m + n, n, forward, adjoint);
}

}  // namespace sgn
