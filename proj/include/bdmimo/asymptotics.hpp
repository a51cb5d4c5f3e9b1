/**
 * @file asymptotics.hpp
 * @brief Large-system rate formulas and the Marchenko-Pastur machinery
 *        behind them.
 *
 * All rates are in bits (log base 2).  beta = N/M counts normalized transmit
 * dimensions; after interference nulling each user keeps beta_k = beta - K + 1
 * of them.  Closed forms exist away from full load; at or near full load the
 * water-filling rate is evaluated by direct quadrature against the
 * Marchenko-Pastur density.
 */
#pragma once

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

#include "bdmimo/precoders.hpp"
#include "bdmimo/types.hpp"

namespace bdmimo {

inline constexpr double kLog2E = 1.4426950408889634;

/// Scale-free inputs of the per-user asymptotic formulas.
struct AsymptoticParams {
  double beta;    ///< N/M
  double beta_k;  ///< beta - K + 1
  double rho;     ///< per-user SNR P_k / noise_var
  int m_user;     ///< antennas per user (linear scaling factor)
};

/// Which evaluation path produced an asymptotic value.
enum class RateRegime {
  kClosedForm,           ///< closed form, inside its validity region
  kWaterfillQuadrature,  ///< water-filling solved on the limiting spectrum
  kFullLoad,             ///< fully loaded closed/quadrature form
  kFullLoadBound,        ///< fully loaded ZF replaced by its upper bound
  kFullLoadLimit,        ///< fully loaded ZF limit value (zero)
};

inline const char* regime_label(RateRegime r) {
  switch (r) {
    case RateRegime::kClosedForm: return "closed-form";
    case RateRegime::kWaterfillQuadrature: return "waterfill-quadrature";
    case RateRegime::kFullLoad: return "full-load";
    case RateRegime::kFullLoadBound: return "full-load-bound";
    case RateRegime::kFullLoadLimit: return "full-load-limit";
  }
  return "?";
}

/// Support edges of the Marchenko-Pastur law with ratio parameter beta.
struct MpSupport {
  double lower;
  double upper;
};

inline MpSupport mp_support(double beta) {
  const double s = std::sqrt(beta);
  return {(1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s)};
}

/// Marchenko-Pastur density f_beta(x) for beta >= 1; zero off support.
inline double mp_density(double x, double beta) {
  if (!(beta >= 1.0)) {
    throw std::invalid_argument("mp_density: beta must be >= 1");
  }
  const MpSupport s = mp_support(beta);
  if (x <= s.lower || x >= s.upper) return 0.0;
  return std::sqrt((x - s.lower) * (s.upper - x)) / (2.0 * std::numbers::pi * x);
}

namespace detail {

/// Integrates g over (lo, hi) with endpoint-singularity-tolerant quadrature.
/// tanh_sinh runs on (0, 1): its abscissas nearest an endpoint are only
/// guaranteed representable there, while a raw (lo, hi) call can abort when
/// the endpoint complement rounds onto lo.  Abscissas that still collapse
/// onto an edge contribute zero (every integrand vanishes off the open
/// interval).
template <typename G>
double integrate(G&& g, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  static thread_local boost::math::quadrature::tanh_sinh<double> quad;
  const double width = hi - lo;
  return width * quad.integrate(
                     [&](double t) {
                       const double x = lo + width * t;
                       if (x <= lo || x >= hi) return 0.0;
                       return g(x);
                     },
                     0.0, 1.0, 1.0e-11);
}

/// Expectation of g under the MP(beta) law restricted to [lo, hi].
template <typename G>
double mp_integral(G&& g, double beta, double lo, double hi) {
  return integrate([&](double x) { return g(x) * mp_density(x, beta); }, lo, hi);
}

inline double solve_bracketed(const std::function<double(double)>& f, double lo,
                              double hi) {
  auto tol = boost::math::tools::eps_tolerance<double>(50);
  std::uintmax_t max_iter = 200;
  auto r = boost::math::tools::toms748_solve(f, lo, hi, tol, max_iter);
  return 0.5 * (r.first + r.second);
}

}  // namespace detail

/**
 * Total power absorbed by a water level nu_bar >= 1/4 on the unit-ratio MP
 * spectrum: (1/2pi) [ (1+2 nu_bar) arccos((1-2 nu_bar)/(2 nu_bar))
 *                     - 3 sqrt(4 nu_bar - 1) ].
 * Monotonically increasing in nu_bar, zero at nu_bar = 1/4.
 */
inline double mp_level_to_rho(double nu_bar) {
  if (!(nu_bar >= 0.25)) {
    throw RegimeError("mp_level_to_rho: level " + std::to_string(nu_bar) +
                      " is below 0.25, where no spectrum mass is covered");
  }
  const double arg = std::clamp((1.0 - 2.0 * nu_bar) / (2.0 * nu_bar), -1.0, 1.0);
  return ((1.0 + 2.0 * nu_bar) * std::acos(arg) -
          3.0 * std::sqrt(4.0 * nu_bar - 1.0)) /
         (2.0 * std::numbers::pi);
}

/// Inverse of mp_level_to_rho; unique for every rho > 0.
inline double rho_to_mp_level(double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("rho_to_mp_level: rho must be positive");
  double hi = 0.5;
  while (mp_level_to_rho(hi) < rho) hi *= 2.0;
  return detail::solve_bracketed(
      [rho](double nu) { return mp_level_to_rho(nu) - rho; }, 0.25, hi);
}

/// Smallest per-user SNR at which every eigenmode stays active for
/// beta_k > 1 (water level reaches the lower spectrum edge).
inline double svd_regime_min_rho(double beta_k) {
  return 2.0 / ((std::sqrt(beta_k) - 1.0) * (beta_k - 1.0));
}

/**
 * Per-user water-filled eigenbeamforming rate for beta_k > 1, all modes
 * active:
 * M [ log2(1 + rho (beta_k - 1)) + beta_k log2(beta_k)
 *     - beta_k log2(beta_k - 1) - log2 e ].
 */
inline double svd_rate_excess(const AsymptoticParams& p) {
  if (!(p.beta_k > 1.0)) {
    throw RegimeError("svd_rate_excess: requires beta_k > 1");
  }
  if (p.rho < svd_regime_min_rho(p.beta_k)) {
    throw RegimeError("svd_rate_excess: rho=" + std::to_string(p.rho) +
                      " below the all-modes-active threshold " +
                      std::to_string(svd_regime_min_rho(p.beta_k)));
  }
  return p.m_user * (std::log2(1.0 + p.rho * (p.beta_k - 1.0)) +
                     p.beta_k * std::log2(p.beta_k) -
                     p.beta_k * std::log2(p.beta_k - 1.0) - kLog2E);
}

/**
 * Per-user rate at full load (beta_k = 1): water level from the power
 * constraint, then M * integral of log2(nu_bar x) over the covered part of
 * the unit-ratio MP spectrum.
 */
inline double svd_rate_fullload(double rho, int m_user) {
  const double nu_bar = rho_to_mp_level(rho);
  const double lo = 1.0 / nu_bar;
  if (lo >= 4.0) return 0.0;
  return m_user * detail::mp_integral(
                      [nu_bar](double x) { return std::log2(nu_bar * x); }, 1.0,
                      lo, 4.0);
}

/**
 * Per-user water-filled rate on the limiting MP(beta_k) spectrum for any
 * beta_k >= 1 and any rho: solves the level equation by quadrature and
 * root bracketing.  Coincides with svd_rate_excess inside its regime and
 * with svd_rate_fullload at beta_k = 1.
 */
inline double svd_rate_mp_waterfill(double beta_k, double rho, int m_user) {
  if (!(beta_k >= 1.0)) {
    throw RegimeError("svd_rate_mp_waterfill: requires beta_k >= 1");
  }
  if (!(rho > 0.0)) return 0.0;
  const MpSupport s = mp_support(beta_k);
  auto budget = [&](double nu_bar) {
    const double lo = std::max(s.lower, 1.0 / nu_bar);
    return detail::mp_integral([nu_bar](double x) { return nu_bar - 1.0 / x; },
                               beta_k, lo, s.upper);
  };
  double hi = std::max(2.0 / s.upper, 0.5);
  while (budget(hi) < rho) hi *= 2.0;
  const double nu_bar = detail::solve_bracketed(
      [&](double nu) { return budget(nu) - rho; }, 1.0 / s.upper, hi);
  const double lo = std::max(s.lower, 1.0 / nu_bar);
  return m_user * detail::mp_integral(
                      [nu_bar](double x) { return std::log2(nu_bar * x); },
                      beta_k, lo, s.upper);
}

/// Per-user zero-forcing rate for beta_k > 1: M log2(1 + rho (beta_k - 1)).
inline double zf_rate_excess(const AsymptoticParams& p) {
  if (!(p.beta_k > 1.0)) {
    throw RegimeError("zf_rate_excess: the trace limit diverges as beta_k approaches one");
  }
  return p.m_user * std::log2(1.0 + p.rho * (p.beta_k - 1.0));
}

/// Concentration term of the Jensen bound; zero when either argument is 0.
inline double f_cal(double x, double y) {
  const double sy = std::sqrt(y);
  const double hi = std::sqrt(x * (1.0 + sy) * (1.0 + sy) + 1.0);
  const double lo = std::sqrt(x * (1.0 - sy) * (1.0 - sy) + 1.0);
  return (hi - lo) * (hi - lo) / 4.0;
}

/**
 * Jensen upper bound on the per-user ZF rate, valid down to beta_k = 1:
 * M [ beta_k log2(1 + rho - F) + log2(1 + rho beta_k - F) - (log2 e / rho) F ]
 * with F = f_cal(rho, beta_k).
 */
inline double zf_rate_upper_bound(const AsymptoticParams& p) {
  if (!(p.beta_k >= 1.0)) {
    throw RegimeError("zf_rate_upper_bound: requires beta_k >= 1");
  }
  if (p.rho == 0.0) return 0.0;
  const double f = f_cal(p.rho, p.beta_k);
  return p.m_user * (p.beta_k * std::log2(1.0 + p.rho - f) +
                     std::log2(1.0 + p.rho * p.beta_k - f) - kLog2E * f / p.rho);
}

/**
 * Per-user regularized ZF rate for beta_k >= 1:
 * M [ log2(1 + rho (beta_k-1) + sqrt(rho^2 (beta_k-1)^2
 *       + 2 rho (beta_k+1) + 1)) - 1 ].
 */
inline double rzf_rate(const AsymptoticParams& p) {
  if (!(p.beta_k >= 1.0)) {
    throw RegimeError("rzf_rate: requires beta_k >= 1");
  }
  const double q = p.beta_k - 1.0;
  return p.m_user *
         (std::log2(1.0 + p.rho * q +
                    std::sqrt(p.rho * p.rho * q * q +
                              2.0 * p.rho * (p.beta_k + 1.0) + 1.0)) -
          1.0);
}

/// Sum rate split into degrees of freedom times (dimension excess + array gain).
struct RateDecomposition {
  double dof_factor = 0.0;   ///< K * M
  double dim_excess = 0.0;   ///< log2(1 + rho (beta - K))
  double array_gain = 0.0;   ///< precoder-specific additive term
  double total = 0.0;        ///< dof_factor * (dim_excess + array_gain)
  RateRegime regime = RateRegime::kClosedForm;
};

/// Value reported for zero-forcing at exactly K = beta, where the plain
/// closed form degenerates: either the Jensen upper bound or the limit 0.
enum class FullLoadPolicy { kZfBound, kZfLimit };

/**
 * Asymptotic sum rate K M (I1 + I2) at arbitrary (beta, K, rho).
 *
 * I1 = log2(1 + rho (beta - K)); I2 is zero for ZF, the two-sided
 * regularization gain for RZF, and beta_k log2(1 + 1/(beta-K)) - log2 e for
 * eigenbeamforming when every mode is active.  Outside that region the
 * eigenbeamforming value falls back to the exact water-filling quadrature on
 * the limiting spectrum; at K = beta the full-load forms apply.
 */
inline RateDecomposition asymptotic_sum_rate(double beta, int k_users, double rho,
                                             int m_user, PrecoderKind kind,
                                             FullLoadPolicy policy = FullLoadPolicy::kZfBound) {
  if (!(beta >= 1.0)) throw std::invalid_argument("asymptotic_sum_rate: beta must be >= 1");
  if (k_users < 1 || static_cast<double>(k_users) > beta + 1.0e-9) {
    throw std::invalid_argument("asymptotic_sum_rate: K=" + std::to_string(k_users) +
                                " out of range [1, floor(beta=" + std::to_string(beta) + ")]");
  }
  if (!(rho >= 0.0)) throw std::invalid_argument("asymptotic_sum_rate: rho must be >= 0");

  RateDecomposition out;
  out.dof_factor = static_cast<double>(k_users) * m_user;
  const double q = beta - k_users;
  const double beta_k = q + 1.0;
  const bool full_load = q <= 1.0e-9;

  if (full_load) {
    out.dim_excess = 0.0;
    switch (kind) {
      case PrecoderKind::kSvdWaterfill:
        out.array_gain = (rho > 0.0) ? svd_rate_fullload(rho, m_user) / m_user : 0.0;
        out.regime = RateRegime::kFullLoad;
        break;
      case PrecoderKind::kRzf:
        out.array_gain = std::log2(1.0 + std::sqrt(1.0 + 4.0 * rho)) - 1.0;
        out.regime = RateRegime::kFullLoad;
        break;
      case PrecoderKind::kZf:
        if (policy == FullLoadPolicy::kZfBound) {
          out.array_gain =
              zf_rate_upper_bound({beta, 1.0, rho, m_user}) / m_user;
          out.regime = RateRegime::kFullLoadBound;
        } else {
          out.array_gain = 0.0;
          out.regime = RateRegime::kFullLoadLimit;
        }
        break;
    }
  } else {
    out.dim_excess = std::log2(1.0 + rho * q);
    switch (kind) {
      case PrecoderKind::kZf:
        out.array_gain = 0.0;
        out.regime = RateRegime::kClosedForm;
        break;
      case PrecoderKind::kRzf: {
        const double d = rho * q + 1.0;
        out.array_gain = std::log2(1.0 + std::sqrt(1.0 + 4.0 * rho / (d * d))) - 1.0;
        out.regime = RateRegime::kClosedForm;
        break;
      }
      case PrecoderKind::kSvdWaterfill:
        if (rho >= svd_regime_min_rho(beta_k)) {
          out.array_gain = beta_k * std::log2(1.0 + 1.0 / q) - kLog2E;
          out.regime = RateRegime::kClosedForm;
        } else {
          const double per_user = svd_rate_mp_waterfill(beta_k, rho, m_user);
          out.array_gain = per_user / m_user - out.dim_excess;
          out.regime = RateRegime::kWaterfillQuadrature;
        }
        break;
    }
  }
  out.total = out.dof_factor * (out.dim_excess + out.array_gain);
  return out;
}

/**
 * Unified asymptotic sum rate for a configuration, optionally overriding the
 * served user count.  Per-user SNR is rho_sum / K (equal split).
 */
inline RateDecomposition unified_sum_rate(const SystemConfig& cfg, PrecoderKind kind,
                                          std::optional<int> k_override = std::nullopt,
                                          FullLoadPolicy policy = FullLoadPolicy::kZfBound) {
  const int k_users = k_override.value_or(cfg.k_users);
  const double beta = cfg.beta();
  if (k_users < 1 || k_users > static_cast<int>(std::floor(beta + 1.0e-9))) {
    throw std::invalid_argument("unified_sum_rate: K=" + std::to_string(k_users) +
                                " out of range [1, floor(beta)=" +
                                std::to_string(static_cast<int>(std::floor(beta + 1.0e-9))) + "]");
  }
  return asymptotic_sum_rate(beta, k_users, cfg.rho_sum() / k_users, cfg.m_user,
                             kind, policy);
}

}  // namespace bdmimo
