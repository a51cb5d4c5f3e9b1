/**
 * @file experiments.hpp
 * @brief Monte Carlo rate estimation and the sweep drivers built on it.
 *
 * Trial t of a run is a pure function of (config.seed, t), so results are
 * byte-identical for any worker count: workers pull trial indices from a
 * shared counter, write into per-trial slots, and the reduction walks the
 * slots in index order.
 */
#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "bdmimo/asymptotics.hpp"
#include "bdmimo/bd.hpp"
#include "bdmimo/channel.hpp"
#include "bdmimo/precoders.hpp"
#include "bdmimo/types.hpp"

namespace bdmimo {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

/// Monte Carlo estimate of per-user and sum rates.
struct RateReport {
  std::vector<double> per_user_mean;  ///< length K, bits per channel use
  double sum_mean = 0.0;
  double sum_stderr = 0.0;  ///< sample std dev of trial sums / sqrt(n_trials)
  int n_trials = 0;         ///< trials that entered the averages
  int n_discarded = 0;      ///< trials dropped for singular/degenerate channels
};

/**
 * Runs n_trials independent channel draws, block-diagonalizes every user,
 * applies the inner precoder, and averages the achieved rates.
 *
 * n_workers = 0 uses the hardware concurrency.  Trials whose equivalent
 * channel is singular or degenerate are discarded; if more than a 1e-3
 * fraction is discarded the whole run is rejected.
 */
inline RateReport run_monte_carlo(const SystemConfig& cfg, PrecoderKind kind,
                                  int n_trials, int n_workers = 0) {
  if (n_trials < 1) {
    throw std::invalid_argument("run_monte_carlo: n_trials must be positive");
  }
  if (n_workers <= 0) {
    n_workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  n_workers = std::min(n_workers, n_trials);

  const int k = cfg.k_users;
  const int l = cfg.l_dim();
  std::vector<std::vector<double>> trial_rates(n_trials);  // empty slot = discarded
  std::vector<char> trial_valid(n_trials, 0);
  std::atomic<int> next_trial{0};

  auto worker_loop = [&]() {
    for (;;) {
      const int t = next_trial.fetch_add(1, std::memory_order_relaxed);
      if (t >= n_trials) return;
      try {
        const ChannelRealization real =
            draw_channels(cfg, static_cast<std::uint64_t>(t));
        std::vector<double> rates(k);
        for (int u = 0; u < k; ++u) {
          const BdDecomposition bd = bd_decompose(real, u, l);
          rates[u] = apply_precoder(kind, bd.h_eq, cfg.p_user(), cfg.noise_var).second;
        }
        trial_rates[t] = std::move(rates);
        trial_valid[t] = 1;
      } catch (const SingularChannelError&) {
      } catch (const DegenerateChannelError&) {
      }
    }
  };

  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> worker_errors(n_workers);
  pool.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        worker_loop();
      } catch (...) {
        worker_errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& err : worker_errors) {
    if (err) std::rethrow_exception(err);
  }

  RateReport report;
  report.per_user_mean.assign(k, 0.0);
  std::vector<double> sums;
  sums.reserve(n_trials);
  for (int t = 0; t < n_trials; ++t) {
    if (!trial_valid[t]) {
      ++report.n_discarded;
      continue;
    }
    double s = 0.0;
    for (int u = 0; u < k; ++u) {
      report.per_user_mean[u] += trial_rates[t][u];
      s += trial_rates[t][u];
    }
    sums.push_back(s);
  }
  if (report.n_discarded > 1.0e-3 * n_trials) {
    throw DegenerateChannelError(
        "run_monte_carlo: " + std::to_string(report.n_discarded) + " of " +
        std::to_string(n_trials) + " trials discarded; exceeds fraction 1e-3");
  }
  report.n_trials = static_cast<int>(sums.size());
  for (double& v : report.per_user_mean) v /= report.n_trials;
  double mean = 0.0;
  for (double s : sums) mean += s;
  mean /= report.n_trials;
  report.sum_mean = mean;
  if (report.n_trials > 1) {
    double ss = 0.0;
    for (double s : sums) ss += (s - mean) * (s - mean);
    report.sum_stderr = std::sqrt(ss / (report.n_trials - 1) / report.n_trials);
  }
  return report;
}

/// Independent variable of a sweep.
enum class SweepAxis { kUsers, kSnr, kAntennas };

inline const char* axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kUsers: return "users";
    case SweepAxis::kSnr: return "snr";
    case SweepAxis::kAntennas: return "antennas";
  }
  return "?";
}

/// One evaluated operating point; simulation and asymptote are optional so
/// the same record serves analytic-only and simulation-only sweeps.
struct SweepPoint {
  SweepAxis axis = SweepAxis::kUsers;
  double axis_value = 0.0;
  int n_bs = 0;
  int m_user = 0;
  int k_users = 0;
  double rho_sum_db = 0.0;
  PrecoderKind kind = PrecoderKind::kZf;
  std::optional<RateReport> sim;
  std::optional<RateDecomposition> asym;
  std::optional<double> relative_gap;  ///< |sim - asym| / sim when both exist
};

struct SweepResult {
  std::vector<SweepPoint> points;
};

/// Differences v[i+1] - v[i].
inline std::vector<double> consecutive_differences(const std::vector<double>& v) {
  std::vector<double> d;
  if (v.size() < 2) return d;
  d.reserve(v.size() - 1);
  for (std::size_t i = 0; i + 1 < v.size(); ++i) d.push_back(v[i + 1] - v[i]);
  return d;
}

namespace detail {

inline SweepPoint make_point(SweepAxis axis, double value, const SystemConfig& cfg,
                             PrecoderKind kind) {
  SweepPoint p;
  p.axis = axis;
  p.axis_value = value;
  p.n_bs = cfg.n_bs;
  p.m_user = cfg.m_user;
  p.k_users = cfg.k_users;
  p.rho_sum_db = linear_to_db(cfg.rho_sum());
  p.kind = kind;
  return p;
}

}  // namespace detail

/// Result of the served-user-count search.
struct OptimalKResult {
  int k_star = 0;          ///< smallest maximizer of the asymptotic sum rate
  double best_sum_rate = 0.0;
  SweepResult curve;       ///< one analytic point per candidate K
};

/**
 * Scans K = 1..floor(beta) with the total SNR budget rho_sum fixed (per-user
 * SNR rho_sum / K) and returns the sum-rate-maximizing user count.  Ties go
 * to the smaller K.  Fully loaded ZF is scored by its limit value zero, the
 * plain closed form's own value at K = beta; the bound policy would instead
 * keep that candidate competitive at any SNR (it exceeds the K = beta - 1
 * rate by a third-order term even as rho_sum -> 0).
 */
inline OptimalKResult optimal_k(const SystemConfig& base, PrecoderKind kind,
                                double rho_sum,
                                FullLoadPolicy policy = FullLoadPolicy::kZfLimit) {
  if (!(rho_sum > 0.0)) throw std::invalid_argument("optimal_k: rho_sum must be positive");
  const int k_max = static_cast<int>(std::floor(base.beta() + 1.0e-9));
  OptimalKResult out;
  out.best_sum_rate = -1.0;
  for (int k = 1; k <= k_max; ++k) {
    const SystemConfig cfg(base.n_bs, base.m_user, k, base.noise_var,
                           rho_sum * base.noise_var, base.seed);
    SweepPoint p = detail::make_point(SweepAxis::kUsers, k, cfg, kind);
    p.asym = unified_sum_rate(cfg, kind, std::nullopt, policy);
    if (p.asym->total > out.best_sum_rate) {
      out.best_sum_rate = p.asym->total;
      out.k_star = k;
    }
    out.curve.points.push_back(std::move(p));
  }
  return out;
}

/// Same search at the SNR budget the configuration itself implies.
inline OptimalKResult optimal_k(const SystemConfig& base, PrecoderKind kind,
                                FullLoadPolicy policy = FullLoadPolicy::kZfLimit) {
  return optimal_k(base, kind, base.rho_sum(), policy);
}

/// Result of growing the array one antenna at a time.
struct AntennaSweepResult {
  SweepResult curve;                ///< points at N, N+1, ..., N+n_extra
  std::vector<double> sum_rates;    ///< asymptotic sum rate at each size
  std::vector<double> increments;   ///< rate(N+j+1) - rate(N+j), j = 0..n_extra-1
};

/**
 * Evaluates the asymptotic sum rate at array sizes N+j, j = 0..n_extra, with
 * everything else fixed and returns the per-antenna increments; these
 * telescope back to rate(N+n_extra) - rate(N).  Fully loaded ZF (possible
 * only at the first point) is scored by its limit value zero, so the first
 * increment is the rate bought by leaving full load.
 */
inline AntennaSweepResult antenna_increment_sweep(
    const SystemConfig& base, PrecoderKind kind, int n_extra,
    FullLoadPolicy policy = FullLoadPolicy::kZfLimit) {
  if (n_extra < 1) {
    throw std::invalid_argument("antenna_increment_sweep: n_extra must be >= 1");
  }
  AntennaSweepResult out;
  for (int j = 0; j <= n_extra; ++j) {
    const SystemConfig cfg(base.n_bs + j, base.m_user, base.k_users,
                           base.noise_var, base.power_total, base.seed);
    SweepPoint p = detail::make_point(SweepAxis::kAntennas, cfg.n_bs, cfg, kind);
    p.asym = unified_sum_rate(cfg, kind, std::nullopt, policy);
    out.sum_rates.push_back(p.asym->total);
    out.curve.points.push_back(std::move(p));
  }
  out.increments = consecutive_differences(out.sum_rates);
  return out;
}

/**
 * Simulated and asymptotic sum rates side by side over a grid of operating
 * points, with the relative gap |sim - asym| / sim per point.  Returns one
 * sweep per precoder kind, points in grid order.
 */
inline std::vector<SweepResult> figure3_harness(const std::vector<SystemConfig>& grid,
                                                const std::vector<PrecoderKind>& kinds,
                                                int n_trials, int n_workers = 0) {
  std::vector<SweepResult> out;
  out.reserve(kinds.size());
  for (PrecoderKind kind : kinds) {
    SweepResult sweep;
    for (const SystemConfig& cfg : grid) {
      SweepPoint p = detail::make_point(SweepAxis::kUsers, cfg.k_users, cfg, kind);
      p.sim = run_monte_carlo(cfg, kind, n_trials, n_workers);
      p.asym = unified_sum_rate(cfg, kind);
      if (p.sim->sum_mean != 0.0) {
        p.relative_gap = std::abs(p.sim->sum_mean - p.asym->total) / p.sim->sum_mean;
      }
      sweep.points.push_back(std::move(p));
    }
    out.push_back(std::move(sweep));
  }
  return out;
}

}  // namespace bdmimo
