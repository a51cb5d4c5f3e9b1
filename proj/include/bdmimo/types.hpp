/**
 * @file types.hpp
 * @brief System configuration and error taxonomy shared by all modules.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace bdmimo {

/// Requested dimensions leave no room for the interference null space,
/// or an operand has incompatible shape.
class DimensionalityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A channel matrix that must be full row rank is numerically rank deficient.
class SingularChannelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every eigenmode of the channel is zero; no power allocation exists.
class DegenerateChannelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An asymptotic formula was evaluated outside its validity region.
class RegimeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/**
 * Single-cell downlink dimensions and power budget.
 *
 * N base-station antennas serve K users with M antennas each.  The
 * total transmit power is split equally, P_k = power_total / K, and
 * per-user SNR is rho = P_k / noise_var.
 */
struct SystemConfig {
  int n_bs;             ///< BS antennas (N)
  int m_user;           ///< antennas per user (M)
  int k_users;          ///< served users (K)
  double noise_var;     ///< receiver noise variance
  double power_total;   ///< total transmit power across users
  std::uint64_t seed;   ///< master RNG seed for Monte Carlo trials

  SystemConfig(int n, int m, int k, double noise, double power,
               std::uint64_t seed_value)
      : n_bs(n),
        m_user(m),
        k_users(k),
        noise_var(noise),
        power_total(power),
        seed(seed_value) {
    if (n_bs <= 0 || m_user <= 0 || k_users <= 0) {
      throw DimensionalityError("SystemConfig: n_bs, m_user, k_users must be positive");
    }
    if (!(noise_var > 0.0) || !(power_total > 0.0)) {
      throw std::invalid_argument("SystemConfig: noise_var and power_total must be positive");
    }
    if (n_bs < k_users * m_user) {
      throw DimensionalityError(
          "SystemConfig: dimensionality constraint violated: n_bs=" +
          std::to_string(n_bs) + " < k_users*m_user=" +
          std::to_string(k_users * m_user) +
          " (n_bs - (k_users-1)*m_user = " +
          std::to_string(n_bs - (k_users - 1) * m_user) + " < m_user=" +
          std::to_string(m_user) + ")");
    }
  }

  /// Null-space dimensions left per user: L = N - (K-1)M.  Always >= M.
  int l_dim() const { return n_bs - (k_users - 1) * m_user; }

  double p_user() const { return power_total / k_users; }
  double rho_user() const { return p_user() / noise_var; }
  double rho_sum() const { return power_total / noise_var; }

  /// Normalized transmit dimensions beta = N/M.
  double beta() const { return static_cast<double>(n_bs) / m_user; }

  /// Per-user normalized dimensions after interference nulling.
  double beta_k() const { return beta() - k_users + 1; }
};

}  // namespace bdmimo
