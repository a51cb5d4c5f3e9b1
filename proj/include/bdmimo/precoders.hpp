/**
 * @file precoders.hpp
 * @brief Inner precoders on the equivalent channel: water-filled SVD,
 *        zero-forcing, and regularized zero-forcing.
 *
 * All rates are exact per-realization values in bits.  Power accounting is
 * per realization: trace(D D^H) equals the per-user budget P_k whenever at
 * least one stream is active.
 */
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "bdmimo/types.hpp"

namespace bdmimo {

enum class PrecoderKind { kSvdWaterfill, kZf, kRzf };

inline const char* precoder_name(PrecoderKind kind) {
  switch (kind) {
    case PrecoderKind::kSvdWaterfill: return "svd";
    case PrecoderKind::kZf: return "zf";
    case PrecoderKind::kRzf: return "rzf";
  }
  return "?";
}

struct InnerPrecoder {
  PrecoderKind kind;
  Eigen::MatrixXcd d_matrix;  ///< L_k x M
  double power_used = 0.0;
};

/// Water level and per-mode allocation.  `level` is the normalized water
/// level nu_bar = M * nu / sigma^2; mode powers are (nu_bar - 1/lambda_i)+
/// in the same normalized units and sum to the requested budget.
struct WaterfillSolution {
  double level = 0.0;
  std::vector<int> active_set;
  std::vector<double> per_mode_power;
  double rate_bits = 0.0;
};

/**
 * Water-filling over eigenmodes `eigs` with total (normalized) budget:
 * finds the unique level with sum_i (level - 1/eigs[i])+ = budget.
 * Zero modes are excluded; an all-zero spectrum is degenerate.
 * Per-mode rates are log2(level * eigs[i]) on the active set.
 */
inline WaterfillSolution waterfill(const std::vector<double>& eigs, double budget) {
  if (eigs.empty()) throw std::invalid_argument("waterfill: empty eigenvalue list");
  if (!(budget > 0.0)) throw std::invalid_argument("waterfill: budget must be positive");
  std::vector<int> order;
  for (int i = 0; i < static_cast<int>(eigs.size()); ++i) {
    if (eigs[i] < 0.0) throw std::invalid_argument("waterfill: negative eigenvalue");
    if (eigs[i] > 0.0) order.push_back(i);
  }
  if (order.empty()) throw DegenerateChannelError("waterfill: all eigenmodes are zero");
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return eigs[a] > eigs[b]; });

  // Largest active set whose water level still covers its weakest mode.
  double inv_sum = 0.0;
  double level = 0.0;
  std::size_t active = 0;
  for (std::size_t t = 0; t < order.size(); ++t) {
    inv_sum += 1.0 / eigs[order[t]];
    const double candidate = (budget + inv_sum) / static_cast<double>(t + 1);
    if (candidate * eigs[order[t]] > 1.0) {
      level = candidate;
      active = t + 1;
    }
  }

  WaterfillSolution sol;
  sol.level = level;
  sol.per_mode_power.assign(eigs.size(), 0.0);
  for (std::size_t t = 0; t < active; ++t) {
    const int i = order[t];
    sol.per_mode_power[i] = level - 1.0 / eigs[i];
    sol.rate_bits += std::log2(level * eigs[i]);
  }
  for (int i = 0; i < static_cast<int>(eigs.size()); ++i) {
    if (sol.per_mode_power[i] > 0.0) sol.active_set.push_back(i);
  }
  return sol;
}

namespace detail {

inline void require_rows_le_cols(const Eigen::MatrixXcd& h_eq, const char* who) {
  if (h_eq.rows() > h_eq.cols()) {
    throw DimensionalityError(std::string(who) + ": equivalent channel is " +
                              std::to_string(h_eq.rows()) + "x" +
                              std::to_string(h_eq.cols()) +
                              "; needs at least as many columns as rows");
  }
}

}  // namespace detail

/**
 * Eigenbeamforming with water-filled power loading.
 *
 * D = V * diag(p)^(1/2) where V holds the leading right singular vectors of
 * H_eq and p is the water-filling allocation over the eigenvalues lambda_i
 * of H_eq H_eq^H / M with normalized budget M * P_k / noise_var.  The rate
 * is sum_i [log2(level * lambda_i)]+, the capacity of the equivalent channel
 * under the per-user power constraint.
 */
inline std::pair<InnerPrecoder, double> svd_precoder(const Eigen::MatrixXcd& h_eq,
                                                     double p_k, double noise_var) {
  detail::require_rows_le_cols(h_eq, "svd_precoder");
  const int m = static_cast<int>(h_eq.rows());
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(h_eq, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  std::vector<double> eigs(m);
  for (int i = 0; i < m; ++i) eigs[i] = sv(i) * sv(i) / m;

  const double rho = p_k / noise_var;
  WaterfillSolution wf = waterfill(eigs, m * rho);  // throws if degenerate

  Eigen::VectorXd mode_power(m);
  double used = 0.0;
  for (int i = 0; i < m; ++i) {
    mode_power(i) = (noise_var / m) * wf.per_mode_power[i];
    used += mode_power(i);
  }
  InnerPrecoder pre{PrecoderKind::kSvdWaterfill,
                    svd.matrixV() * mode_power.cwiseSqrt().asDiagonal(), used};
  return {std::move(pre), wf.rate_bits};
}

/**
 * Zero-forcing: D = kappa * pinv(H_eq) with kappa chosen so the realized
 * transmit power is exactly P_k.  All M streams see the common SNR
 * kappa^2 / noise_var, so the rate is
 * M * log2(1 + rho / trace[(H_eq H_eq^H)^-1]).
 */
inline std::pair<InnerPrecoder, double> zf_precoder(const Eigen::MatrixXcd& h_eq,
                                                    double p_k, double noise_var) {
  detail::require_rows_le_cols(h_eq, "zf_precoder");
  const int m = static_cast<int>(h_eq.rows());
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(h_eq, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double tol = std::max(h_eq.rows(), h_eq.cols()) *
                     std::numeric_limits<double>::epsilon() * sv(0);
  if (!(sv(m - 1) > tol)) {
    throw SingularChannelError("zf_precoder: equivalent channel is rank deficient");
  }
  double trace_inv = 0.0;  // trace[(H_eq H_eq^H)^-1] = sum sigma_i^-2
  for (int i = 0; i < m; ++i) trace_inv += 1.0 / (sv(i) * sv(i));

  const double kappa = std::sqrt(p_k / trace_inv);
  Eigen::MatrixXcd pinv =
      svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().adjoint();
  const double rate = m * std::log2(1.0 + (p_k / noise_var) / trace_inv);
  InnerPrecoder pre{PrecoderKind::kZf, kappa * pinv, p_k};
  return {std::move(pre), rate};
}

/**
 * Regularized zero-forcing: D = kappa * H_eq^H (H_eq H_eq^H + M/rho I)^-1,
 * algebraically identical to the ridge-regularized Gram form.  Streams
 * interfere, so the rate sums log2(1 + SINR_i) with
 * SINR_i = |T_ii|^2 / (sum_{j != i} |T_ij|^2 + noise_var / kappa^2),
 * T = H_eq D / kappa.
 */
inline std::pair<InnerPrecoder, double> rzf_precoder(const Eigen::MatrixXcd& h_eq,
                                                     double p_k, double noise_var) {
  const int m = static_cast<int>(h_eq.rows());
  const double rho = p_k / noise_var;
  if (!(rho > 0.0)) throw std::invalid_argument("rzf_precoder: rho must be positive");
  const double c = m / rho;
  const Eigen::MatrixXcd gram =
      h_eq * h_eq.adjoint() + c * Eigen::MatrixXcd::Identity(m, m);
  const Eigen::MatrixXcd gram_inv =
      gram.llt().solve(Eigen::MatrixXcd::Identity(m, m));
  const Eigen::MatrixXcd t = Eigen::MatrixXcd::Identity(m, m) - c * gram_inv;
  const Eigen::MatrixXcd d0 = h_eq.adjoint() * gram_inv;

  // trace(D0 D0^H) = trace(G^-1) - c * trace(G^-2); G^-1 is Hermitian.
  const double trace_d0 = gram_inv.trace().real() - c * gram_inv.squaredNorm();
  const double kappa2 = p_k / trace_d0;

  double rate = 0.0;
  for (int i = 0; i < m; ++i) {
    const double signal = std::norm(t(i, i));
    const double interference = t.row(i).squaredNorm() - signal;
    rate += std::log2(1.0 + signal / (interference + noise_var / kappa2));
  }
  InnerPrecoder pre{PrecoderKind::kRzf, std::sqrt(kappa2) * d0, p_k};
  return {std::move(pre), rate};
}

/// Dispatch by kind.
inline std::pair<InnerPrecoder, double> apply_precoder(PrecoderKind kind,
                                                       const Eigen::MatrixXcd& h_eq,
                                                       double p_k, double noise_var) {
  switch (kind) {
    case PrecoderKind::kSvdWaterfill: return svd_precoder(h_eq, p_k, noise_var);
    case PrecoderKind::kZf: return zf_precoder(h_eq, p_k, noise_var);
    case PrecoderKind::kRzf: return rzf_precoder(h_eq, p_k, noise_var);
  }
  throw std::invalid_argument("apply_precoder: unknown precoder kind");
}

}  // namespace bdmimo
