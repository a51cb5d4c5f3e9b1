/**
 * @file bd.hpp
 * @brief Block-diagonalization outer precoder and its statistical probe.
 *
 * B_k spans the right null space of the stacked interferer channels, so the
 * per-user link after precoding is the interference-free equivalent channel
 * H_eq,k = H_k B_k.  Because the null-space basis is semi-unitary and
 * independent of H_k, the entries of H_eq,k are again i.i.d. CN(0,1); the
 * gaussianity probe measures exactly that invariance.
 */
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bdmimo/channel.hpp"
#include "bdmimo/rng.hpp"
#include "bdmimo/types.hpp"

namespace bdmimo {

/// Outer precoder B_k (N x L_k, orthonormal columns) and the equivalent
/// channel H_eq,k = H_k B_k (M x L_k).
struct BdDecomposition {
  Eigen::MatrixXcd b_outer;
  Eigen::MatrixXcd h_eq;
  int l_dim = 0;
};

/**
 * Orthonormal basis of (a subspace of) the right null space of `stacked`.
 *
 * Computed by full SVD; the trailing n_cols_needed right singular vectors
 * are returned in SVD order.  Rank is counted against the threshold
 * max(rows, cols) * eps * sigma_max.  An empty stack (0 rows) has the whole
 * space as null space; the leading identity columns are returned.
 */
inline Eigen::MatrixXcd null_space_basis(const Eigen::MatrixXcd& stacked,
                                         int n_cols_needed) {
  const int n = static_cast<int>(stacked.cols());
  if (n_cols_needed <= 0 || n_cols_needed > n) {
    throw DimensionalityError("null_space_basis: need " + std::to_string(n_cols_needed) +
                              " columns from a space of dimension " + std::to_string(n));
  }
  if (stacked.rows() == 0) {
    return Eigen::MatrixXcd::Identity(n, n_cols_needed);
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(stacked, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol = std::max(stacked.rows(), stacked.cols()) *
                     std::numeric_limits<double>::epsilon() * sv(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol) ++rank;
  }
  if (n_cols_needed > n - rank) {
    throw DimensionalityError(
        "null_space_basis: insufficient null dimensions: requested " +
        std::to_string(n_cols_needed) + ", available " + std::to_string(n - rank));
  }
  return svd.matrixV().rightCols(n_cols_needed);
}

/**
 * Block-diagonalization for user k: B_k annihilates every other user's
 * channel and H_eq,k = H_k B_k has shape M x l_dim.
 */
inline BdDecomposition bd_decompose(const ChannelRealization& real, int k, int l_dim) {
  const int m = static_cast<int>(real.per_user.at(k).rows());
  const int n = static_cast<int>(real.per_user.at(k).cols());
  const int max_l = n - (real.k_users() - 1) * m;
  if (l_dim < m || l_dim > max_l) {
    throw DimensionalityError(
        "bd_decompose: l_dim=" + std::to_string(l_dim) +
        " outside [m_user=" + std::to_string(m) +
        ", n_bs-(k_users-1)*m_user=" + std::to_string(max_l) + "]");
  }
  BdDecomposition out;
  out.l_dim = l_dim;
  out.b_outer = null_space_basis(stack_interferers(real, k), l_dim);
  out.h_eq = real.per_user[k] * out.b_outer;
  return out;
}

/// Empirical entry statistics of H = A * B for Gaussian A and independent
/// semi-unitary B.
struct GaussianityProbe {
  double mean_re = 0.0;        ///< mean of real parts
  double mean_im = 0.0;        ///< mean of imaginary parts
  double var_re = 0.0;         ///< variance of real parts (expect 1/2)
  double var_im = 0.0;         ///< variance of imaginary parts (expect 1/2)
  double var_entry = 0.0;      ///< E|h|^2 - |Eh|^2 (expect 1)
  double fourth_moment = 0.0;  ///< E|h|^4 (expect 2 for CN(0,1))
  double ks_statistic = 0.0;   ///< sup-distance of sqrt(2)-scaled components vs N(0,1)
  long n_entries = 0;
};

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

/// One-sample Kolmogorov-Smirnov statistic against N(0,1).  Sorts a copy.
inline double ks_statistic_vs_normal(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = normal_cdf(samples[i]);
    d = std::max(d, std::max(cdf - static_cast<double>(i) / n,
                             static_cast<double>(i + 1) / n - cdf));
  }
  return d;
}

/// Independent Haar-like semi-unitary N x L matrix (thin Q of a Gaussian draw).
inline Eigen::MatrixXcd random_semi_unitary(int n, int l, ComplexGaussian& gauss) {
  Eigen::MatrixXcd g(n, l);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < l; ++j) g(i, j) = gauss();
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  return qr.householderQ() * Eigen::MatrixXcd::Identity(n, l);
}

/**
 * Draws n_samples independent pairs (A: Gaussian m x n, B: semi-unitary
 * n x l), forms H = A*B, and accumulates entry moments plus a KS distance
 * of the scaled components against the standard normal.
 */
inline GaussianityProbe gaussianity_probe(long n_samples, int m, int n, int l,
                                          std::uint64_t seed = 0x5eedULL) {
  if (l > n) {
    throw DimensionalityError("gaussianity_probe: l=" + std::to_string(l) +
                              " exceeds n=" + std::to_string(n));
  }
  GaussianityProbe probe;
  std::vector<double> components;
  components.reserve(static_cast<std::size_t>(n_samples) * m * l * 2);
  double sum_re = 0.0, sum_im = 0.0, sum_re2 = 0.0, sum_im2 = 0.0;
  double sum_abs2 = 0.0, sum_abs4 = 0.0;
  for (long s = 0; s < n_samples; ++s) {
    ComplexGaussian ga(derive_stream_seed(seed, 2 * static_cast<std::uint64_t>(s)));
    ComplexGaussian gb(derive_stream_seed(seed, 2 * static_cast<std::uint64_t>(s) + 1));
    Eigen::MatrixXcd a(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = ga();
    const Eigen::MatrixXcd h = a * random_semi_unitary(n, l, gb);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < l; ++j) {
        const std::complex<double> v = h(i, j);
        sum_re += v.real();
        sum_im += v.imag();
        sum_re2 += v.real() * v.real();
        sum_im2 += v.imag() * v.imag();
        const double a2 = std::norm(v);
        sum_abs2 += a2;
        sum_abs4 += a2 * a2;
        components.push_back(v.real() * std::numbers::sqrt2);
        components.push_back(v.imag() * std::numbers::sqrt2);
      }
    }
  }
  const double cnt = static_cast<double>(n_samples) * m * l;
  probe.n_entries = static_cast<long>(cnt);
  probe.mean_re = sum_re / cnt;
  probe.mean_im = sum_im / cnt;
  probe.var_re = sum_re2 / cnt - probe.mean_re * probe.mean_re;
  probe.var_im = sum_im2 / cnt - probe.mean_im * probe.mean_im;
  probe.var_entry = sum_abs2 / cnt -
                    (probe.mean_re * probe.mean_re + probe.mean_im * probe.mean_im);
  probe.fourth_moment = sum_abs4 / cnt;
  probe.ks_statistic = ks_statistic_vs_normal(std::move(components));
  return probe;
}

}  // namespace bdmimo
