/**
 * @file channel.hpp
 * @brief I.i.d. Rayleigh channel ensembles and interferer stacking.
 */
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdmimo/rng.hpp"
#include "bdmimo/types.hpp"

namespace bdmimo {

/// One Monte Carlo draw: K user channels, each m_user x n_bs.
struct ChannelRealization {
  std::vector<Eigen::MatrixXcd> per_user;
  std::uint64_t seed_used = 0;

  int k_users() const { return static_cast<int>(per_user.size()); }
};

/**
 * Draws the K per-user channel matrices for one trial.
 *
 * Entries are i.i.d. CN(0,1).  The draw is a pure function of
 * (cfg.seed, trial_index): matrices are filled user by user, row-major,
 * from a generator seeded with derive_stream_seed(cfg.seed, trial_index).
 */
inline ChannelRealization draw_channels(const SystemConfig& cfg,
                                        std::uint64_t trial_index) {
  ChannelRealization out;
  out.seed_used = derive_stream_seed(cfg.seed, trial_index);
  ComplexGaussian gauss(out.seed_used);
  out.per_user.reserve(cfg.k_users);
  for (int k = 0; k < cfg.k_users; ++k) {
    Eigen::MatrixXcd h(cfg.m_user, cfg.n_bs);
    for (int i = 0; i < cfg.m_user; ++i) {
      for (int j = 0; j < cfg.n_bs; ++j) {
        h(i, j) = gauss();
      }
    }
    out.per_user.push_back(std::move(h));
  }
  return out;
}

/**
 * Row-stack of every channel except user k, in ascending user order.
 * For K = 1 the result has 0 rows and n_bs columns.
 */
inline Eigen::MatrixXcd stack_interferers(const ChannelRealization& real, int k) {
  const int n_users = real.k_users();
  if (k < 0 || k >= n_users) {
    throw std::out_of_range("stack_interferers: user index " + std::to_string(k) +
                            " out of range [0," + std::to_string(n_users) + ")");
  }
  const auto cols = real.per_user.front().cols();
  Eigen::Index rows = 0;
  for (int l = 0; l < n_users; ++l) {
    if (l != k) rows += real.per_user[l].rows();
  }
  Eigen::MatrixXcd stacked(rows, cols);
  Eigen::Index at = 0;
  for (int l = 0; l < n_users; ++l) {
    if (l == k) continue;
    stacked.middleRows(at, real.per_user[l].rows()) = real.per_user[l];
    at += real.per_user[l].rows();
  }
  return stacked;
}

}  // namespace bdmimo
