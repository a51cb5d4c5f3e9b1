#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bdmimo/bd.hpp"
#include "bdmimo/channel.hpp"
#include "bdmimo/precoders.hpp"
#include "bdmimo/rng.hpp"

using namespace bdmimo;

namespace {

Eigen::MatrixXcd random_complex(int rows, int cols, std::uint64_t seed) {
  ComplexGaussian gauss(seed);
  Eigen::MatrixXcd h(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) h(i, j) = gauss();
  return h;
}

double transmit_power(const InnerPrecoder& pre) {
  return (pre.d_matrix * pre.d_matrix.adjoint()).trace().real();
}

// Independent oracle: enumerate every candidate active-set size over the
// positive modes (sorted strongest first) and keep the largest size whose
// common level still covers its weakest member.
WaterfillSolution waterfill_oracle(const std::vector<double>& eigs, double budget) {
  std::vector<int> order;
  for (int i = 0; i < static_cast<int>(eigs.size()); ++i)
    if (eigs[i] > 0.0) order.push_back(i);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return eigs[a] > eigs[b]; });

  WaterfillSolution sol;
  sol.per_mode_power.assign(eigs.size(), 0.0);
  for (std::size_t s = order.size(); s >= 1; --s) {
    double inv_sum = 0.0;
    for (std::size_t t = 0; t < s; ++t) inv_sum += 1.0 / eigs[order[t]];
    const double level = (budget + inv_sum) / static_cast<double>(s);
    if (level * eigs[order[s - 1]] > 1.0) {
      sol.level = level;
      for (std::size_t t = 0; t < s; ++t) {
        const int i = order[t];
        sol.per_mode_power[i] = level - 1.0 / eigs[i];
        sol.rate_bits += std::log2(level * eigs[i]);
        sol.active_set.push_back(i);
      }
      std::sort(sol.active_set.begin(), sol.active_set.end());
      break;
    }
  }
  return sol;
}

void require_matches_oracle(const std::vector<double>& eigs, double budget) {
  const WaterfillSolution got = waterfill(eigs, budget);
  const WaterfillSolution want = waterfill_oracle(eigs, budget);
  REQUIRE(got.active_set == want.active_set);
  REQUIRE(got.level == Catch::Approx(want.level).epsilon(1e-12));
  REQUIRE(got.rate_bits == Catch::Approx(want.rate_bits).epsilon(1e-12));
  for (std::size_t i = 0; i < eigs.size(); ++i) {
    REQUIRE(got.per_mode_power[i] ==
            Catch::Approx(want.per_mode_power[i]).margin(1e-12));
  }
  double total = 0.0;
  for (double p : got.per_mode_power) total += p;
  REQUIRE(total == Catch::Approx(budget).epsilon(1e-12));
}

}  // namespace

TEST_CASE("waterfill handles single-mode and symmetric spectra exactly") {
  const WaterfillSolution one = waterfill({1.0}, 3.0);
  REQUIRE(one.level == Catch::Approx(4.0).epsilon(1e-15));
  REQUIRE(one.active_set == std::vector<int>{0});
  REQUIRE(one.per_mode_power[0] == Catch::Approx(3.0).epsilon(1e-15));
  REQUIRE(one.rate_bits == Catch::Approx(2.0).epsilon(1e-15));

  const WaterfillSolution two = waterfill({1.0, 1.0}, 2.0);
  REQUIRE(two.level == Catch::Approx(2.0).epsilon(1e-15));
  REQUIRE(two.active_set == std::vector<int>{0, 1});
  REQUIRE(two.per_mode_power[0] == Catch::Approx(1.0).epsilon(1e-15));
  REQUIRE(two.per_mode_power[1] == Catch::Approx(1.0).epsilon(1e-15));
  REQUIRE(two.rate_bits == Catch::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("waterfill drops modes too weak for the water level") {
  // Strong + very weak mode with a small budget: only the strong mode fills.
  const WaterfillSolution sol = waterfill({4.0, 0.01}, 1.0);
  REQUIRE(sol.active_set == std::vector<int>{0});
  REQUIRE(sol.level == Catch::Approx(1.25).epsilon(1e-15));
  REQUIRE(sol.per_mode_power[0] == Catch::Approx(1.0).epsilon(1e-15));
  REQUIRE(sol.per_mode_power[1] == 0.0);
  REQUIRE(sol.rate_bits == Catch::Approx(std::log2(5.0)).epsilon(1e-15));

  // Zero eigenvalues are excluded, not treated as weak modes.
  const WaterfillSolution zero = waterfill({1.0, 0.0}, 3.0);
  REQUIRE(zero.active_set == std::vector<int>{0});
  REQUIRE(zero.per_mode_power[1] == 0.0);
  REQUIRE(zero.level == Catch::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("waterfill agrees with active-set enumeration on random spectra") {
  require_matches_oracle({4.0, 0.01}, 1.0);
  require_matches_oracle({2.0, 1.0, 0.5, 0.1}, 0.3);
  require_matches_oracle({2.0, 1.0, 0.5, 0.1}, 30.0);

  ComplexGaussian gauss(77);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> eigs(5);
    for (double& e : eigs) e = std::norm(gauss());
    const double budget = 0.05 + 10.0 * gauss.positive_uniform();
    require_matches_oracle(eigs, budget);
  }
}

TEST_CASE("waterfill rejects degenerate inputs") {
  REQUIRE_THROWS_AS(waterfill({}, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(waterfill({1.0}, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(waterfill({1.0}, -2.0), std::invalid_argument);
  REQUIRE_THROWS_AS(waterfill({1.0, -0.5}, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(waterfill({0.0, 0.0}, 1.0), DegenerateChannelError);
}

TEST_CASE("svd precoder solves the isotropic channel in closed form") {
  // H_eq = sqrt(2) [I | 0]: both eigenvalues of H H^H / M equal one, so the
  // budget M * rho = 6 splits evenly and each stream carries log2(4) bits.
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2, 4);
  h(0, 0) = std::sqrt(2.0);
  h(1, 1) = std::sqrt(2.0);
  const auto [pre, rate] = svd_precoder(h, 3.0, 1.0);

  REQUIRE(pre.kind == PrecoderKind::kSvdWaterfill);
  REQUIRE(pre.d_matrix.rows() == 4);
  REQUIRE(pre.d_matrix.cols() == 2);
  REQUIRE(rate == Catch::Approx(4.0).epsilon(1e-12));
  REQUIRE(pre.power_used == Catch::Approx(3.0).epsilon(1e-12));
  REQUIRE(transmit_power(pre) == Catch::Approx(3.0).epsilon(1e-8));
}

TEST_CASE("svd precoder reduces to the scalar capacity for one stream") {
  const Eigen::MatrixXcd h = random_complex(1, 4, 5);
  const double p_k = 2.5, noise = 0.5;
  const auto [pre, rate] = svd_precoder(h, p_k, noise);
  const double expect = std::log2(1.0 + (p_k / noise) * h.squaredNorm());
  REQUIRE(rate == Catch::Approx(expect).epsilon(1e-12));
  REQUIRE(transmit_power(pre) == Catch::Approx(p_k).epsilon(1e-8));
}

TEST_CASE("zero forcing inverts the channel with exact power accounting") {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2, 4);
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  const double p_k = 5.0, noise = 1.0;
  const auto [pre, rate] = zf_precoder(h, p_k, noise);

  // trace[(H H^H)^-1] = 2, so both streams see SNR p/2.
  REQUIRE(rate == Catch::Approx(2.0 * std::log2(1.0 + p_k / 2.0)).epsilon(1e-12));
  const double kappa = std::sqrt(p_k / 2.0);
  const Eigen::MatrixXcd effective = h * pre.d_matrix;
  REQUIRE(std::abs(effective(0, 1)) < 1e-10 * kappa);
  REQUIRE(std::abs(effective(1, 0)) < 1e-10 * kappa);
  const Eigen::MatrixXcd target = kappa * Eigen::MatrixXcd::Identity(2, 2);
  REQUIRE((effective - target).norm() <= 1e-9 * target.norm());
  REQUIRE(transmit_power(pre) == Catch::Approx(p_k).epsilon(1e-8));

  // Random wide channel: H D must still be kappa I.
  const Eigen::MatrixXcd hr = random_complex(3, 9, 11);
  const auto [pre_r, rate_r] = zf_precoder(hr, p_k, noise);
  REQUIRE(rate_r > 0.0);
  Eigen::MatrixXcd eff = hr * pre_r.d_matrix;
  const double kap = std::abs(eff(0, 0));
  REQUIRE((eff - kap * Eigen::MatrixXcd::Identity(3, 3)).norm() <= 1e-9 * kap);
}

TEST_CASE("zero forcing mean rate tracks the inverse-trace concentration") {
  // For 2x8 iid entries, trace[(H H^H)^-1] concentrates near 1/3, so the
  // mean rate should sit within a few percent of 2 log2(1 + 3 rho).
  const double rho = 1.0;
  double mean = 0.0;
  const int n_trials = 1000;
  for (int t = 0; t < n_trials; ++t) {
    const Eigen::MatrixXcd h = random_complex(2, 8, 1000 + t);
    mean += zf_precoder(h, rho, 1.0).second;
  }
  mean /= n_trials;
  const double expect = 2.0 * std::log2(1.0 + 3.0 * rho);
  REQUIRE(std::abs(mean - expect) / expect < 0.05);
}

TEST_CASE("regularized zero forcing matches scalar capacity exactly") {
  Eigen::MatrixXcd h(1, 1);
  h(0, 0) = std::complex<double>(0.8, -0.6);
  for (double rho : {0.3, 1.0, 7.5}) {
    const auto [pre, rate] = rzf_precoder(h, rho, 1.0);
    REQUIRE(rate == Catch::Approx(std::log2(1.0 + rho * std::norm(h(0, 0))))
                        .epsilon(1e-12));
    REQUIRE(transmit_power(pre) == Catch::Approx(rho).epsilon(1e-8));
  }
}

TEST_CASE("regularized zero forcing brackets zero forcing") {
  const Eigen::MatrixXcd h = random_complex(2, 8, 21);

  // Vanishing SNR: the ridge dominates and the rate collapses.
  REQUIRE(rzf_precoder(h, 1e-12, 1.0).second < 1e-9);

  // High SNR: the ridge vanishes and the two precoders coincide.
  const double zf_hi = zf_precoder(h, 1e6, 1.0).second;
  const double rzf_hi = rzf_precoder(h, 1e6, 1.0).second;
  REQUIRE(std::abs(rzf_hi - zf_hi) / zf_hi < 0.01);

  // At every SNR the regularized solution can only help on average.
  double mean_gap = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const Eigen::MatrixXcd ht = random_complex(2, 8, 5000 + t);
    mean_gap += rzf_precoder(ht, 1.0, 1.0).second - zf_precoder(ht, 1.0, 1.0).second;
  }
  REQUIRE(mean_gap / 1000.0 > 0.0);
}

TEST_CASE("per-realization rates are monotone in SNR for every precoder") {
  const Eigen::MatrixXcd h = random_complex(2, 6, 33);
  const std::vector<double> rhos = {0.1, 1.0, 10.0, 100.0, 1e4, 1e6};
  for (PrecoderKind kind :
       {PrecoderKind::kSvdWaterfill, PrecoderKind::kZf, PrecoderKind::kRzf}) {
    double prev = -1.0;
    for (double rho : rhos) {
      const double rate = apply_precoder(kind, h, rho, 1.0).second;
      REQUIRE(rate >= prev - 1e-9);
      prev = rate;
    }
  }
}

TEST_CASE("every precoder meets the per-user power budget") {
  const Eigen::MatrixXcd h = random_complex(3, 7, 44);
  const double p_k = 4.0, noise = 0.5;
  for (PrecoderKind kind :
       {PrecoderKind::kSvdWaterfill, PrecoderKind::kZf, PrecoderKind::kRzf}) {
    const auto [pre, rate] = apply_precoder(kind, h, p_k, noise);
    REQUIRE(pre.kind == kind);
    REQUIRE(rate > 0.0);
    REQUIRE(transmit_power(pre) == Catch::Approx(p_k).epsilon(1e-8));
    REQUIRE(pre.power_used == Catch::Approx(p_k).epsilon(1e-8));
  }
}

TEST_CASE("water-filled beamforming dominates zero forcing realization-wise") {
  const SystemConfig cfg(12, 2, 3, 1.0, 6.0, 99);
  for (int t = 0; t < 200; ++t) {
    const ChannelRealization real = draw_channels(cfg, t);
    for (int k = 0; k < cfg.k_users; ++k) {
      const BdDecomposition bd = bd_decompose(real, k, cfg.l_dim());
      const double r_svd =
          apply_precoder(PrecoderKind::kSvdWaterfill, bd.h_eq, cfg.p_user(),
                         cfg.noise_var)
              .second;
      const double r_zf =
          apply_precoder(PrecoderKind::kZf, bd.h_eq, cfg.p_user(), cfg.noise_var)
              .second;
      REQUIRE(r_svd >= r_zf - 1e-9);
    }
  }
}

TEST_CASE("precoders reject malformed equivalent channels") {
  const Eigen::MatrixXcd tall = random_complex(4, 2, 55);
  REQUIRE_THROWS_AS(svd_precoder(tall, 1.0, 1.0), DimensionalityError);
  REQUIRE_THROWS_AS(zf_precoder(tall, 1.0, 1.0), DimensionalityError);

  // Duplicate rows make the Gram matrix singular: zero forcing must refuse.
  Eigen::MatrixXcd defective = random_complex(2, 6, 66);
  defective.row(1) = defective.row(0);
  REQUIRE_THROWS_AS(zf_precoder(defective, 1.0, 1.0), SingularChannelError);

  REQUIRE_THROWS_AS(rzf_precoder(random_complex(2, 6, 67), 0.0, 1.0),
                    std::invalid_argument);
}
