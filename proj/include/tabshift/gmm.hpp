#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace tabshift {

// One-dimensional Gaussian mixture. Immutable once fitted.
struct GaussianMixtureModel {
  Eigen::VectorXd weights;  // sum to 1
  Eigen::VectorXd means;
  Eigen::VectorXd stddevs;  // all >= the fit's sigma floor

  int n_components() const { return static_cast<int>(weights.size()); }
  void validate() const;  // throws std::invalid_argument
};

struct EmConfig {
  int m_max = 10;
  double tol = 1e-3;           // stop when the log-likelihood gain drops below tol
  int max_iter = 100;
  double prune_weight = 0.005; // drop components below this weight; 0 keeps m fixed at m_max
};

struct EmFitInfo {
  // Log-likelihood before each EM update of the selected run; non-decreasing
  // up to floating-point slack.
  std::vector<double> log_likelihood_trace;
  int iterations = 0;
  int selected_m = 0;                 // component count before pruning
  std::vector<double> candidate_bic;  // per candidate m = 1..m_max (selection mode only)
};

// EM for a fixed component count, seeded by k-means++ center selection.
// No pruning. Throws on non-finite input; all-identical values yield a
// single degenerate component at the shared value.
GaussianMixtureModel fit_em_fixed(const Eigen::VectorXd& values, int m, double tol, int max_iter,
                                  std::uint64_t seed, EmFitInfo* info = nullptr);

// Mode-estimating fit. With prune_weight > 0 the component count is chosen
// by a BIC scan over m = 1..m_max and low-weight components are then dropped
// (weights renormalized); with prune_weight = 0 the count stays fixed at
// m_max, matching fixed-m operation.
GaussianMixtureModel fit_em(const Eigen::VectorXd& values, const EmConfig& config, std::uint64_t seed,
                            EmFitInfo* info = nullptr);

// Posterior component probabilities for a single value, computed in
// log-space. Non-negative, sums to 1.
Eigen::VectorXd responsibilities(const GaussianMixtureModel& g, double c);

// Sum over values of log(sum_k pi_k N(v; mu_k, sigma_k)); empty input gives 0.
double log_likelihood(const GaussianMixtureModel& g, const Eigen::VectorXd& values);

}  // namespace tabshift
