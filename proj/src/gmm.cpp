#include "tabshift/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tabshift/rng.hpp"

namespace tabshift {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double sigma_floor_for(const Eigen::VectorXd& values) {
  const double range = values.maxCoeff() - values.minCoeff();
  if (range > 0.0) return 1e-4 * range;
  return 1e-4 * std::max(1.0, std::abs(values[0]));
}

// log N(v; mu, sigma)
inline double log_normal_pdf(double v, double mu, double sigma) {
  const double z = (v - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.5 * kLog2Pi;
}

// Unique values with multiplicities, for k-means++ seeding.
void unique_values(const Eigen::VectorXd& values, std::vector<double>& uniq, std::vector<long>& count) {
  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end());
  uniq.clear();
  count.clear();
  for (double v : sorted) {
    if (uniq.empty() || v != uniq.back()) {
      uniq.push_back(v);
      count.push_back(1);
    } else {
      ++count.back();
    }
  }
}

// k-means++ center selection over the distinct values, weighted by
// multiplicity. Returns m distinct centers (requires m <= #distinct).
std::vector<double> kmeanspp_centers(const std::vector<double>& uniq, const std::vector<long>& count,
                                     int m, std::mt19937_64& rng) {
  const std::size_t u = uniq.size();
  std::vector<double> centers;
  centers.reserve(static_cast<std::size_t>(m));
  std::vector<double> weight(u);
  for (std::size_t j = 0; j < u; ++j) weight[j] = static_cast<double>(count[j]);
  std::discrete_distribution<std::size_t> first(weight.begin(), weight.end());
  std::size_t c0 = first(rng);
  centers.push_back(uniq[c0]);
  std::vector<double> d2(u);
  for (std::size_t j = 0; j < u; ++j) {
    const double d = uniq[j] - centers[0];
    d2[j] = d * d;
  }
  while (static_cast<int>(centers.size()) < m) {
    std::vector<double> probs(u);
    double total = 0.0;
    for (std::size_t j = 0; j < u; ++j) {
      probs[j] = static_cast<double>(count[j]) * d2[j];
      total += probs[j];
    }
    std::size_t next;
    if (total <= 0.0) {
      // all remaining mass sits on already-chosen points; take the first unchosen
      next = u;
      for (std::size_t j = 0; j < u; ++j) {
        if (d2[j] > 0.0) { next = j; break; }
      }
      if (next == u) break;
    } else {
      std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
      next = pick(rng);
    }
    centers.push_back(uniq[next]);
    for (std::size_t j = 0; j < u; ++j) {
      const double d = uniq[j] - centers.back();
      d2[j] = std::min(d2[j], d * d);
    }
  }
  std::sort(centers.begin(), centers.end());
  return centers;
}

}  // namespace

void GaussianMixtureModel::validate() const {
  const int m = n_components();
  if (m < 1) throw std::invalid_argument("gmm: needs at least one component");
  if (means.size() != m || stddevs.size() != m) throw std::invalid_argument("gmm: ragged parameter vectors");
  if (std::abs(weights.sum() - 1.0) > 1e-9) throw std::invalid_argument("gmm: weights do not sum to 1");
  if ((weights.array() < 0.0).any()) throw std::invalid_argument("gmm: negative weight");
  if ((stddevs.array() <= 0.0).any()) throw std::invalid_argument("gmm: non-positive stddev");
  if (!weights.allFinite() || !means.allFinite() || !stddevs.allFinite()) {
    throw std::invalid_argument("gmm: non-finite parameter");
  }
}

GaussianMixtureModel fit_em_fixed(const Eigen::VectorXd& values, int m, double tol, int max_iter,
                                  std::uint64_t seed, EmFitInfo* info) {
  const long n = values.size();
  if (n < 1) throw std::invalid_argument("fit_em: empty input");
  if (!values.allFinite()) throw std::invalid_argument("fit_em: non-finite input value");
  if (m < 1) throw std::invalid_argument("fit_em: m must be >= 1");
  if (max_iter < 1) throw std::invalid_argument("fit_em: max_iter must be >= 1");

  const double sigma_floor = sigma_floor_for(values);

  std::vector<double> uniq;
  std::vector<long> count;
  unique_values(values, uniq, count);
  if (uniq.size() == 1) {
    GaussianMixtureModel g;
    g.weights = Eigen::VectorXd::Ones(1);
    g.means = Eigen::VectorXd::Constant(1, uniq[0]);
    g.stddevs = Eigen::VectorXd::Constant(1, sigma_floor);
    if (info) {
      info->log_likelihood_trace.clear();
      info->iterations = 0;
      info->selected_m = 1;
    }
    return g;
  }
  m = std::min<int>(m, static_cast<int>(uniq.size()));

  auto rng = make_rng(seed, "kmeans++");
  std::vector<double> centers = kmeanspp_centers(uniq, count, m, rng);
  m = static_cast<int>(centers.size());

  GaussianMixtureModel g;
  g.weights = Eigen::VectorXd::Constant(m, 1.0 / m);
  g.means = Eigen::Map<Eigen::VectorXd>(centers.data(), m);
  const double mean0 = values.mean();
  const double var0 = (values.array() - mean0).square().sum() / static_cast<double>(n);
  g.stddevs = Eigen::VectorXd::Constant(m, std::max(std::sqrt(var0), sigma_floor));

  if (info) {
    info->log_likelihood_trace.clear();
    info->selected_m = m;
  }

  Eigen::MatrixXd resp(n, m);  // responsibilities
  double prev_ll = -std::numeric_limits<double>::infinity();
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    // E-step in log-space; the per-row logsumexp is the row's log-likelihood
    double ll = 0.0;
    for (long i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < m; ++k) {
        const double lw = std::log(g.weights[k]) + log_normal_pdf(values[i], g.means[k], g.stddevs[k]);
        resp(i, k) = lw;
        mx = std::max(mx, lw);
      }
      double s = 0.0;
      for (int k = 0; k < m; ++k) s += std::exp(resp(i, k) - mx);
      const double lse = mx + std::log(s);
      ll += lse;
      for (int k = 0; k < m; ++k) resp(i, k) = std::exp(resp(i, k) - lse);
    }
    if (info) info->log_likelihood_trace.push_back(ll);
    if (ll - prev_ll < tol && iter > 0) {
      prev_ll = ll;
      break;
    }
    prev_ll = ll;

    // M-step
    for (int k = 0; k < m; ++k) {
      const double nk = resp.col(k).sum();
      if (nk < 1e-12) {
        g.weights[k] = nk / static_cast<double>(n);
        continue;  // starving component keeps its parameters until pruned
      }
      const double mu = resp.col(k).dot(values) / nk;
      const double var = (resp.col(k).array() * (values.array() - mu).square()).sum() / nk;
      g.weights[k] = nk / static_cast<double>(n);
      g.means[k] = mu;
      g.stddevs[k] = std::max(std::sqrt(var), sigma_floor);
    }
    const double wsum = g.weights.sum();
    g.weights /= wsum;
  }
  if (info) info->iterations = iter;
  g.validate();
  return g;
}

GaussianMixtureModel fit_em(const Eigen::VectorXd& values, const EmConfig& config, std::uint64_t seed,
                            EmFitInfo* info) {
  if (config.m_max < 1) throw std::invalid_argument("fit_em: m_max must be >= 1");
  if (values.size() < 1) throw std::invalid_argument("fit_em: empty input");
  if (!values.allFinite()) throw std::invalid_argument("fit_em: non-finite input value");

  GaussianMixtureModel best;
  EmFitInfo best_info;
  if (config.prune_weight <= 0.0) {
    best = fit_em_fixed(values, config.m_max, config.tol, config.max_iter, seed, info);
    return best;
  }

  // Estimate the number of modes by a BIC scan over candidate counts
  // (3m - 1 free parameters per candidate), then drop low-weight components.
  const long n = values.size();
  double best_bic = std::numeric_limits<double>::infinity();
  std::vector<double> bics;
  for (int m = 1; m <= config.m_max; ++m) {
    EmFitInfo cand_info;
    GaussianMixtureModel cand = fit_em_fixed(values, m, config.tol, config.max_iter, seed, &cand_info);
    const double ll = log_likelihood(cand, values);
    const double params = 3.0 * cand.n_components() - 1.0;
    const double bic = -2.0 * ll + params * std::log(static_cast<double>(n));
    bics.push_back(bic);
    if (bic < best_bic) {
      best_bic = bic;
      best = cand;
      best_info = cand_info;
    }
    if (cand.n_components() < m) break;  // fewer distinct values than requested components
  }

  // Prune and renormalize, always keeping the heaviest component.
  std::vector<int> keep;
  int heaviest = 0;
  for (int k = 0; k < best.n_components(); ++k) {
    if (best.weights[k] > best.weights[heaviest]) heaviest = k;
    if (best.weights[k] >= config.prune_weight) keep.push_back(k);
  }
  if (keep.empty()) keep.push_back(heaviest);
  if (static_cast<int>(keep.size()) < best.n_components()) {
    GaussianMixtureModel pruned;
    const int mk = static_cast<int>(keep.size());
    pruned.weights.resize(mk);
    pruned.means.resize(mk);
    pruned.stddevs.resize(mk);
    for (int j = 0; j < mk; ++j) {
      pruned.weights[j] = best.weights[keep[static_cast<std::size_t>(j)]];
      pruned.means[j] = best.means[keep[static_cast<std::size_t>(j)]];
      pruned.stddevs[j] = best.stddevs[keep[static_cast<std::size_t>(j)]];
    }
    pruned.weights /= pruned.weights.sum();
    best = std::move(pruned);
  }
  best.validate();
  if (info) {
    *info = std::move(best_info);
    info->candidate_bic = std::move(bics);
  }
  return best;
}

Eigen::VectorXd responsibilities(const GaussianMixtureModel& g, double c) {
  if (!std::isfinite(c)) throw std::invalid_argument("responsibilities: non-finite value");
  const int m = g.n_components();
  Eigen::VectorXd lw(m);
  double mx = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < m; ++k) {
    lw[k] = std::log(g.weights[k]) + log_normal_pdf(c, g.means[k], g.stddevs[k]);
    mx = std::max(mx, lw[k]);
  }
  Eigen::VectorXd r = (lw.array() - mx).exp();
  r /= r.sum();
  return r;
}

double log_likelihood(const GaussianMixtureModel& g, const Eigen::VectorXd& values) {
  if (!values.allFinite()) throw std::invalid_argument("log_likelihood: non-finite input value");
  const int m = g.n_components();
  double total = 0.0;
  for (long i = 0; i < values.size(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd lw(m);
    for (int k = 0; k < m; ++k) {
      lw[k] = std::log(g.weights[k]) + log_normal_pdf(values[i], g.means[k], g.stddevs[k]);
      mx = std::max(mx, lw[k]);
    }
    total += mx + std::log((lw.array() - mx).exp().sum());
  }
  return total;
}

}  // namespace tabshift
