#ifndef LAYOUT_INFER_DIAGNOSTICS_HPP
#define LAYOUT_INFER_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "layout_infer/sampler.hpp"
#include "layout_infer/special.hpp"

namespace layout_infer {

class DiagnosticsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// chains x iterations
using ChainDraws = std::vector<std::vector<double>>;

namespace diag_detail {

inline void check_shape(const ChainDraws& draws, std::size_t min_chains, std::size_t min_iters) {
  if (draws.size() < min_chains)
    throw DiagnosticsError("need at least " + std::to_string(min_chains) + " chain(s)");
  const std::size_t n = draws.front().size();
  for (const auto& c : draws)
    if (c.size() != n) throw DiagnosticsError("chains have unequal lengths");
  if (n < min_iters)
    throw DiagnosticsError("need at least " + std::to_string(min_iters) + " iterations per chain");
}

/// Each chain split into its first and last floor(n/2) draws.
inline ChainDraws split_chains(const ChainDraws& draws) {
  ChainDraws out;
  for (const auto& c : draws) {
    const std::size_t half = c.size() / 2;
    out.emplace_back(c.begin(), c.begin() + half);
    out.emplace_back(c.end() - half, c.end());
  }
  return out;
}

/// Pooled fractional ranks (average for ties) mapped through the normal
/// quantile: z = Phi^{-1}((r - 3/8) / (S + 1/4)).
inline ChainDraws rank_normalize(const ChainDraws& draws) {
  std::vector<std::pair<double, std::size_t>> pooled;
  for (std::size_t c = 0; c < draws.size(); ++c)
    for (std::size_t i = 0; i < draws[c].size(); ++i)
      pooled.emplace_back(draws[c][i], c * draws[c].size() + i);
  std::sort(pooled.begin(), pooled.end());
  const double S = static_cast<double>(pooled.size());
  std::vector<double> z(pooled.size());
  for (std::size_t k = 0; k < pooled.size();) {
    std::size_t m = k;
    while (m + 1 < pooled.size() && pooled[m + 1].first == pooled[k].first) ++m;
    const double rank = 0.5 * static_cast<double>(k + m) + 1.0;
    const double v = special::normal_quantile((rank - 0.375) / (S + 0.25));
    for (std::size_t t = k; t <= m; ++t) z[pooled[t].second] = v;
    k = m + 1;
  }
  ChainDraws out = draws;
  for (std::size_t c = 0; c < out.size(); ++c)
    for (std::size_t i = 0; i < out[c].size(); ++i) out[c][i] = z[c * out[c].size() + i];
  return out;
}

inline double mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double variance(std::span<const double> x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

/// Classic between/within potential scale reduction on already-split chains.
inline double rhat_basic(const ChainDraws& chains) {
  const double n = static_cast<double>(chains.front().size());
  std::vector<double> means, vars;
  for (const auto& c : chains) {
    means.push_back(mean(c));
    vars.push_back(variance(c));
  }
  const double W = mean(vars);
  if (!(W > 0.0)) throw DiagnosticsError("zero within-chain variance (degenerate chains)");
  const double B = chains.size() > 1 ? n * variance(means) : 0.0;
  const double var_plus = (n - 1.0) / n * W + B / n;
  return std::sqrt(var_plus / W);
}

inline ChainDraws fold(const ChainDraws& draws) {
  std::vector<double> all;
  for (const auto& c : draws) all.insert(all.end(), c.begin(), c.end());
  std::sort(all.begin(), all.end());
  const std::size_t n = all.size();
  const double median = n % 2 ? all[n / 2] : 0.5 * (all[n / 2 - 1] + all[n / 2]);
  ChainDraws out = draws;
  for (auto& c : out)
    for (auto& v : c) v = std::fabs(v - median);
  return out;
}

/**
 * Multi-chain ESS from autocovariances with Geyer's initial positive and
 * monotone sequence truncation. Autocovariances are computed lag by lag
 * until truncation, which is cheap for well-mixing chains.
 */
inline double ess_raw(const ChainDraws& chains) {
  const std::size_t m = chains.size();
  const std::size_t n = chains.front().size();
  std::vector<double> chain_mean(m), chain_var(m);
  std::vector<std::vector<double>> centered(m);
  for (std::size_t c = 0; c < m; ++c) {
    chain_mean[c] = mean(chains[c]);
    centered[c].resize(n);
    for (std::size_t i = 0; i < n; ++i) centered[c][i] = chains[c][i] - chain_mean[c];
  }
  // Biased autocovariance at lag t averaged over chains.
  auto mean_acov = [&](std::size_t t) {
    double total = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      double s = 0.0;
      const auto& x = centered[c];
      for (std::size_t i = 0; i + t < n; ++i) s += x[i] * x[i + t];
      total += s / static_cast<double>(n);
    }
    return total / static_cast<double>(m);
  };
  const double acov0 = mean_acov(0);
  const double mean_var = acov0 * static_cast<double>(n) / static_cast<double>(n - 1);
  double var_plus = mean_var * static_cast<double>(n - 1) / static_cast<double>(n);
  if (m > 1) var_plus += variance(chain_mean);
  if (!(var_plus > 0.0) || !(mean_var > 0.0))
    throw DiagnosticsError("ESS undefined for constant draws");

  std::vector<double> rho(n, 0.0);
  rho[0] = 1.0;
  double rho_even = 1.0;
  double rho_odd = 1.0 - (mean_var - mean_acov(1)) / var_plus;
  if (n > 1) rho[1] = rho_odd;
  std::size_t t = 1;
  while (t + 4 < n && rho_even + rho_odd > 0.0) {
    rho_even = 1.0 - (mean_var - mean_acov(t + 1)) / var_plus;
    rho_odd = 1.0 - (mean_var - mean_acov(t + 2)) / var_plus;
    if (rho_even + rho_odd >= 0.0) {
      rho[t + 1] = rho_even;
      rho[t + 2] = rho_odd;
    }
    t += 2;
  }
  const std::size_t max_t = t;
  if (rho_even > 0.0 && max_t + 1 < n) rho[max_t + 1] = rho_even;

  // Initial monotone sequence.
  for (std::size_t k = 1; k + 2 <= max_t; k += 2) {
    if (rho[k + 1] + rho[k + 2] > rho[k - 1] + rho[k]) {
      rho[k + 1] = 0.5 * (rho[k - 1] + rho[k]);
      rho[k + 2] = rho[k + 1];
    }
  }
  const double total = static_cast<double>(m * n);
  double tau = -1.0;
  for (std::size_t k = 0; k <= max_t && k < n; ++k) tau += 2.0 * rho[k];
  if (max_t + 1 < n) tau += rho[max_t + 1];
  tau = std::max(tau, 1.0 / std::log10(total));
  return std::min(total / tau, 1.5 * total);
}

}  // namespace diag_detail

/**
 * Rank-normalized split R-hat: the larger of the bulk statistic (ranks of
 * the draws) and the tail statistic (ranks of |draw - median|).
 */
inline double split_rhat(const ChainDraws& draws) {
  diag_detail::check_shape(draws, 2, 4);
  const auto split = diag_detail::split_chains(draws);
  for (const auto& c : split)
    if (!(diag_detail::variance(c) > 0.0))
      throw DiagnosticsError("zero within-chain variance (degenerate chains)");
  const double bulk = diag_detail::rhat_basic(diag_detail::rank_normalize(split));
  const double tail =
      diag_detail::rhat_basic(diag_detail::rank_normalize(diag_detail::fold(split)));
  return std::max(bulk, tail);
}

/// Bulk ESS: ESS of the rank-normalized split chains. Capped at 1.5 x draws.
inline double ess_bulk(const ChainDraws& draws) {
  diag_detail::check_shape(draws, 1, 4);
  return diag_detail::ess_raw(diag_detail::rank_normalize(diag_detail::split_chains(draws)));
}

/// Tail ESS: minimum ESS of the indicators I(x <= q05) and I(x <= q95).
inline double ess_tail(const ChainDraws& draws) {
  diag_detail::check_shape(draws, 1, 4);
  const auto split = diag_detail::split_chains(draws);
  std::vector<double> all;
  for (const auto& c : split) all.insert(all.end(), c.begin(), c.end());
  std::sort(all.begin(), all.end());
  auto quantile = [&](double p) {
    const double h = (static_cast<double>(all.size()) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, all.size() - 1);
    return all[lo] + (h - static_cast<double>(lo)) * (all[hi] - all[lo]);
  };
  double best = std::numeric_limits<double>::infinity();
  for (double p : {0.05, 0.95}) {
    const double q = quantile(p);
    ChainDraws ind = split;
    for (auto& c : ind)
      for (auto& v : c) v = v <= q ? 1.0 : 0.0;
    best = std::min(best, diag_detail::ess_raw(ind));
  }
  return best;
}

/// Monte Carlo standard error of the mean, sd / sqrt(ESS) on the raw
/// (not rank-normalized) split chains.
inline double mcse_mean(const ChainDraws& draws) {
  diag_detail::check_shape(draws, 1, 4);
  const auto split = diag_detail::split_chains(draws);
  std::vector<double> all;
  for (const auto& c : split) all.insert(all.end(), c.begin(), c.end());
  return std::sqrt(diag_detail::variance(all) / diag_detail::ess_raw(split));
}

/// Shortest interval spanning ceil(mass * n) sorted samples.
inline std::pair<double, double> hdi(std::vector<double> samples, double mass = 0.94) {
  if (samples.empty()) throw DiagnosticsError("hdi: no samples");
  if (!(mass > 0.0 && mass <= 1.0)) throw DiagnosticsError("hdi: mass must lie in (0, 1]");
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  std::size_t k = static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, n);
  std::size_t best = 0;
  double width = samples[k - 1] - samples[0];
  for (std::size_t i = 1; i + k <= n; ++i) {
    const double w = samples[i + k - 1] - samples[i];
    if (w < width) {
      width = w;
      best = i;
    }
  }
  return {samples[best], samples[best + k - 1]};
}

struct SummaryRow {
  std::string parameter;
  double mean = 0.0;
  double sd = 0.0;
  double hdi_low = 0.0;
  double hdi_high = 0.0;
  double rhat = 1.0;
  double ess_bulk = 0.0;
  double ess_tail = 0.0;
};

/// R-hat threshold under which a fit is reported as converged.
inline constexpr double kRhatConverged = 1.01;

/**
 * One row per natural-scale parameter in posterior order. With a single
 * chain R-hat is computed from the two halves of that chain.
 */
inline std::vector<SummaryRow> summarize(const Posterior& posterior, double mass = 0.94) {
  std::vector<SummaryRow> rows;
  for (std::size_t p = 0; p < posterior.dimension(); ++p) {
    const ChainDraws draws = posterior.parameter(p);
    std::vector<double> all;
    for (const auto& c : draws) all.insert(all.end(), c.begin(), c.end());
    SummaryRow row;
    row.parameter = p < posterior.param_names.size() ? posterior.param_names[p] : std::to_string(p);
    row.mean = diag_detail::mean(all);
    row.sd = all.size() > 1 ? std::sqrt(diag_detail::variance(all)) : 0.0;
    std::tie(row.hdi_low, row.hdi_high) = hdi(all, mass);
    try {
      if (draws.size() >= 2) {
        row.rhat = split_rhat(draws);
      } else {
        const std::size_t half = draws.front().size() / 2;
        ChainDraws halves = {{draws.front().begin(), draws.front().begin() + half},
                             {draws.front().end() - half, draws.front().end()}};
        row.rhat = split_rhat(halves);
      }
      row.ess_bulk = ess_bulk(draws);
      row.ess_tail = ess_tail(draws);
    } catch (const DiagnosticsError&) {
      row.rhat = std::numeric_limits<double>::quiet_NaN();
      row.ess_bulk = std::numeric_limits<double>::quiet_NaN();
      row.ess_tail = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  return rows;
}

inline bool converged(const std::vector<SummaryRow>& rows) {
  for (const auto& r : rows)
    if (!(r.rhat < kRhatConverged)) return false;
  return true;
}

}  // namespace layout_infer

#endif  // LAYOUT_INFER_DIAGNOSTICS_HPP
