#ifndef LAYOUT_INFER_SYNTHETIC_HPP
#define LAYOUT_INFER_SYNTHETIC_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "layout_infer/diagnostics.hpp"
#include "layout_infer/layout_model.hpp"
#include "layout_infer/rng.hpp"

namespace layout_infer {

/// Known generating parameters of a synthetic measurement-layout dataset.
struct GroundTruth {
  std::vector<double> theta_true;
  double rho_true = 0.9;
  double nu_true = 10.0;
  double demand_density = 0.3;
  std::size_t n_instances = 800;
  std::uint64_t seed = 0;

  void validate() const {
    for (double t : theta_true)
      if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("theta_true entries must lie in (0, 1)");
    if (!(rho_true > 0.0 && rho_true < 1.0)) throw std::invalid_argument("rho_true must lie in (0, 1)");
    if (!(nu_true > 0.0) || !std::isfinite(nu_true)) throw std::invalid_argument("nu_true must be > 0");
    if (!(demand_density >= 0.0 && demand_density < 1.0))
      throw std::invalid_argument("demand_density must lie in [0, 1)");
  }
};

/// theta spread evenly over [lo, hi].
inline std::vector<double> spread_abilities(std::size_t J, double lo = 0.3, double hi = 0.9) {
  std::vector<double> out(J);
  for (std::size_t j = 0; j < J; ++j)
    out[j] = J == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(J - 1);
  return out;
}

/// Draws demand vectors and per-instance demand patterns.
inline std::vector<std::vector<std::uint8_t>> draw_demands(Rng& rng, std::size_t n, std::size_t J,
                                                           double density) {
  std::vector<std::vector<std::uint8_t>> out(n, std::vector<std::uint8_t>(J, 0));
  for (auto& row : out)
    for (auto& d : row) d = rng.bernoulli(density) ? 1 : 0;
  return out;
}

/// Score ~ Beta(Lambda nu, (1 - Lambda) nu) for a fixed demand vector.
inline double draw_score(Rng& rng, const GroundTruth& truth, std::span<const std::uint8_t> delta) {
  const double lambda = integrated_performance(delta, truth.theta_true, truth.rho_true);
  return rng.beta(lambda * truth.nu_true, (1.0 - lambda) * truth.nu_true);
}

/// Samples a dataset from the generative model. Deterministic under seed.
inline std::vector<Instance> generate(const GroundTruth& truth) {
  truth.validate();
  Rng rng(truth.seed);
  const std::size_t J = truth.theta_true.size();
  auto deltas = draw_demands(rng, truth.n_instances, J, truth.demand_density);
  std::vector<Instance> out;
  out.reserve(truth.n_instances);
  for (auto& d : deltas) {
    Instance inst;
    inst.observed_score = draw_score(rng, truth, d);
    inst.delta = std::move(d);
    out.push_back(std::move(inst));
  }
  return out;
}

struct RecoveryRow {
  std::string parameter;
  double truth = 0.0;
  double posterior_mean = 0.0;
  double abs_error = 0.0;
  bool covered = false;
  /// No instance exercises this demand; its posterior is the prior.
  bool non_identifiable = false;
};

struct RecoveryReport {
  std::vector<RecoveryRow> rows;

  std::size_t abilities_covered() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i + 2 < rows.size(); ++i) n += rows[i].covered ? 1 : 0;
    return n;
  }
  const RecoveryRow& rho() const { return rows.at(rows.size() - 2); }
  const RecoveryRow& nu() const { return rows.at(rows.size() - 1); }
};

namespace detail {

inline RecoveryReport recovery_report(const GroundTruth& truth, const std::vector<SummaryRow>& summary,
                                      const std::span<const Instance>* instances) {
  const std::size_t J = truth.theta_true.size();
  if (summary.size() != J + 2) throw std::invalid_argument("recovery_report: summary has wrong length");
  std::vector<bool> seen(J, false);
  if (instances)
    for (const auto& inst : *instances)
      for (std::size_t j = 0; j < J && j < inst.delta.size(); ++j) seen[j] = seen[j] || inst.delta[j];

  RecoveryReport rep;
  for (std::size_t p = 0; p < J + 2; ++p) {
    const auto& s = summary[p];
    RecoveryRow r;
    r.parameter = s.parameter;
    r.truth = p < J ? truth.theta_true[p] : (p == J ? truth.rho_true : truth.nu_true);
    r.posterior_mean = s.mean;
    r.abs_error = std::fabs(s.mean - r.truth);
    r.covered = s.hdi_low <= r.truth && r.truth <= s.hdi_high;
    r.non_identifiable = instances && p < J && !seen[p];
    rep.rows.push_back(r);
  }
  return rep;
}

}  // namespace detail

/// Compares a posterior summary (theta_1..J, rho, nu order) against the
/// generating values.
inline RecoveryReport recovery_report(const GroundTruth& truth,
                                      const std::vector<SummaryRow>& summary) {
  return detail::recovery_report(truth, summary, nullptr);
}

/// As above, additionally flagging demands that never occur in `instances`.
inline RecoveryReport recovery_report(const GroundTruth& truth, const std::vector<SummaryRow>& summary,
                                      std::span<const Instance> instances) {
  return detail::recovery_report(truth, summary, &instances);
}

}  // namespace layout_infer

#endif  // LAYOUT_INFER_SYNTHETIC_HPP
