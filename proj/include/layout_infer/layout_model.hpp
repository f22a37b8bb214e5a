#ifndef LAYOUT_INFER_LAYOUT_MODEL_HPP
#define LAYOUT_INFER_LAYOUT_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "layout_infer/special.hpp"

namespace layout_infer {

struct BetaPrior {
  double alpha = 1.0;
  double beta = 1.0;

  double log_pdf(double x) const { return special::beta_log_pdf(x, alpha, beta); }
  bool operator==(const BetaPrior&) const = default;
};

/**
 * Definition of one measurement layout: which demands map to abilities and
 * the prior hyperparameters.
 *
 *   theta_j ~ Beta(ability_prior)          one ability per demand
 *   rho     ~ Beta(base_chance_prior)      success chance with the demand absent
 *   nu      ~ HalfNormal(concentration_scale)
 *   lambda_ij = rho if delta_ij == 0 else theta_j
 *   Lambda_i  = prod_j lambda_ij
 *   p_i ~ Beta(Lambda_i nu, (1 - Lambda_i) nu)
 */
struct LayoutSpec {
  std::vector<std::string> demand_names;
  BetaPrior ability_prior{1.0, 1.0};
  BetaPrior base_chance_prior{5.0, 1.0};
  double concentration_scale = 5.0;
  double score_clamp_epsilon = 1e-4;

  std::size_t num_abilities() const { return demand_names.size(); }
  std::size_t dimension() const { return demand_names.size() + 2; }

  /// Throws std::invalid_argument on hyperparameters outside their domain.
  /// An empty demand list is accepted (prior-only model); the CLI requires
  /// at least one demand.
  void validate() const {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(ability_prior.alpha) || !positive(ability_prior.beta) ||
        !positive(base_chance_prior.alpha) || !positive(base_chance_prior.beta) ||
        !positive(concentration_scale))
      throw std::invalid_argument("LayoutSpec: prior hyperparameters must be positive");
    if (!(score_clamp_epsilon > 0.0 && score_clamp_epsilon <= 0.01))
      throw std::invalid_argument("LayoutSpec: score_clamp_epsilon must lie in (0, 0.01]");
  }

  /// theta[<demand>]..., rho, nu
  std::vector<std::string> param_names() const {
    std::vector<std::string> out;
    for (const auto& n : demand_names) out.push_back("theta[" + n + "]");
    out.emplace_back("rho");
    out.emplace_back("nu");
    return out;
  }

  bool operator==(const LayoutSpec&) const = default;
};

struct Instance {
  std::vector<std::uint8_t> delta;
  double observed_score = 0.5;
};

struct ParamsNatural {
  std::vector<double> abilities;
  double base_chance = 0.5;
  double concentration = 1.0;
};

/// logit(theta_1..J), logit(rho), log(nu).
struct ParamsUnconstrained {
  std::vector<double> values;
};

struct LogDensityEval {
  double value = special::kNegInf;
  std::vector<double> gradient;

  bool finite() const {
    if (!std::isfinite(value)) return false;
    for (double g : gradient)
      if (!std::isfinite(g)) return false;
    return true;
  }
};

inline double local_performance(std::uint8_t delta_j, double theta_j, double rho) {
  return (1.0 - delta_j) * rho + delta_j * theta_j;
}

inline double integrated_performance(std::span<const std::uint8_t> delta,
                                     std::span<const double> theta, double rho) {
  if (delta.size() != theta.size())
    throw std::invalid_argument("integrated_performance: delta/theta length mismatch");
  double prod = 1.0;
  for (std::size_t j = 0; j < delta.size(); ++j) prod *= local_performance(delta[j], theta[j], rho);
  return prod;
}

inline double clamp_score(double p_raw, double epsilon) {
  return std::min(std::max(p_raw, epsilon), 1.0 - epsilon);
}

inline ParamsUnconstrained to_unconstrained(const ParamsNatural& p) {
  ParamsUnconstrained u;
  u.values.reserve(p.abilities.size() + 2);
  for (double t : p.abilities) u.values.push_back(special::logit(t));
  u.values.push_back(special::logit(p.base_chance));
  u.values.push_back(std::log(p.concentration));
  return u;
}

inline ParamsNatural to_natural(std::span<const double> u) {
  if (u.size() < 2) throw std::invalid_argument("to_natural: need at least rho and nu");
  ParamsNatural p;
  const std::size_t j = u.size() - 2;
  p.abilities.reserve(j);
  for (std::size_t k = 0; k < j; ++k) p.abilities.push_back(special::inv_logit(u[k]));
  p.base_chance = special::inv_logit(u[j]);
  p.concentration = std::exp(u[j + 1]);
  return p;
}

inline ParamsNatural to_natural(const ParamsUnconstrained& u) { return to_natural(u.values); }

/// Sum of prior log-densities on the natural scale; -inf outside the open box.
inline double log_prior(const ParamsNatural& p, const LayoutSpec& spec) {
  double lp = 0.0;
  for (double t : p.abilities) lp += spec.ability_prior.log_pdf(t);
  lp += spec.base_chance_prior.log_pdf(p.base_chance);
  if (!(p.concentration >= 0.0)) return special::kNegInf;
  lp += special::half_normal_log_pdf(p.concentration, spec.concentration_scale);
  return std::isnan(lp) ? special::kNegInf : lp;
}

/// Direct per-instance Beta log-likelihood. Scores must already be in (0, 1).
inline double log_likelihood(const ParamsNatural& p, std::span<const Instance> instances) {
  double ll = 0.0;
  for (const auto& inst : instances) {
    const double lambda = integrated_performance(inst.delta, p.abilities, p.base_chance);
    const double a = lambda * p.concentration;
    const double b = (1.0 - lambda) * p.concentration;
    ll += special::beta_log_pdf(inst.observed_score, a, b);
  }
  return ll;
}

/**
 * Log-posterior of a measurement layout in unconstrained coordinates,
 * including the logit/log Jacobian, with analytic gradient.
 *
 * Instances sharing a demand pattern share Lambda_i, so the likelihood is
 * evaluated from per-pattern sufficient statistics (count, sum log p,
 * sum log(1 - p)). This is exact and keeps the special-function work
 * proportional to the number of distinct patterns rather than instances.
 */
class LayoutModel {
 public:
  LayoutModel(LayoutSpec spec, std::span<const Instance> instances) : spec_(std::move(spec)) {
    spec_.validate();
    const std::size_t J = spec_.num_abilities();
    std::map<std::vector<std::uint8_t>, std::size_t> index;
    for (const auto& inst : instances) {
      if (inst.delta.size() != J)
        throw std::invalid_argument("instance demand vector has length " +
                                    std::to_string(inst.delta.size()) + ", expected " +
                                    std::to_string(J));
      if (!std::isfinite(inst.observed_score))
        throw std::invalid_argument("instance score is not finite");
      auto [it, inserted] = index.emplace(inst.delta, groups_.size());
      if (inserted) {
        Group g;
        for (std::size_t j = 0; j < J; ++j) {
          if (inst.delta[j]) g.present.push_back(j);
        }
        g.absent = static_cast<double>(J - g.present.size());
        groups_.push_back(std::move(g));
      }
      Group& g = groups_[it->second];
      const double p = clamp_score(inst.observed_score, spec_.score_clamp_epsilon);
      g.count += 1.0;
      g.sum_log_p += std::log(p);
      g.sum_log_1mp += std::log1p(-p);
    }
    num_instances_ = instances.size();
  }

  const LayoutSpec& spec() const { return spec_; }
  std::size_t dimension() const { return spec_.dimension(); }
  std::size_t num_instances() const { return num_instances_; }
  std::size_t num_patterns() const { return groups_.size(); }
  std::vector<std::string> param_names() const { return spec_.param_names(); }

  /// Returns the log-density at `u` and writes its gradient into `grad`.
  /// A non-finite return value marks an invalid evaluation.
  double log_density(std::span<const double> u, std::span<double> grad) const {
    const std::size_t J = spec_.num_abilities();
    if (u.size() != J + 2 || grad.size() != J + 2)
      throw std::invalid_argument("log_density: dimension mismatch");
    for (double v : u)
      if (!std::isfinite(v)) return std::numeric_limits<double>::quiet_NaN();

    // Natural parameters and their logs.
    thread_local std::vector<double> log_theta, one_minus_theta;
    log_theta.resize(J);
    one_minus_theta.resize(J);
    double lp = 0.0;
    const auto& ap = spec_.ability_prior;
    const double ability_norm =
        special::lgamma(ap.alpha + ap.beta) - special::lgamma(ap.alpha) - special::lgamma(ap.beta);
    for (std::size_t j = 0; j < J; ++j) {
      const double lt = special::log_inv_logit(u[j]);
      const double l1mt = special::log1m_inv_logit(u[j]);
      log_theta[j] = lt;
      const double theta = special::inv_logit(u[j]);
      one_minus_theta[j] = special::inv_logit(-u[j]);
      // Beta prior plus Jacobian theta (1 - theta).
      lp += ability_norm + ap.alpha * lt + ap.beta * l1mt;
      grad[j] = ap.alpha * one_minus_theta[j] - ap.beta * theta;
    }
    const auto& bp = spec_.base_chance_prior;
    const double ub = u[J];
    const double rho = special::inv_logit(ub);
    const double one_minus_rho = special::inv_logit(-ub);
    const double log_rho = special::log_inv_logit(ub);
    lp += special::lgamma(bp.alpha + bp.beta) - special::lgamma(bp.alpha) -
          special::lgamma(bp.beta) + bp.alpha * log_rho + bp.beta * special::log1m_inv_logit(ub);
    grad[J] = bp.alpha * one_minus_rho - bp.beta * rho;

    const double uc = u[J + 1];
    const double nu = std::exp(uc);
    const double s = spec_.concentration_scale;
    lp += std::log(2.0 / (s * std::sqrt(2.0 * std::numbers::pi))) - 0.5 * (nu / s) * (nu / s) + uc;
    double dnu = 0.0;  // d loglik / d nu
    grad[J + 1] = 1.0 - (nu / s) * (nu / s);

    if (!groups_.empty()) {
      const double lgamma_nu = special::lgamma(nu);
      const double digamma_nu = special::digamma(nu);
      for (const auto& g : groups_) {
        double log_lambda = g.absent * log_rho;
        for (std::size_t j : g.present) log_lambda += log_theta[j];
        const double lambda = std::exp(log_lambda);
        const double one_minus_lambda = -std::expm1(log_lambda);
        const double a = lambda * nu;
        const double b = one_minus_lambda * nu;
        if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
          return special::kNegInf;
        const double psi_a = special::digamma(a);
        const double psi_b = special::digamma(b);
        lp += g.count * (lgamma_nu - special::lgamma(a) - special::lgamma(b)) +
              (a - 1.0) * g.sum_log_p + (b - 1.0) * g.sum_log_1mp;
        const double dlambda = nu * (g.count * (psi_b - psi_a) + g.sum_log_p - g.sum_log_1mp);
        dnu += g.count * (digamma_nu - lambda * psi_a - one_minus_lambda * psi_b) +
               lambda * g.sum_log_p + one_minus_lambda * g.sum_log_1mp;
        // dLambda/du_j = Lambda (1 - theta_j); dLambda/du_rho = absent Lambda (1 - rho)
        const double scaled = dlambda * lambda;
        for (std::size_t j : g.present) grad[j] += scaled * one_minus_theta[j];
        grad[J] += scaled * g.absent * one_minus_rho;
      }
    }
    grad[J + 1] += dnu * nu;
    return lp;
  }

  LogDensityEval evaluate(std::span<const double> u) const {
    LogDensityEval e;
    e.gradient.assign(dimension(), 0.0);
    e.value = log_density(u, e.gradient);
    if (std::isnan(e.value)) e.value = special::kNegInf;
    return e;
  }

 private:
  struct Group {
    std::vector<std::size_t> present;
    double absent = 0.0;
    double count = 0.0;
    double sum_log_p = 0.0;
    double sum_log_1mp = 0.0;
  };

  LayoutSpec spec_;
  std::vector<Group> groups_;
  std::size_t num_instances_ = 0;
};

inline LogDensityEval log_posterior_unconstrained(const ParamsUnconstrained& u,
                                                  std::span<const Instance> instances,
                                                  const LayoutSpec& spec) {
  return LayoutModel(spec, instances).evaluate(u.values);
}

}  // namespace layout_infer

#endif  // LAYOUT_INFER_LAYOUT_MODEL_HPP
