#ifndef LAYOUT_INFER_PREDICT_ASSESS_HPP
#define LAYOUT_INFER_PREDICT_ASSESS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "layout_infer/layout_model.hpp"
#include "layout_infer/sampler.hpp"

namespace layout_infer {

enum class PredictorKind { layout_posterior, mean_baseline, linear_assessor, boosted_stumps_assessor };

inline std::string to_string(PredictorKind k) {
  switch (k) {
    case PredictorKind::layout_posterior: return "layout_posterior";
    case PredictorKind::mean_baseline: return "mean_baseline";
    case PredictorKind::linear_assessor: return "linear_assessor";
    case PredictorKind::boosted_stumps_assessor: return "boosted_stumps_assessor";
  }
  return "unknown";
}

struct Metrics {
  double rmse = 0.0;
  double r2 = 0.0;
  std::size_t n_test = 0;
};

inline double rmse(std::span<const double> pred, std::span<const double> obs) {
  if (pred.size() != obs.size() || pred.empty())
    throw std::invalid_argument("rmse: prediction/observation size mismatch or empty");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - obs[i]) * (pred[i] - obs[i]);
  return std::sqrt(s / static_cast<double>(pred.size()));
}

/// 1 - SS_res / SS_tot, SS_tot about the mean of `obs`. NaN when obs is constant.
inline double r2(std::span<const double> pred, std::span<const double> obs) {
  if (pred.size() != obs.size() || pred.empty())
    throw std::invalid_argument("r2: prediction/observation size mismatch or empty");
  const double m = std::accumulate(obs.begin(), obs.end(), 0.0) / static_cast<double>(obs.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    ss_res += (obs[i] - pred[i]) * (obs[i] - pred[i]);
    ss_tot += (obs[i] - m) * (obs[i] - m);
  }
  if (!(ss_tot > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return 1.0 - ss_res / ss_tot;
}

inline Metrics evaluate(std::span<const double> pred, std::span<const double> obs) {
  return {rmse(pred, obs), r2(pred, obs), obs.size()};
}

/// Mean over draws of Lambda(delta; theta, rho). Draws are natural-scale
/// rows (theta_1..J, rho, nu).
inline double posterior_predictive_mean(std::span<const DrawMatrix> natural_draws,
                                        std::span<const std::uint8_t> delta) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& m : natural_draws) {
    if (m.cols != delta.size() + 2)
      throw std::invalid_argument("posterior_predictive_mean: demand vector length mismatch");
    for (std::size_t r = 0; r < m.rows; ++r) {
      const auto row = m.row(r);
      sum += integrated_performance(delta, row.first(delta.size()), row[delta.size()]);
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("posterior_predictive_mean: empty posterior");
  return sum / static_cast<double>(n);
}

inline double posterior_predictive_mean(const Posterior& posterior,
                                        std::span<const std::uint8_t> delta) {
  return posterior_predictive_mean(posterior.natural_draws(), delta);
}

/// Predicts the training-set mean everywhere.
class MeanBaseline {
 public:
  void fit(std::span<const Instance> train) {
    if (train.empty()) throw std::invalid_argument("mean baseline: empty training set");
    double s = 0.0;
    for (const auto& i : train) s += i.observed_score;
    mean_ = s / static_cast<double>(train.size());
  }
  double predict(std::span<const std::uint8_t>) const { return mean_; }
  double mean() const { return mean_; }

 private:
  double mean_ = 0.0;
};

/**
 * Ordinary least squares on intercept + binary demand features, solved via
 * the normal equations. A singular or near-singular Gram matrix gets a
 * ridge of 1e-8 on the diagonal. Predictions are clipped to [0, 1].
 */
class LinearAssessor {
 public:
  void fit(std::span<const Instance> train) {
    if (train.empty()) throw std::invalid_argument("linear assessor: empty training set");
    const Eigen::Index k = static_cast<Eigen::Index>(train.front().delta.size()) + 1;
    Eigen::MatrixXd X(static_cast<Eigen::Index>(train.size()), k);
    Eigen::VectorXd y(static_cast<Eigen::Index>(train.size()));
    for (std::size_t i = 0; i < train.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      X(r, 0) = 1.0;
      for (Eigen::Index j = 1; j < k; ++j) X(r, j) = train[i].delta[static_cast<std::size_t>(j - 1)];
      y(r) = train[i].observed_score;
    }
    Eigen::MatrixXd gram = X.transpose() * X;
    const Eigen::VectorXd rhs = X.transpose() * y;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    // Pivoted LDLT completes on singular PSD input; a tiny pivot gives it away.
    const auto piv = ldlt.vectorD().cwiseAbs();
    ridge_used_ = ldlt.info() != Eigen::Success || !(piv.minCoeff() > 1e-12 * piv.maxCoeff());
    if (ridge_used_) {
      gram.diagonal().array() += kRidge;
      ldlt.compute(gram);
    }
    const Eigen::VectorXd beta = ldlt.solve(rhs);
    coef_.assign(beta.data(), beta.data() + beta.size());
  }

  double predict_raw(std::span<const std::uint8_t> delta) const {
    double v = coef_.at(0);
    for (std::size_t j = 0; j < delta.size(); ++j) v += coef_[j + 1] * delta[j];
    return v;
  }
  double predict(std::span<const std::uint8_t> delta) const {
    return std::clamp(predict_raw(delta), 0.0, 1.0);
  }

  /// Intercept first, then one coefficient per demand.
  const std::vector<double>& coefficients() const { return coef_; }
  bool ridge_used() const { return ridge_used_; }

  static constexpr double kRidge = 1e-8;

 private:
  std::vector<double> coef_;
  bool ridge_used_ = false;
};

struct BoostingOptions {
  int rounds = 200;
  double learning_rate = 0.1;
  int depth = 2;
};

/**
 * Squared-error gradient boosting of small regression trees over binary
 * demand features. Each internal node splits on one demand (0 vs 1);
 * depth 1 gives stumps. Ties between equally good splits go to the lowest
 * demand index, so fitting is deterministic.
 */
class BoostedStumps {
 public:
  explicit BoostedStumps(BoostingOptions opts = {}) : opts_(opts) {
    if (opts_.rounds < 0 || !(opts_.learning_rate > 0.0) || opts_.depth < 1)
      throw std::invalid_argument("boosting options out of range");
  }

  void fit(std::span<const Instance> train) {
    if (train.empty()) throw std::invalid_argument("boosted stumps: empty training set");
    num_features_ = train.front().delta.size();
    double s = 0.0;
    for (const auto& i : train) s += i.observed_score;
    base_ = s / static_cast<double>(train.size());
    trees_.clear();

    std::vector<double> pred(train.size(), base_);
    std::vector<double> resid(train.size());
    std::vector<std::size_t> all(train.size());
    std::iota(all.begin(), all.end(), 0);
    for (int round = 0; round < opts_.rounds; ++round) {
      for (std::size_t i = 0; i < train.size(); ++i) resid[i] = train[i].observed_score - pred[i];
      Tree tree;
      grow(tree, train, resid, all, opts_.depth);
      for (std::size_t i = 0; i < train.size(); ++i)
        pred[i] += opts_.learning_rate * tree.evaluate(train[i].delta);
      trees_.push_back(std::move(tree));
    }
  }

  double predict_raw(std::span<const std::uint8_t> delta) const {
    double v = base_;
    for (const auto& t : trees_) v += opts_.learning_rate * t.evaluate(delta);
    return v;
  }
  double predict(std::span<const std::uint8_t> delta) const {
    return std::clamp(predict_raw(delta), 0.0, 1.0);
  }

 private:
  struct Node {
    int feature = -1;  // -1: leaf
    double value = 0.0;
    int child[2] = {-1, -1};
  };
  struct Tree {
    std::vector<Node> nodes;
    double evaluate(std::span<const std::uint8_t> delta) const {
      int n = 0;
      while (nodes[n].feature >= 0) n = nodes[n].child[delta[nodes[n].feature] ? 1 : 0];
      return nodes[n].value;
    }
  };

  int grow(Tree& tree, std::span<const Instance> train, const std::vector<double>& resid,
           const std::vector<std::size_t>& rows, int depth) const {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    double total = 0.0;
    for (auto i : rows) total += resid[i];
    const double n = static_cast<double>(rows.size());
    tree.nodes[id].value = rows.empty() ? 0.0 : total / n;
    if (depth == 0 || rows.size() < 2) return id;

    // Gain of a split = sum_s (S_s^2 / n_s) - S^2 / n.
    int best = -1;
    double best_gain = 1e-12;
    for (std::size_t j = 0; j < num_features_; ++j) {
      double s1 = 0.0, n1 = 0.0;
      for (auto i : rows)
        if (train[i].delta[j]) {
          s1 += resid[i];
          n1 += 1.0;
        }
      const double n0 = n - n1;
      if (n1 == 0.0 || n0 == 0.0) continue;
      const double s0 = total - s1;
      const double gain = s1 * s1 / n1 + s0 * s0 / n0 - total * total / n;
      if (gain > best_gain) {
        best_gain = gain;
        best = static_cast<int>(j);
      }
    }
    if (best < 0) return id;
    std::vector<std::size_t> side[2];
    for (auto i : rows) side[train[i].delta[static_cast<std::size_t>(best)] ? 1 : 0].push_back(i);
    tree.nodes[id].feature = best;
    for (int s = 0; s < 2; ++s) {
      const int child = grow(tree, train, resid, side[s], depth - 1);
      tree.nodes[id].child[s] = child;
    }
    return id;
  }

  BoostingOptions opts_;
  std::size_t num_features_ = 0;
  double base_ = 0.0;
  std::vector<Tree> trees_;
};

/// A fitted predictor of any kind.
class Predictor {
 public:
  using State = std::variant<const Posterior*, MeanBaseline, LinearAssessor, BoostedStumps>;

  explicit Predictor(State s) : state_(std::move(s)) {}

  PredictorKind kind() const { return static_cast<PredictorKind>(state_.index()); }

  double predict(std::span<const std::uint8_t> delta) const {
    return std::visit(
        [&](const auto& p) -> double {
          if constexpr (std::is_same_v<std::decay_t<decltype(p)>, const Posterior*>)
            return posterior_predictive_mean(*p, delta);
          else
            return p.predict(delta);
        },
        state_);
  }

 private:
  State state_;
};

/// The posterior must outlive the returned predictor.
inline Predictor layout_predictor(const Posterior& posterior) { return Predictor(&posterior); }

inline Predictor fit_mean_baseline(std::span<const Instance> train) {
  MeanBaseline m;
  m.fit(train);
  return Predictor(m);
}

inline Predictor fit_linear_assessor(std::span<const Instance> train) {
  LinearAssessor m;
  m.fit(train);
  return Predictor(m);
}

inline Predictor fit_boosted_stumps(std::span<const Instance> train, BoostingOptions opts = {}) {
  BoostedStumps m(opts);
  m.fit(train);
  return Predictor(m);
}

/// Minimum test R^2 of the layout predictor for a submission to appear in
/// ability profiles (strict inequality).
inline constexpr double kProfileR2Threshold = 0.25;

inline bool include_in_profiles(double layout_r2) {
  return std::isfinite(layout_r2) && layout_r2 > kProfileR2Threshold;
}

struct ComparisonRow {
  std::string submission;
  PredictorKind predictor;
  Metrics metrics;
  bool included_in_profiles = false;
};

/// Predictions of each predictor on the test rows of one submission.
struct SubmissionPredictions {
  std::string submission;
  std::vector<double> observed;
  std::map<PredictorKind, std::vector<double>> predicted;
};

/**
 * Metrics per predictor per submission. The inclusion flag is the layout
 * predictor's R^2 > 0.25 and is copied onto every row of that submission.
 */
inline std::vector<ComparisonRow> compare_predictors(const std::vector<SubmissionPredictions>& subs) {
  std::vector<ComparisonRow> out;
  for (const auto& s : subs) {
    bool include = false;
    if (auto it = s.predicted.find(PredictorKind::layout_posterior); it != s.predicted.end())
      include = include_in_profiles(r2(it->second, s.observed));
    for (const auto& [kind, pred] : s.predicted)
      out.push_back({s.submission, kind, evaluate(pred, s.observed), include});
  }
  return out;
}

}  // namespace layout_infer

#endif  // LAYOUT_INFER_PREDICT_ASSESS_HPP
