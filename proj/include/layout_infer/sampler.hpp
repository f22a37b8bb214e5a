#ifndef LAYOUT_INFER_SAMPLER_HPP
#define LAYOUT_INFER_SAMPLER_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "layout_infer/rng.hpp"
#include "layout_infer/special.hpp"

namespace layout_infer {

class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A differentiable log-density over R^dimension(). A non-finite return
/// value from log_density marks the point as invalid.
template <typename T>
concept LogDensity = requires(const T& t, std::span<const double> x, std::span<double> g) {
  { t.dimension() } -> std::convertible_to<std::size_t>;
  { t.log_density(x, g) } -> std::convertible_to<double>;
};

/// Adapts a callable `double(std::span<const double>, std::span<double>)`.
class FunctionDensity {
 public:
  using Fn = std::function<double(std::span<const double>, std::span<double>)>;
  FunctionDensity(std::size_t dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {}
  std::size_t dimension() const { return dim_; }
  double log_density(std::span<const double> x, std::span<double> g) const { return fn_(x, g); }

 private:
  std::size_t dim_;
  Fn fn_;
};

struct SamplerConfig {
  int chains = 4;
  int draws = 4000;
  int warmup = 1000;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  std::uint64_t seed = 0;
  /// Worker threads; 0 means LAYOUT_INFER_THREADS or hardware concurrency.
  int threads = 0;
  double init_radius = 2.0;
  double max_energy_error = 1000.0;

  void validate() const {
    if (chains < 1) throw std::invalid_argument("chains must be >= 1");
    if (draws < 1) throw std::invalid_argument("draws must be >= 1");
    if (warmup < 0) throw std::invalid_argument("warmup must be >= 0");
    if (!(target_accept > 0.0 && target_accept < 1.0))
      throw std::invalid_argument("target_accept must lie in (0, 1)");
    if (max_tree_depth < 1) throw std::invalid_argument("max_tree_depth must be >= 1");
    if (threads < 0) throw std::invalid_argument("threads must be >= 0");
  }
};

/// Row-major draws x dim matrix.
struct DrawMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DrawMatrix() = default;
  DrawMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) out[r] = (*this)(r, c);
    return out;
  }
  bool operator==(const DrawMatrix&) const = default;
};

struct Chain {
  DrawMatrix draws;  // unconstrained coordinates
  std::vector<double> accept_stat;
  std::vector<int> tree_depth;
  std::vector<int> n_leapfrog;
  std::vector<std::uint8_t> divergent;
  std::vector<double> energy;
  int divergence_count = 0;  // post-warmup
  int warmup_divergences = 0;
  double step_size_final = 0.0;
  std::vector<double> mass_diag;  // inverse metric (variance scale)

  double mean_accept() const {
    if (accept_stat.empty()) return 0.0;
    double s = 0.0;
    for (double a : accept_stat) s += a;
    return s / static_cast<double>(accept_stat.size());
  }
};

/// Multi-chain sampler output. `to_natural` maps one unconstrained draw to
/// natural coordinates (identity when unset).
struct Posterior {
  std::vector<Chain> chains;
  std::vector<std::string> param_names;
  std::function<void(std::span<const double>, std::span<double>)> to_natural;

  std::size_t num_chains() const { return chains.size(); }
  std::size_t draws_per_chain() const { return chains.empty() ? 0 : chains.front().draws.rows; }
  std::size_t dimension() const { return chains.empty() ? 0 : chains.front().draws.cols; }
  int total_divergences() const {
    int n = 0;
    for (const auto& c : chains) n += c.divergence_count;
    return n;
  }

  /// Per-chain draws in natural coordinates, computed on first access.
  /// First access is not thread-safe.
  const std::vector<DrawMatrix>& natural_draws() const {
    if (!natural_cache_) {
      std::vector<DrawMatrix> out;
      for (const auto& c : chains) {
        DrawMatrix m(c.draws.rows, c.draws.cols);
        for (std::size_t r = 0; r < c.draws.rows; ++r) {
          if (to_natural) {
            to_natural(c.draws.row(r), m.row(r));
          } else {
            std::copy(c.draws.row(r).begin(), c.draws.row(r).end(), m.row(r).begin());
          }
        }
        out.push_back(std::move(m));
      }
      natural_cache_ = std::move(out);
    }
    return *natural_cache_;
  }

  /// chains x iterations values of one natural-scale parameter.
  std::vector<std::vector<double>> parameter(std::size_t index) const {
    std::vector<std::vector<double>> out;
    for (const auto& m : natural_draws()) out.push_back(m.column(index));
    return out;
  }

 private:
  mutable std::optional<std::vector<DrawMatrix>> natural_cache_;
};

namespace detail {

inline int resolve_threads(int requested, int chains) {
  int n = requested;
  if (n <= 0) {
    if (const char* env = std::getenv("LAYOUT_INFER_THREADS")) n = std::atoi(env);
  }
  if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return std::clamp(n, 1, std::max(1, chains));
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers. The first
/// exception (lowest index) is rethrown after all workers finish.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min(threads, n); ++t) {
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

/**
 * Dual-averaging step-size adaptation (Nesterov primal-dual averaging as
 * used by NUTS): pushes the mean acceptance statistic toward `target`.
 */
class DualAveraging {
 public:
  explicit DualAveraging(double target, double gamma = 0.05, double t0 = 10.0,
                         double kappa = 0.75)
      : target_(target), gamma_(gamma), t0_(t0), kappa_(kappa) {}

  void set_mu(double mu) { mu_ = mu; }
  void restart() {
    counter_ = 0;
    s_bar_ = 0.0;
    x_bar_ = 0.0;
  }

  /// Updates with one acceptance statistic; returns the next step size.
  double learn(double accept_stat) {
    ++counter_;
    accept_stat = std::min(1.0, accept_stat);
    const double n = static_cast<double>(counter_);
    const double eta = 1.0 / (n + t0_);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (target_ - accept_stat);
    const double x = mu_ - s_bar_ * std::sqrt(n) / gamma_;
    const double x_eta = std::pow(n, -kappa_);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    return std::exp(x);
  }

  /// Averaged iterate, used once adaptation ends.
  double final_step_size() const { return std::exp(x_bar_); }

 private:
  double target_, gamma_, t0_, kappa_;
  double mu_ = std::log(10.0);
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
  long counter_ = 0;
};

/// Welford running variance.
class VarianceEstimator {
 public:
  explicit VarianceEstimator(std::size_t dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}
  void restart() {
    n_ = 0;
    std::fill(mean_.begin(), mean_.end(), 0.0);
    std::fill(m2_.begin(), m2_.end(), 0.0);
  }
  void add(std::span<const double> x) {
    ++n_;
    for (std::size_t i = 0; i < mean_.size(); ++i) {
      const double d = x[i] - mean_[i];
      mean_[i] += d / static_cast<double>(n_);
      m2_[i] += d * (x[i] - mean_[i]);
    }
  }
  std::size_t count() const { return n_; }
  std::vector<double> variance() const {
    std::vector<double> v(mean_.size(), 0.0);
    if (n_ > 1)
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = m2_[i] / static_cast<double>(n_ - 1);
    return v;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> mean_, m2_;
};

/**
 * Diagonal metric from a window of warmup draws: the empirical variance
 * shrunk toward 1e-3 * I with weight 5 / (n + 5). Strictly positive.
 */
inline std::vector<double> adapt_mass_matrix(std::span<const std::vector<double>> warmup_draws) {
  if (warmup_draws.empty()) throw std::invalid_argument("adapt_mass_matrix: no draws");
  VarianceEstimator est(warmup_draws.front().size());
  for (const auto& d : warmup_draws) est.add(d);
  auto var = est.variance();
  const double n = static_cast<double>(est.count());
  for (double& v : var) v = (n / (n + 5.0)) * v + 1e-3 * (5.0 / (n + 5.0));
  return var;
}

/// Step size after dual averaging over a sequence of acceptance statistics.
inline double adapt_step_size(std::span<const double> accept_stats, double initial_step,
                              double target_accept) {
  DualAveraging da(target_accept);
  da.set_mu(std::log(10.0 * initial_step));
  for (double a : accept_stats) da.learn(a);
  return da.final_step_size();
}

/**
 * Warmup schedule: initial fast interval (15%), a sequence of doubling
 * slow windows for the metric (75%), terminal step-size-only interval
 * (10%). Warmups shorter than 20 iterations adapt the step size only.
 */
class WarmupSchedule {
 public:
  explicit WarmupSchedule(int num_warmup) : num_warmup_(num_warmup) {
    if (num_warmup_ < 20) {
      metric_enabled_ = false;
      return;
    }
    init_buffer_ = static_cast<int>(0.15 * num_warmup_);
    term_buffer_ = static_cast<int>(0.10 * num_warmup_);
    const int span = num_warmup_ - init_buffer_ - term_buffer_;
    window_size_ = std::min(25, span);
    next_window_ = init_buffer_ + window_size_ - 1;
  }

  /// Call once per warmup iteration after the transition. Returns true when
  /// `it` closes a metric window.
  bool in_window(int it) const {
    return metric_enabled_ && it >= init_buffer_ && it < num_warmup_ - term_buffer_ &&
           it != num_warmup_;
  }
  bool closes_window(int it) const {
    return metric_enabled_ && it == next_window_ && it != num_warmup_;
  }
  void advance(int it) {
    const int last = num_warmup_ - term_buffer_ - 1;
    if (next_window_ == last) return;
    window_size_ *= 2;
    next_window_ = it + window_size_;
    if (next_window_ != last) {
      const int boundary = next_window_ + 2 * window_size_;
      if (boundary >= num_warmup_ - term_buffer_) next_window_ = last;
    }
  }

 private:
  int num_warmup_;
  bool metric_enabled_ = true;
  int init_buffer_ = 0;
  int term_buffer_ = 0;
  int window_size_ = 0;
  int next_window_ = 0;
};

/// Phase-space point for diagonal-metric Hamiltonian dynamics.
struct PhasePoint {
  std::vector<double> q, p, grad;
  double log_density = special::kNegInf;
};

/// Kinetic energy 0.5 p' M^{-1} p.
inline double kinetic_energy(std::span<const double> p, std::span<const double> inv_metric) {
  double k = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) k += p[i] * p[i] * inv_metric[i];
  return 0.5 * k;
}

inline double hamiltonian(const PhasePoint& z, std::span<const double> inv_metric) {
  const double h = -z.log_density + kinetic_energy(z.p, inv_metric);
  return std::isnan(h) ? std::numeric_limits<double>::infinity() : h;
}

/// One leapfrog step of size `eps` (negative integrates backward).
template <LogDensity Model>
void leapfrog(const Model& model, PhasePoint& z, std::span<const double> inv_metric, double eps) {
  const std::size_t d = z.q.size();
  for (std::size_t i = 0; i < d; ++i) z.p[i] += 0.5 * eps * z.grad[i];
  for (std::size_t i = 0; i < d; ++i) z.q[i] += eps * inv_metric[i] * z.p[i];
  z.log_density = model.log_density(z.q, z.grad);
  if (std::isnan(z.log_density)) z.log_density = special::kNegInf;
  for (std::size_t i = 0; i < d; ++i) z.p[i] += 0.5 * eps * z.grad[i];
}

/**
 * Multinomial No-U-Turn transition with the generalized U-turn criterion
 * (checked across the merged trajectory and both sub-trajectory seams)
 * and biased progressive sampling at the top level.
 */
template <LogDensity Model>
class NutsKernel {
 public:
  struct Transition {
    double accept_stat = 0.0;
    int depth = 0;
    int n_leapfrog = 0;
    bool divergent = false;
    double energy = 0.0;
  };

  NutsKernel(const Model& model, Rng& rng, int max_depth, double max_energy_error)
      : model_(model), rng_(rng), max_depth_(max_depth), max_delta_h_(max_energy_error) {}

  std::vector<double> inv_metric;
  double step_size = 1.0;

  /// Advances `z` (position, log density and gradient must be current).
  Transition transition(PhasePoint& z) {
    const std::size_t d = z.q.size();
    divergent_ = false;
    n_leapfrog_ = 0;
    sum_metro_prob_ = 0.0;

    for (std::size_t i = 0; i < d; ++i) z.p[i] = rng_.normal() / std::sqrt(inv_metric[i]);
    const double H0 = hamiltonian(z, inv_metric);

    PhasePoint z_fwd = z, z_bck = z, z_sample = z, z_propose = z;
    std::vector<double> p_fwd_fwd = z.p, p_fwd_bck = z.p, p_bck_fwd = z.p, p_bck_bck = z.p;
    std::vector<double> ps = sharp(z.p);
    std::vector<double> ps_fwd_fwd = ps, ps_fwd_bck = ps, ps_bck_fwd = ps, ps_bck_bck = ps;
    std::vector<double> rho = z.p;
    double log_sum_weight = 0.0;
    int depth = 0;

    while (depth < max_depth_) {
      std::vector<double> rho_fwd(d, 0.0), rho_bck(d, 0.0);
      bool valid_subtree;
      double log_sum_weight_subtree = special::kNegInf;

      if (rng_.uniform() > 0.5) {
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        ps_bck_fwd = ps_fwd_bck;
        PhasePoint& zt = z_fwd;
        valid_subtree = build_tree(depth, zt, z_propose, ps_fwd_bck, ps_fwd_fwd, rho_fwd, p_fwd_bck,
                                   p_fwd_fwd, H0, 1.0, log_sum_weight_subtree);
      } else {
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        ps_fwd_bck = ps_bck_fwd;
        PhasePoint& zt = z_bck;
        valid_subtree = build_tree(depth, zt, z_propose, ps_bck_fwd, ps_bck_bck, rho_bck, p_bck_fwd,
                                   p_bck_bck, H0, -1.0, log_sum_weight_subtree);
      }
      if (!valid_subtree) break;
      ++depth;

      if (log_sum_weight_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else if (rng_.uniform() < std::exp(log_sum_weight_subtree - log_sum_weight)) {
        z_sample = z_propose;
      }
      log_sum_weight = special::log_sum_exp(log_sum_weight, log_sum_weight_subtree);

      for (std::size_t i = 0; i < d; ++i) rho[i] = rho_bck[i] + rho_fwd[i];
      bool persist = criterion(ps_bck_bck, ps_fwd_fwd, rho);
      std::vector<double> rho_ext(d);
      for (std::size_t i = 0; i < d; ++i) rho_ext[i] = rho_bck[i] + p_fwd_bck[i];
      persist = persist && criterion(ps_bck_bck, ps_fwd_bck, rho_ext);
      for (std::size_t i = 0; i < d; ++i) rho_ext[i] = rho_fwd[i] + p_bck_fwd[i];
      persist = persist && criterion(ps_bck_fwd, ps_fwd_fwd, rho_ext);
      if (!persist) break;
    }

    Transition t;
    t.depth = depth;
    t.n_leapfrog = n_leapfrog_;
    t.divergent = divergent_;
    t.accept_stat = n_leapfrog_ > 0 ? sum_metro_prob_ / n_leapfrog_ : 0.0;
    z = z_sample;
    t.energy = hamiltonian(z, inv_metric);
    return t;
  }

  /// Heuristic initial step size: doubles/halves until a single leapfrog
  /// step's acceptance probability crosses 0.8.
  void init_step_size(const PhasePoint& z0) {
    const std::size_t d = z0.q.size();
    PhasePoint z = z0;
    auto trial = [&] {
      z = z0;
      for (std::size_t i = 0; i < d; ++i) z.p[i] = rng_.normal() / std::sqrt(inv_metric[i]);
      const double h0 = hamiltonian(z, inv_metric);
      leapfrog(model_, z, inv_metric, step_size);
      const double dh = h0 - hamiltonian(z, inv_metric);
      return std::isnan(dh) ? special::kNegInf : dh;
    };
    double delta_h = trial();
    const int direction = delta_h > std::log(0.8) ? 1 : -1;
    for (int iter = 0; iter < 100; ++iter) {
      delta_h = trial();
      if (direction == 1 && !(delta_h > std::log(0.8))) break;
      if (direction == -1 && !(delta_h < std::log(0.8))) break;
      step_size = direction == 1 ? 2.0 * step_size : 0.5 * step_size;
      if (step_size > 1e7) throw SamplerError("step size diverged to infinity; posterior is improper?");
      if (step_size == 0.0) throw SamplerError("step size collapsed to zero");
    }
  }

 private:
  std::vector<double> sharp(std::span<const double> p) const {
    std::vector<double> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = inv_metric[i] * p[i];
    return out;
  }

  static bool criterion(std::span<const double> ps_minus, std::span<const double> ps_plus,
                        std::span<const double> rho) {
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
      a += ps_plus[i] * rho[i];
      b += ps_minus[i] * rho[i];
    }
    return a > 0.0 && b > 0.0;
  }

  bool build_tree(int depth, PhasePoint& z, PhasePoint& z_propose, std::vector<double>& ps_beg,
                  std::vector<double>& ps_end, std::vector<double>& rho, std::vector<double>& p_beg,
                  std::vector<double>& p_end, double H0, double sign, double& log_sum_weight) {
    const std::size_t d = z.q.size();
    if (depth == 0) {
      leapfrog(model_, z, inv_metric, sign * step_size);
      ++n_leapfrog_;
      const double h = hamiltonian(z, inv_metric);
      if (h - H0 > max_delta_h_) divergent_ = true;
      log_sum_weight = special::log_sum_exp(log_sum_weight, H0 - h);
      sum_metro_prob_ += H0 - h > 0.0 ? 1.0 : std::exp(H0 - h);
      z_propose = z;
      ps_beg = sharp(z.p);
      ps_end = ps_beg;
      for (std::size_t i = 0; i < d; ++i) rho[i] += z.p[i];
      p_beg = z.p;
      p_end = p_beg;
      return !divergent_;
    }

    std::vector<double> ps_init_end(d), p_init_end(d), rho_init(d, 0.0);
    double lsw_init = special::kNegInf;
    if (!build_tree(depth - 1, z, z_propose, ps_beg, ps_init_end, rho_init, p_beg, p_init_end, H0,
                    sign, lsw_init))
      return false;

    PhasePoint z_propose_final = z;
    std::vector<double> rho_final(d, 0.0), p_final_beg(d), ps_final_beg(d);
    double lsw_final = special::kNegInf;
    if (!build_tree(depth - 1, z, z_propose_final, ps_final_beg, ps_end, rho_final, p_final_beg,
                    p_end, H0, sign, lsw_final))
      return false;

    const double lsw_subtree = special::log_sum_exp(lsw_init, lsw_final);
    log_sum_weight = special::log_sum_exp(log_sum_weight, lsw_subtree);
    if (lsw_final > lsw_subtree) {
      z_propose = z_propose_final;
    } else if (rng_.uniform() < std::exp(lsw_final - lsw_subtree)) {
      z_propose = z_propose_final;
    }

    std::vector<double> rho_subtree(d);
    for (std::size_t i = 0; i < d; ++i) {
      rho_subtree[i] = rho_init[i] + rho_final[i];
      rho[i] += rho_subtree[i];
    }
    bool persist = criterion(ps_beg, ps_end, rho_subtree);
    std::vector<double> rho_ext(d);
    for (std::size_t i = 0; i < d; ++i) rho_ext[i] = rho_init[i] + p_final_beg[i];
    persist = persist && criterion(ps_beg, ps_final_beg, rho_ext);
    for (std::size_t i = 0; i < d; ++i) rho_ext[i] = rho_final[i] + p_init_end[i];
    persist = persist && criterion(ps_init_end, ps_end, rho_ext);
    return persist;
  }

  const Model& model_;
  Rng& rng_;
  int max_depth_;
  double max_delta_h_;
  bool divergent_ = false;
  int n_leapfrog_ = 0;
  double sum_metro_prob_ = 0.0;
};

/// Uniform jitter in [-radius, radius]^dim from the chain's own substream.
inline std::vector<double> initialize_chain(Rng& rng, std::size_t dim, double radius = 2.0) {
  std::vector<double> q(dim);
  for (auto& v : q) v = rng.uniform(-radius, radius);
  return q;
}

inline std::vector<double> initialize_chain(std::uint64_t seed, std::uint64_t chain,
                                            std::size_t dim, double radius = 2.0) {
  Rng rng = Rng::substream(seed, chain);
  return initialize_chain(rng, dim, radius);
}

namespace detail {

template <LogDensity Model>
PhasePoint find_initial_point(const Model& model, Rng& rng, double radius) {
  const std::size_t d = model.dimension();
  PhasePoint z;
  z.p.assign(d, 0.0);
  z.grad.assign(d, 0.0);
  for (int attempt = 0; attempt < 100; ++attempt) {
    z.q = initialize_chain(rng, d, radius);
    z.log_density = model.log_density(z.q, z.grad);
    bool ok = std::isfinite(z.log_density);
    for (double g : z.grad) ok = ok && std::isfinite(g);
    if (ok) return z;
  }
  throw SamplerError("no finite initial point after 100 jittered attempts");
}

template <LogDensity Model>
Chain run_nuts_chain(const Model& model, const SamplerConfig& cfg, int chain_index) {
  Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(chain_index));
  const std::size_t d = model.dimension();
  PhasePoint z = find_initial_point(model, rng, cfg.init_radius);

  NutsKernel<Model> kernel(model, rng, cfg.max_tree_depth, cfg.max_energy_error);
  kernel.inv_metric.assign(d, 1.0);
  kernel.step_size = 1.0;
  kernel.init_step_size(z);

  DualAveraging da(cfg.target_accept);
  da.set_mu(std::log(10.0 * kernel.step_size));
  WarmupSchedule schedule(cfg.warmup);
  VarianceEstimator var_est(d);

  Chain out;
  int warmup_divergent = 0;
  for (int it = 0; it < cfg.warmup; ++it) {
    const auto t = kernel.transition(z);
    if (t.divergent) ++warmup_divergent;
    kernel.step_size = da.learn(t.accept_stat);
    if (schedule.in_window(it)) var_est.add(z.q);
    if (schedule.closes_window(it)) {
      schedule.advance(it);
      auto var = var_est.variance();
      const double n = static_cast<double>(var_est.count());
      for (double& v : var) v = (n / (n + 5.0)) * v + 1e-3 * (5.0 / (n + 5.0));
      kernel.inv_metric = std::move(var);
      var_est.restart();
      kernel.init_step_size(z);
      da.set_mu(std::log(10.0 * kernel.step_size));
      da.restart();
    }
  }
  if (cfg.warmup > 0) {
    if (warmup_divergent == cfg.warmup)
      throw SamplerError("chain " + std::to_string(chain_index) +
                         ": every warmup iteration diverged; target is likely ill-posed");
    kernel.step_size = da.final_step_size();
  }
  out.warmup_divergences = warmup_divergent;

  out.draws = DrawMatrix(static_cast<std::size_t>(cfg.draws), d);
  out.accept_stat.reserve(cfg.draws);
  for (int it = 0; it < cfg.draws; ++it) {
    const auto t = kernel.transition(z);
    std::copy(z.q.begin(), z.q.end(), out.draws.row(it).begin());
    out.accept_stat.push_back(t.accept_stat);
    out.tree_depth.push_back(t.depth);
    out.n_leapfrog.push_back(t.n_leapfrog);
    out.divergent.push_back(t.divergent ? 1 : 0);
    out.energy.push_back(t.energy);
    if (t.divergent) ++out.divergence_count;
  }
  out.step_size_final = kernel.step_size;
  out.mass_diag = kernel.inv_metric;
  return out;
}

template <LogDensity Model>
Chain run_rwm_chain(const Model& model, const SamplerConfig& cfg, int chain_index) {
  Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(chain_index));
  const std::size_t d = model.dimension();
  PhasePoint z = find_initial_point(model, rng, cfg.init_radius);
  std::vector<double> grad(d), proposal(d);
  std::vector<double> scale_diag(d, 1.0);
  double log_scale = std::log(2.38 / std::sqrt(static_cast<double>(d)));
  constexpr double kTarget = 0.234;

  WarmupSchedule schedule(cfg.warmup);
  VarianceEstimator var_est(d);

  auto step = [&](bool& accepted) {
    const double s = std::exp(log_scale);
    for (std::size_t i = 0; i < d; ++i) proposal[i] = z.q[i] + s * std::sqrt(scale_diag[i]) * rng.normal();
    double lp = model.log_density(proposal, grad);
    if (std::isnan(lp)) lp = special::kNegInf;
    const double log_ratio = lp - z.log_density;
    const double accept = std::isfinite(lp) ? std::min(1.0, std::exp(log_ratio)) : 0.0;
    accepted = rng.uniform() < accept;
    if (accepted) {
      z.q = proposal;
      z.log_density = lp;
    }
    return accept;
  };

  bool accepted = false;
  for (int it = 0; it < cfg.warmup; ++it) {
    const double a = step(accepted);
    log_scale += (a - kTarget) / std::pow(static_cast<double>(it + 1), 0.6);
    if (schedule.in_window(it)) var_est.add(z.q);
    if (schedule.closes_window(it)) {
      schedule.advance(it);
      auto var = var_est.variance();
      const double n = static_cast<double>(var_est.count());
      for (double& v : var) v = (n / (n + 5.0)) * v + 1e-3 * (5.0 / (n + 5.0));
      scale_diag = std::move(var);
      var_est.restart();
    }
  }

  Chain out;
  out.draws = DrawMatrix(static_cast<std::size_t>(cfg.draws), d);
  for (int it = 0; it < cfg.draws; ++it) {
    const double a = step(accepted);
    std::copy(z.q.begin(), z.q.end(), out.draws.row(it).begin());
    out.accept_stat.push_back(a);
    out.tree_depth.push_back(0);
    out.n_leapfrog.push_back(0);
    out.divergent.push_back(0);
    out.energy.push_back(-z.log_density);
  }
  out.step_size_final = std::exp(log_scale);
  out.mass_diag = scale_diag;
  return out;
}

template <typename ChainFn>
Posterior run_chains(const SamplerConfig& cfg, std::size_t dim, std::vector<std::string> names,
                     ChainFn&& fn) {
  cfg.validate();
  if (names.empty())
    for (std::size_t i = 0; i < dim; ++i) names.push_back("x[" + std::to_string(i) + "]");
  if (names.size() != dim) throw std::invalid_argument("parameter name count != dimension");
  Posterior post;
  post.param_names = std::move(names);
  post.chains.resize(static_cast<std::size_t>(cfg.chains));
  parallel_for(cfg.chains, resolve_threads(cfg.threads, cfg.chains),
               [&](int c) { post.chains[static_cast<std::size_t>(c)] = fn(c); });
  return post;
}

}  // namespace detail

/**
 * Runs `config.chains` NUTS chains, each on its own RNG substream, possibly
 * concurrently. Output is ordered by chain index and depends only on
 * (model, config), not on the thread count.
 */
template <LogDensity Model>
Posterior nuts_sample(const Model& model, const SamplerConfig& config,
                      std::vector<std::string> param_names = {}) {
  return detail::run_chains(config, model.dimension(), std::move(param_names),
                            [&](int c) { return detail::run_nuts_chain(model, config, c); });
}

/// Random-walk Metropolis with a diagonal Gaussian proposal whose scale is
/// tuned during warmup toward 0.234 acceptance. Same output layout as NUTS.
template <LogDensity Model>
Posterior rw_metropolis(const Model& model, const SamplerConfig& config,
                        std::vector<std::string> param_names = {}) {
  return detail::run_chains(config, model.dimension(), std::move(param_names),
                            [&](int c) { return detail::run_rwm_chain(model, config, c); });
}

}  // namespace layout_infer

#endif  // LAYOUT_INFER_SAMPLER_HPP
