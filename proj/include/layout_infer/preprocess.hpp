#ifndef LAYOUT_INFER_PREPROCESS_HPP
#define LAYOUT_INFER_PREPROCESS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "layout_infer/data_ingest.hpp"
#include "layout_infer/rng.hpp"

namespace layout_infer {

struct BlockedScore {
  std::string submission_id;
  std::string scenario_id;
  int block_index = 0;
  double mean_score = 0.0;

  bool operator==(const BlockedScore&) const = default;
};

/**
 * Averages consecutive episodes in blocks of `block_size`.
 *
 * Records are grouped by (submission, scenario) and ordered by episode
 * index inside each group; block b averages the b-th run of `block_size`
 * episodes. Output is ordered by submission, then scenario, then block.
 */
inline std::vector<BlockedScore> bin_episodes(const std::vector<RawScoreRecord>& records,
                                              int block_size = 5) {
  if (block_size < 1) throw DataError("block_size must be >= 1");
  std::map<std::pair<std::string, std::string>, std::vector<std::pair<long long, double>>> groups;
  for (const auto& r : records)
    groups[{r.submission_id, r.scenario_id}].emplace_back(r.episode_index, r.score);

  std::vector<BlockedScore> out;
  for (auto& [key, episodes] : groups) {
    if (episodes.size() % static_cast<std::size_t>(block_size) != 0) {
      throw DataError("submission '" + key.first + "', scenario '" + key.second + "': " +
                      std::to_string(episodes.size()) +
                      " episodes is not divisible by block size " + std::to_string(block_size));
    }
    std::sort(episodes.begin(), episodes.end());
    const std::size_t blocks = episodes.size() / static_cast<std::size_t>(block_size);
    for (std::size_t b = 0; b < blocks; ++b) {
      double sum = 0.0;
      for (int k = 0; k < block_size; ++k) sum += episodes[b * block_size + k].second;
      out.push_back({key.first, key.second, static_cast<int>(b), sum / block_size});
    }
  }
  return out;
}

/// Affine map sending min to 0 and max to 1.
inline std::vector<double> minmax_normalize(const std::vector<double>& values) {
  if (values.empty()) throw DataError("minmax_normalize: empty input");
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo, max = *hi;
  if (!(max > min)) throw DataError("minmax_normalize: constant input has no scale");
  std::vector<double> out;
  out.reserve(values.size());
  const double range = max - min;
  for (double v : values) out.push_back(std::clamp((v - min) / range, 0.0, 1.0));
  return out;
}

template <typename T>
struct SplitDataset {
  std::vector<T> train;
  std::vector<T> test;
  std::uint64_t seed = 0;
};

/// round-half-up(ratio * n)
inline std::size_t train_size(std::size_t n, double ratio) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 0.5 + 1e-9));
}

/**
 * Uniform random train/test split. Membership is drawn from a seeded
 * Fisher-Yates permutation; both halves keep the input's relative order.
 */
template <typename T>
SplitDataset<T> split_train_test(const std::vector<T>& instances, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw DataError("split ratio must lie in (0, 1)");
  const std::size_t n = instances.size();
  if (n < 2) throw DataError("split needs at least 2 instances");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);

  const std::size_t n_train = train_size(n, ratio);
  std::vector<std::uint8_t> in_train(n, 0);
  for (std::size_t k = 0; k < n_train; ++k) in_train[perm[k]] = 1;

  SplitDataset<T> out;
  out.seed = seed;
  out.train.reserve(n_train);
  out.test.reserve(n - n_train);
  for (std::size_t i = 0; i < n; ++i) (in_train[i] ? out.train : out.test).push_back(instances[i]);
  return out;
}

struct DemandSelection {
  /// Groups of demands with identical 0/1 patterns; members sorted, groups
  /// ordered by first member. Singletons included.
  std::vector<std::vector<std::string>> duplicate_groups;
  /// One representative per group, lexicographic order.
  std::vector<std::string> representatives;
  std::map<std::string, double> correlations;
  std::vector<std::string> retained;
  Warnings warnings;
};

namespace detail {

/// Groups with a documented preferred representative.
inline const std::vector<std::pair<std::set<std::string>, std::string>>& named_representatives() {
  static const std::vector<std::pair<std::set<std::string>, std::string>> table = {
      {{"partner_choice", "time_pressure", "ostracism"}, "time_pressure"},
      {{"teaching", "sanctioning"}, "teaching"},
  };
  return table;
}

inline std::string representative_of(const std::vector<std::string>& group) {
  const std::set<std::string> members(group.begin(), group.end());
  for (const auto& [known, rep] : named_representatives())
    if (known == members) return rep;
  return *std::min_element(group.begin(), group.end());
}

}  // namespace detail

/// Groups demand columns by exact equality of their pattern across scenarios.
inline DemandSelection dedup_demands(const DemandTable& table) {
  if (table.flags.empty() || table.demand_names.empty())
    throw DataError("dedup_demands: empty demand table");
  std::map<std::vector<std::uint8_t>, std::vector<std::string>> by_pattern;
  for (const auto& name : table.demand_names) by_pattern[table.column(name)].push_back(name);

  DemandSelection sel;
  for (auto& [pattern, names] : by_pattern) {
    std::sort(names.begin(), names.end());
    sel.duplicate_groups.push_back(names);
  }
  std::sort(sel.duplicate_groups.begin(), sel.duplicate_groups.end());
  for (const auto& g : sel.duplicate_groups) sel.representatives.push_back(detail::representative_of(g));
  std::sort(sel.representatives.begin(), sel.representatives.end());
  return sel;
}

/// Pearson correlation coefficient.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DataError("correlation: length mismatch");
  if (x.size() < 3) throw DataError("correlation: need at least 3 observations");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DataError("correlation undefined for constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double correlate_with_score(const std::vector<std::uint8_t>& column,
                                   const std::vector<double>& scores) {
  return pearson(std::vector<double>(column.begin(), column.end()), scores);
}

/// Deduplicated demands with strictly negative correlation, lexicographic.
inline std::vector<std::string> select_negative_demands(DemandSelection& selection) {
  selection.retained.clear();
  for (const auto& name : selection.representatives) {
    auto it = selection.correlations.find(name);
    if (it != selection.correlations.end() && it->second < 0.0) selection.retained.push_back(name);
  }
  if (selection.retained.empty())
    selection.warnings.push_back("no demand is negatively correlated with score; nothing retained");
  return selection.retained;
}

/**
 * Pairwise Pearson correlations among `columns` (rows = observations).
 * Unit diagonal; entries involving a constant column are NaN.
 */
inline std::vector<std::vector<double>> correlation_matrix(
    const std::vector<std::vector<double>>& columns) {
  const std::size_t k = columns.size();
  std::vector<std::vector<double>> m(k, std::vector<double>(k, 0.0));
  for (std::size_t a = 0; a < k; ++a) {
    m[a][a] = 1.0;
    for (std::size_t b = a + 1; b < k; ++b) {
      double r;
      try {
        r = pearson(columns[a], columns[b]);
      } catch (const DataError&) {
        r = std::numeric_limits<double>::quiet_NaN();
      }
      m[a][b] = m[b][a] = r;
    }
  }
  return m;
}

enum class Normalization { global, per_submission, none };

/// One model-ready row: a (scenario, block) score with its demand vector.
struct PreparedRow {
  std::string submission_id;
  std::string scenario_id;
  int block_index = 0;
  double score = 0.0;
  std::vector<std::uint8_t> delta;  // one entry per Dataset::demand_names

  bool operator==(const PreparedRow&) const = default;
};

/// Bins, normalizes and attaches full demand vectors.
inline std::vector<PreparedRow> prepare_rows(const Dataset& ds, int block_size,
                                             Normalization mode) {
  auto blocks = bin_episodes(ds.records, block_size);
  std::vector<double> values;
  values.reserve(blocks.size());
  for (const auto& b : blocks) values.push_back(b.mean_score);

  if (mode == Normalization::global) {
    values = minmax_normalize(values);
  } else if (mode == Normalization::per_submission) {
    std::map<std::string, std::vector<std::size_t>> idx;
    for (std::size_t i = 0; i < blocks.size(); ++i) idx[blocks[i].submission_id].push_back(i);
    for (const auto& [sub, ids] : idx) {
      std::vector<double> v;
      for (auto i : ids) v.push_back(values[i]);
      v = minmax_normalize(v);
      for (std::size_t k = 0; k < ids.size(); ++k) values[ids[k]] = v[k];
    }
  }

  std::vector<PreparedRow> rows;
  rows.reserve(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    rows.push_back({blocks[i].submission_id, blocks[i].scenario_id, blocks[i].block_index,
                    values[i], ds.demands.flags.at(blocks[i].scenario_id)});
  }
  return rows;
}

/// Submissions observed for the largest number of blocks per scenario.
inline std::set<std::string> top_submissions(const std::vector<PreparedRow>& rows) {
  std::map<std::pair<std::string, std::string>, int> blocks;
  for (const auto& r : rows) blocks[{r.submission_id, r.scenario_id}] += 1;
  std::map<std::string, int> per_sub;
  for (const auto& [key, n] : blocks) per_sub[key.first] = std::max(per_sub[key.first], n);
  int best = 0;
  for (const auto& [s, n] : per_sub) best = std::max(best, n);
  std::set<std::string> out;
  for (const auto& [s, n] : per_sub)
    if (n == best) out.insert(s);
  return out;
}

/**
 * Full demand selection: dedup on the scenario table, correlations of each
 * representative with the pooled scores of the top submissions, then
 * strict-negativity filtering.
 */
inline DemandSelection select_demands(const Dataset& ds, const std::vector<PreparedRow>& rows) {
  DemandSelection sel = dedup_demands(ds.demands);
  const auto top = top_submissions(rows);
  std::vector<double> scores;
  std::vector<const PreparedRow*> used;
  for (const auto& r : rows)
    if (top.contains(r.submission_id)) {
      scores.push_back(r.score);
      used.push_back(&r);
    }
  for (const auto& name : sel.representatives) {
    const std::size_t j = ds.demands.index_of(name);
    std::vector<std::uint8_t> col;
    col.reserve(used.size());
    for (const auto* r : used) col.push_back(r->delta[j]);
    try {
      sel.correlations[name] = correlate_with_score(col, scores);
    } catch (const DataError& e) {
      sel.warnings.push_back("demand '" + name + "': " + e.what() + "; excluded");
    }
  }
  select_negative_demands(sel);
  return sel;
}

}  // namespace layout_infer

#endif  // LAYOUT_INFER_PREPROCESS_HPP
