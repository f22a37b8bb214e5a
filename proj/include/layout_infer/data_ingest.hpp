#ifndef LAYOUT_INFER_DATA_INGEST_HPP
#define LAYOUT_INFER_DATA_INGEST_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "layout_infer/csv.hpp"

namespace layout_infer {

struct RawScoreRecord {
  std::string submission_id;
  std::string scenario_id;
  long long episode_index = 0;
  double score = 0.0;

  bool operator==(const RawScoreRecord&) const = default;
};

/// Binary demand annotations per scenario. Every row carries one flag per
/// entry of `demand_names`, in that order.
struct DemandTable {
  std::vector<std::string> demand_names;
  std::map<std::string, std::vector<std::uint8_t>> flags;

  std::size_t index_of(const std::string& name) const {
    auto it = std::find(demand_names.begin(), demand_names.end(), name);
    if (it == demand_names.end()) throw DataError("unknown demand '" + name + "'");
    return static_cast<std::size_t>(it - demand_names.begin());
  }

  /// Column of one demand across scenarios, in scenario-id order.
  std::vector<std::uint8_t> column(const std::string& name) const {
    const std::size_t j = index_of(name);
    std::vector<std::uint8_t> out;
    out.reserve(flags.size());
    for (const auto& [scenario, row] : flags) out.push_back(row[j]);
    return out;
  }

  bool operator==(const DemandTable&) const = default;
};

struct Dataset {
  std::vector<RawScoreRecord> records;
  DemandTable demands;
  std::vector<std::string> demand_names;

  bool operator==(const Dataset&) const = default;
};

using Warnings = std::vector<std::string>;

inline const std::vector<std::string>& score_columns() {
  static const std::vector<std::string> cols = {"submission_id", "scenario_id",
                                                "episode_index", "score"};
  return cols;
}

inline std::vector<RawScoreRecord> parse_scores(const csv::Table& table, const std::string& source,
                                                Warnings* warnings = nullptr) {
  std::size_t idx[4];
  for (std::size_t c = 0; c < 4; ++c) {
    auto pos = table.column(score_columns()[c]);
    if (!pos) throw DataError(source + ": missing column '" + score_columns()[c] + "'");
    idx[c] = *pos;
  }
  if (warnings) {
    for (const auto& h : table.header)
      if (std::find(score_columns().begin(), score_columns().end(), h) == score_columns().end())
        warnings->push_back(source + ": ignoring unknown column '" + h + "'");
  }

  std::vector<RawScoreRecord> out;
  out.reserve(table.rows.size());
  std::set<std::tuple<std::string, std::string, long long>> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = source + ":" + std::to_string(table.line_numbers[r]);
    RawScoreRecord rec;
    rec.submission_id = row[idx[0]];
    rec.scenario_id = row[idx[1]];
    if (rec.submission_id.empty() || rec.scenario_id.empty())
      throw DataError(where + ": empty submission_id or scenario_id");
    auto ep = csv::to_int(row[idx[2]]);
    if (!ep || *ep < 0)
      throw DataError(where + ": episode_index '" + row[idx[2]] + "' is not a non-negative integer");
    rec.episode_index = *ep;
    auto sc = csv::to_double(row[idx[3]]);
    if (!sc || !std::isfinite(*sc))
      throw DataError(where + ": score '" + row[idx[3]] + "' is not a finite number");
    rec.score = *sc;
    if (!seen.emplace(rec.submission_id, rec.scenario_id, rec.episode_index).second) {
      throw DataError(where + ": duplicate (submission, scenario, episode) = (" + rec.submission_id +
                      ", " + rec.scenario_id + ", " + std::to_string(rec.episode_index) + ")");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

/// Reads `submission_id,scenario_id,episode_index,score`; row order is kept.
inline std::vector<RawScoreRecord> load_scores(const std::string& path,
                                               Warnings* warnings = nullptr) {
  return parse_scores(csv::read_file(path), path, warnings);
}

inline DemandTable parse_demands(const csv::Table& table, const std::string& source,
                                 Warnings* warnings = nullptr) {
  auto sid = table.column("scenario_id");
  if (!sid) throw DataError(source + ": missing column 'scenario_id'");
  DemandTable out;
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == *sid) continue;
    const std::string& name = table.header[c];
    if (name.empty()) throw DataError(source + ": empty demand name in header");
    if (std::find(out.demand_names.begin(), out.demand_names.end(), name) !=
        out.demand_names.end())
      throw DataError(source + ": duplicate demand column '" + name + "'");
    out.demand_names.push_back(name);
    cols.push_back(c);
  }
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = source + ":" + std::to_string(table.line_numbers[r]);
    const std::string& scenario = row[*sid];
    if (scenario.empty()) throw DataError(where + ": empty scenario_id");
    std::vector<std::uint8_t> flags;
    flags.reserve(cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const std::string& cell = row[cols[k]];
      if (cell == "0") {
        flags.push_back(0);
      } else if (cell == "1") {
        flags.push_back(1);
      } else {
        throw DataError(where + ": demand '" + out.demand_names[k] + "' has non-binary value '" +
                        cell + "'");
      }
    }
    if (!out.flags.emplace(scenario, std::move(flags)).second)
      throw DataError(where + ": duplicate scenario_id '" + scenario + "'");
  }
  if (warnings) {
    for (std::size_t k = 0; k < out.demand_names.size(); ++k) {
      bool any = false;
      for (const auto& [s, row] : out.flags) any = any || row[k] != 0;
      if (!any) warnings->push_back(source + ": demand '" + out.demand_names[k] + "' is never present");
    }
  }
  return out;
}

inline DemandTable load_demands(const std::string& path, Warnings* warnings = nullptr) {
  return parse_demands(csv::read_file(path), path, warnings);
}

/// Checks referential integrity and fixes the demand order lexicographically.
inline Dataset validate_join(std::vector<RawScoreRecord> records, const DemandTable& demands) {
  if (records.empty()) throw DataError("no score records");
  if (demands.flags.empty()) throw DataError("no demand rows");
  for (const auto& rec : records) {
    if (!demands.flags.contains(rec.scenario_id))
      throw DataError("scenario '" + rec.scenario_id + "' (submission '" + rec.submission_id +
                      "') has scores but no demand annotation");
  }
  Dataset ds;
  ds.demand_names = demands.demand_names;
  std::sort(ds.demand_names.begin(), ds.demand_names.end());
  ds.demands.demand_names = ds.demand_names;
  std::vector<std::size_t> perm;
  for (const auto& n : ds.demand_names) perm.push_back(demands.index_of(n));
  for (const auto& [scenario, row] : demands.flags) {
    std::vector<std::uint8_t> sorted;
    sorted.reserve(perm.size());
    for (std::size_t p : perm) sorted.push_back(row[p]);
    ds.demands.flags.emplace(scenario, std::move(sorted));
  }
  ds.records = std::move(records);
  return ds;
}

inline void write_scores(std::ostream& out, const std::vector<RawScoreRecord>& records) {
  out << "submission_id,scenario_id,episode_index,score\n";
  for (const auto& r : records)
    out << r.submission_id << ',' << r.scenario_id << ',' << r.episode_index << ','
        << csv::format_double(r.score) << '\n';
}

inline void write_demands(std::ostream& out, const DemandTable& table) {
  out << "scenario_id";
  for (const auto& n : table.demand_names) out << ',' << n;
  out << '\n';
  for (const auto& [scenario, row] : table.flags) {
    out << scenario;
    for (auto f : row) out << ',' << static_cast<int>(f);
    out << '\n';
  }
}

inline void save_dataset(const Dataset& ds, const std::string& scores_path,
                         const std::string& demands_path) {
  std::ofstream s(scores_path, std::ios::binary);
  std::ofstream d(demands_path, std::ios::binary);
  if (!s || !d) throw DataError("cannot write dataset files");
  write_scores(s, ds.records);
  write_demands(d, ds.demands);
}

inline Dataset load_dataset(const std::string& scores_path, const std::string& demands_path,
                            Warnings* warnings = nullptr) {
  return validate_join(load_scores(scores_path, warnings), load_demands(demands_path, warnings));
}

}  // namespace layout_infer

#endif  // LAYOUT_INFER_DATA_INGEST_HPP
