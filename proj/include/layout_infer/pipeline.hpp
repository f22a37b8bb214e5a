#ifndef LAYOUT_INFER_PIPELINE_HPP
#define LAYOUT_INFER_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "layout_infer/data_ingest.hpp"
#include "layout_infer/diagnostics.hpp"
#include "layout_infer/fit.hpp"
#include "layout_infer/predict_assess.hpp"
#include "layout_infer/preprocess.hpp"
#include "layout_infer/synthetic.hpp"

namespace layout_infer {

inline constexpr const char* kVersion = "0.1.0";

/// Process exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitUsage = 2, kExitWarning = 3 };

class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DemandFilter { negative, all };

struct SynthOptions {
  int n_demands = 7;
  int n_scenarios = 51;
  int n_blocks = 16;
  double density = 0.3;
  double rho = 0.9;
  double nu = 10.0;
  std::string submission = "synthetic";
};

struct RunConfig {
  std::filesystem::path scores;
  std::filesystem::path demands;
  std::filesystem::path out = "out";
  int block_size = 5;
  double split_ratio = 0.8;
  std::uint64_t seed = 0;
  double epsilon = 1e-4;
  double hdi_mass = 0.94;
  Normalization normalization = Normalization::global;
  DemandFilter demand_filter = DemandFilter::negative;
  std::optional<std::string> submission;
  SamplerConfig sampler;
  SynthOptions synth;

  void validate() const {
    sampler.validate();
    if (block_size < 1) throw std::invalid_argument("--block-size must be >= 1");
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw std::invalid_argument("--split-ratio must lie in (0, 1)");
    if (!(epsilon > 0.0 && epsilon <= 0.01)) throw std::invalid_argument("--epsilon must lie in (0, 0.01]");
    if (!(hdi_mass > 0.0 && hdi_mass <= 1.0)) throw std::invalid_argument("--hdi-mass must lie in (0, 1]");
    if (synth.n_demands < 1 || synth.n_scenarios < 1 || synth.n_blocks < 1)
      throw std::invalid_argument("synth sizes must be >= 1");
  }
};

inline std::string to_string(Normalization n) {
  switch (n) {
    case Normalization::global: return "global";
    case Normalization::per_submission: return "per-submission";
    case Normalization::none: return "none";
  }
  return "?";
}

inline std::string to_string(DemandFilter f) { return f == DemandFilter::negative ? "negative" : "all"; }

namespace pipeline_detail {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw PipelineError("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string file_hash(const fs::path& p) { return hex(fnv1a(read_text(p))); }

inline void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw PipelineError("cannot write " + p.string());
  out << text;
}

inline void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

inline json read_json(const fs::path& p) {
  try {
    return json::parse(read_text(p));
  } catch (const json::exception& e) {
    throw PipelineError("malformed JSON in " + p.string() + ": " + e.what());
  }
}

inline fs::path stage_dir(const RunConfig& c, const std::string& stage) { return c.out / stage; }

/// Fails with the command to run when an upstream artifact is missing.
inline void require(const fs::path& p, const std::string& command) {
  if (!fs::exists(p))
    throw PipelineError("missing " + p.string() + "; run `layout_infer " + command + "` first");
}

inline json sampler_json(const SamplerConfig& s) {
  return {{"chains", s.chains},        {"draws", s.draws},
          {"warmup", s.warmup},        {"target_accept", s.target_accept},
          {"max_tree_depth", s.max_tree_depth}, {"seed", s.seed}};
}

/// Manifest: inputs and outputs hashed, config, version. No timestamps so
/// reruns are byte-identical.
inline void write_manifest(const fs::path& dir, const std::string& command, const json& config,
                           const std::vector<fs::path>& inputs, const std::vector<std::string>& outputs) {
  json in = json::object(), out = json::object();
  for (const auto& p : inputs) in[p.generic_string()] = file_hash(p);
  for (const auto& name : outputs) out[name] = file_hash(dir / name);
  write_json(dir / "manifest.json", {{"command", command},
                                     {"version", kVersion},
                                     {"config", config},
                                     {"inputs", in},
                                     {"outputs", out}});
}

inline void check_id(const std::string& id) {
  if (id.empty() || id == "." || id == ".." || id.find_first_of("/\\") != std::string::npos)
    throw PipelineError("submission id '" + id + "' cannot be used as a directory name");
}

/// One model-ready row of preprocessed.csv.
struct Row {
  std::string submission;
  std::string scenario;
  int block = 0;
  double score = 0.0;
  bool train = false;
  std::vector<std::uint8_t> delta;
};

struct Prepared {
  std::vector<std::string> demand_names;
  std::vector<Row> rows;

  std::vector<std::string> submissions() const {
    std::vector<std::string> out;
    for (const auto& r : rows)
      if (out.empty() || out.back() != r.submission) out.push_back(r.submission);
    return out;
  }
  std::vector<Instance> instances(const std::string& sub, bool train) const {
    std::vector<Instance> out;
    for (const auto& r : rows)
      if (r.submission == sub && r.train == train) out.push_back({r.delta, r.score});
    return out;
  }
  std::vector<const Row*> test_rows(const std::string& sub) const {
    std::vector<const Row*> out;
    for (const auto& r : rows)
      if (r.submission == sub && !r.train) out.push_back(&r);
    return out;
  }
};

inline Prepared load_prepared(const fs::path& path) {
  const auto table = csv::read_file(path.string());
  const std::vector<std::string> fixed = {"submission_id", "scenario_id", "block_index", "score", "split"};
  if (table.header.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), table.header.begin()))
    throw PipelineError(path.string() + ": unexpected header");
  Prepared p;
  p.demand_names.assign(table.header.begin() + fixed.size(), table.header.end());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& c = table.rows[i];
    Row r;
    r.submission = c[0];
    r.scenario = c[1];
    const auto block = csv::to_int(c[2]);
    const auto score = csv::to_double(c[3]);
    if (!block || !score || (c[4] != "train" && c[4] != "test"))
      throw PipelineError(path.string() + ": malformed row " + std::to_string(table.line_numbers[i]));
    r.block = static_cast<int>(*block);
    r.score = *score;
    r.train = c[4] == "train";
    for (std::size_t j = fixed.size(); j < c.size(); ++j) r.delta.push_back(c[j] == "1" ? 1 : 0);
    p.rows.push_back(std::move(r));
  }
  return p;
}

inline std::vector<std::string> selected(const std::vector<std::string>& all,
                                         const std::optional<std::string>& only) {
  if (!only) return all;
  if (std::find(all.begin(), all.end(), *only) == all.end())
    throw PipelineError("submission '" + *only + "' not found in preprocessed data");
  return {*only};
}

inline std::string posterior_ndjson(const Posterior& post) {
  const auto& mats = post.natural_draws();
  std::string out;
  for (std::size_t c = 0; c < mats.size(); ++c)
    for (std::size_t r = 0; r < mats[c].rows; ++r) {
      json line = {{"chain", c}, {"iteration", r}};
      for (std::size_t k = 0; k < mats[c].cols; ++k) line[post.param_names[k]] = mats[c](r, k);
      out += line.dump();
      out += '\n';
    }
  return out;
}

/// Natural-scale posterior from posterior.ndjson (identity transform).
inline Posterior load_posterior(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PipelineError("cannot read " + path.string());
  Posterior post;
  std::vector<std::vector<std::vector<double>>> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      throw PipelineError(path.string() + ": malformed line " + std::to_string(n));
    }
    if (post.param_names.empty())
      for (const auto& [k, v] : j.items())
        if (k != "chain" && k != "iteration") post.param_names.push_back(k);
    const auto chain = j.at("chain").get<std::size_t>();
    if (chain >= rows.size()) rows.resize(chain + 1);
    std::vector<double> v;
    for (const auto& name : post.param_names) v.push_back(j.at(name).get<double>());
    rows[chain].push_back(std::move(v));
  }
  if (rows.empty()) throw PipelineError(path.string() + ": no draws");
  for (const auto& r : rows) {
    Chain ch;
    ch.draws = DrawMatrix(r.size(), post.param_names.size());
    for (std::size_t i = 0; i < r.size(); ++i) std::copy(r[i].begin(), r[i].end(), ch.draws.row(i).begin());
    post.chains.push_back(std::move(ch));
  }
  return post;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "parameter,mean,sd,hdi_low,hdi_high,rhat,ess_bulk,ess_tail\n";
  for (const auto& r : rows) {
    out += r.parameter;
    for (double v : {r.mean, r.sd, r.hdi_low, r.hdi_high, r.rhat, r.ess_bulk, r.ess_tail})
      out += "," + csv::format_double(v);
    out += '\n';
  }
  return out;
}

inline std::vector<SummaryRow> load_summary(const fs::path& path) {
  const auto table = csv::read_file(path.string());
  std::vector<SummaryRow> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& c = table.rows[i];
    if (c.size() != 8) throw PipelineError(path.string() + ": malformed row " + std::to_string(table.line_numbers[i]));
    auto num = [&](std::size_t k) {
      if (c[k] == "nan") return std::numeric_limits<double>::quiet_NaN();
      const auto v = csv::to_double(c[k]);
      if (!v) throw PipelineError(path.string() + ": malformed row " + std::to_string(table.line_numbers[i]));
      return *v;
    };
    out.push_back({c[0], num(1), num(2), num(3), num(4), num(5), num(6), num(7)});
  }
  return out;
}

inline const std::vector<PredictorKind>& predictor_order() {
  static const std::vector<PredictorKind> k = {PredictorKind::layout_posterior, PredictorKind::mean_baseline,
                                               PredictorKind::linear_assessor,
                                               PredictorKind::boosted_stumps_assessor};
  return k;
}

}  // namespace pipeline_detail

/// Validates scores + demands and writes the canonical joined dataset.
inline int cmd_ingest(const RunConfig& cfg, std::ostream& log) {
  namespace d = pipeline_detail;
  if (cfg.scores.empty() || cfg.demands.empty()) throw PipelineError("ingest needs --scores and --demands");
  Warnings warnings;
  const Dataset ds = load_dataset(cfg.scores.string(), cfg.demands.string(), &warnings);
  const auto dir = d::stage_dir(cfg, "ingest");
  std::filesystem::create_directories(dir);
  save_dataset(ds, (dir / "scores.csv").string(), (dir / "demands.csv").string());

  std::set<std::string> subs, scen;
  for (const auto& r : ds.records) {
    subs.insert(r.submission_id);
    scen.insert(r.scenario_id);
  }
  d::write_json(dir / "ingest_report.json", {{"records", ds.records.size()},
                                             {"submissions", subs},
                                             {"scenarios_scored", scen.size()},
                                             {"scenarios_annotated", ds.demands.flags.size()},
                                             {"demand_names", ds.demand_names},
                                             {"warnings", warnings}});
  d::write_manifest(dir, "ingest", d::json::object(), {cfg.scores, cfg.demands},
                    {"scores.csv", "demands.csv", "ingest_report.json"});
  for (const auto& w : warnings) log << "warning: " << w << '\n';
  log << "ingested " << ds.records.size() << " records, " << subs.size() << " submissions, "
      << ds.demand_names.size() << " demands\n";
  return kExitOk;
}

/// Binning, normalization, demand selection and per-submission split.
inline int cmd_preprocess(const RunConfig& cfg, std::ostream& log) {
  namespace d = pipeline_detail;
  const auto in = d::stage_dir(cfg, "ingest");
  d::require(in / "scores.csv", "ingest");
  d::require(in / "demands.csv", "ingest");
  const Dataset ds = load_dataset((in / "scores.csv").string(), (in / "demands.csv").string());
  const auto rows = prepare_rows(ds, cfg.block_size, cfg.normalization);
  DemandSelection sel = select_demands(ds, rows);
  std::vector<std::string> retained =
      cfg.demand_filter == DemandFilter::negative ? sel.retained : sel.representatives;
  if (retained.empty()) throw PipelineError("no demands retained after selection; try --select all");

  std::vector<std::size_t> cols;
  for (const auto& n : retained) cols.push_back(ds.demands.index_of(n));

  // Split each submission's rows independently, seeded per submission index.
  std::map<std::string, std::vector<std::size_t>> by_sub;
  for (std::size_t i = 0; i < rows.size(); ++i) by_sub[rows[i].submission_id].push_back(i);
  std::vector<std::uint8_t> is_train(rows.size(), 0);
  std::uint64_t k = 0;
  for (const auto& [sub, idx] : by_sub) {
    std::uint64_t state = cfg.seed + k++;
    const auto split = split_train_test(idx, cfg.split_ratio, splitmix64(state));
    for (auto i : split.train) is_train[i] = 1;
  }

  std::string out = "submission_id,scenario_id,block_index,score,split";
  for (const auto& n : retained) out += "," + n;
  out += '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out += r.submission_id + "," + r.scenario_id + "," + std::to_string(r.block_index) + "," +
           csv::format_double(r.score) + (is_train[i] ? ",train" : ",test");
    for (auto c : cols) out += r.delta[c] ? ",1" : ",0";
    out += '\n';
  }

  d::json corr = d::json::object();
  for (const auto& [n, r] : sel.correlations) corr[n] = r;
  const auto dir = d::stage_dir(cfg, "preprocess");
  d::write_text(dir / "preprocessed.csv", out);
  d::write_json(dir / "selection.json", {{"duplicate_groups", sel.duplicate_groups},
                                         {"representatives", sel.representatives},
                                         {"correlations", corr},
                                         {"retained", retained},
                                         {"warnings", sel.warnings}});
  const d::json config = {{"block_size", cfg.block_size},
                          {"split_ratio", cfg.split_ratio},
                          {"seed", cfg.seed},
                          {"normalize", to_string(cfg.normalization)},
                          {"select", to_string(cfg.demand_filter)}};
  d::write_manifest(dir, "preprocess", config, {in / "scores.csv", in / "demands.csv"},
                    {"preprocessed.csv", "selection.json"});
  for (const auto& w : sel.warnings) log << "warning: " << w << '\n';
  log << "preprocessed " << rows.size() << " rows; retained demands:";
  for (const auto& n : retained) log << ' ' << n;
  log << '\n';
  return kExitOk;
}

/// One measurement layout per submission on its training rows.
inline int cmd_fit(const RunConfig& cfg, std::ostream& log) {
  namespace d = pipeline_detail;
  const auto pre = d::stage_dir(cfg, "preprocess") / "preprocessed.csv";
  d::require(pre, "preprocess");
  const auto prepared = d::load_prepared(pre);
  LayoutSpec spec;
  spec.demand_names = prepared.demand_names;
  spec.score_clamp_epsilon = cfg.epsilon;
  spec.validate();

  int status = kExitOk;
  for (const auto& sub : d::selected(prepared.submissions(), cfg.submission)) {
    d::check_id(sub);
    const auto train = prepared.instances(sub, true);
    if (train.empty()) throw PipelineError("submission '" + sub + "' has no training rows");
    const Posterior post = fit_layout(spec, train, cfg.sampler);

    const auto dir = d::stage_dir(cfg, "fit") / sub;
    d::write_text(dir / "posterior.ndjson", d::posterior_ndjson(post));
    d::json chains = d::json::array();
    for (std::size_t c = 0; c < post.chains.size(); ++c) {
      const auto& ch = post.chains[c];
      double depth = 0.0;
      for (int t : ch.tree_depth) depth += t;
      chains.push_back({{"chain", c},
                        {"divergences", ch.divergence_count},
                        {"warmup_divergences", ch.warmup_divergences},
                        {"step_size", ch.step_size_final},
                        {"mean_accept_stat", ch.mean_accept()},
                        {"mean_tree_depth", ch.tree_depth.empty() ? 0.0 : depth / ch.tree_depth.size()},
                        {"inverse_metric", ch.mass_diag}});
    }
    d::write_json(dir / "sampler_stats.json", {{"total_divergences", post.total_divergences()}, {"chains", chains}});
    d::write_json(dir / "layout.json", {{"submission", sub},
                                        {"demand_names", spec.demand_names},
                                        {"ability_prior", {spec.ability_prior.alpha, spec.ability_prior.beta}},
                                        {"base_chance_prior", {spec.base_chance_prior.alpha, spec.base_chance_prior.beta}},
                                        {"concentration_scale", spec.concentration_scale},
                                        {"score_clamp_epsilon", spec.score_clamp_epsilon},
                                        {"n_train", train.size()}});
    d::json config = d::sampler_json(cfg.sampler);
    config["epsilon"] = cfg.epsilon;
    d::write_manifest(dir, "fit", config, {pre}, {"posterior.ndjson", "sampler_stats.json", "layout.json"});
    log << sub << ": " << post.num_chains() << " chains x " << post.draws_per_chain() << " draws, "
        << post.total_divergences() << " divergences\n";
    if (post.total_divergences() > 0) {
      log << "warning: " << sub << ": divergent transitions after warmup\n";
      status = kExitWarning;
    }
  }
  return status;
}

/// summary.csv per fitted submission; warns when any R-hat >= 1.01.
inline int cmd_diagnose(const RunConfig& cfg, std::ostream& log) {
  namespace d = pipeline_detail;
  const auto pre = d::stage_dir(cfg, "preprocess") / "preprocessed.csv";
  d::require(pre, "preprocess");
  int status = kExitOk;
  for (const auto& sub : d::selected(d::load_prepared(pre).submissions(), cfg.submission)) {
    const auto post_path = d::stage_dir(cfg, "fit") / sub / "posterior.ndjson";
    d::require(post_path, "fit");
    const auto rows = summarize(d::load_posterior(post_path), cfg.hdi_mass);
    const auto dir = d::stage_dir(cfg, "diagnose") / sub;
    d::write_text(dir / "summary.csv", d::summary_csv(rows));
    d::write_manifest(dir, "diagnose", {{"hdi_mass", cfg.hdi_mass}}, {post_path}, {"summary.csv"});
    double worst = 0.0;
    for (const auto& r : rows) worst = std::isnan(r.rhat) || std::isnan(worst) ? NAN : std::max(worst, r.rhat);
    const bool ok = converged(rows);
    log << sub << ": max R-hat " << worst << (ok ? " (converged)\n" : " (UNCONVERGED)\n");
    if (!ok) status = kExitWarning;
  }
  return status;
}

/// Test-set predictions of the layout and the three baselines.
inline int cmd_predict(const RunConfig& cfg, std::ostream& log) {
  namespace d = pipeline_detail;
  const auto pre = d::stage_dir(cfg, "preprocess") / "preprocessed.csv";
  d::require(pre, "preprocess");
  const auto prepared = d::load_prepared(pre);
  std::string out = "submission_id,scenario_id,block_index,observed";
  for (auto k : d::predictor_order()) out += "," + to_string(k);
  out += '\n';
  std::vector<std::filesystem::path> inputs = {pre};
  for (const auto& sub : d::selected(prepared.submissions(), cfg.submission)) {
    const auto post_path = d::stage_dir(cfg, "fit") / sub / "posterior.ndjson";
    d::require(post_path, "fit");
    inputs.push_back(post_path);
    const Posterior post = d::load_posterior(post_path);
    const auto train = prepared.instances(sub, true);
    const std::vector<Predictor> preds = {layout_predictor(post), fit_mean_baseline(train),
                                          fit_linear_assessor(train), fit_boosted_stumps(train)};
    const auto test = prepared.test_rows(sub);
    for (const auto* r : test) {
      out += r->submission + "," + r->scenario + "," + std::to_string(r->block) + "," + csv::format_double(r->score);
      for (const auto& p : preds) out += "," + csv::format_double(p.predict(r->delta));
      out += '\n';
    }
    log << sub << ": predicted " << test.size() << " test rows\n";
  }
  const auto dir = d::stage_dir(cfg, "predict");
  d::write_text(dir / "predictions.csv", out);
  d::write_manifest(dir, "predict", d::json::object(), inputs, {"predictions.csv"});
  return kExitOk;
}

/// RMSE / R^2 per predictor per submission, with the profile-inclusion flag.
inline int cmd_compare(const RunConfig& cfg, std::ostream& log) {
  namespace d = pipeline_detail;
  const auto path = d::stage_dir(cfg, "predict") / "predictions.csv";
  d::require(path, "predict");
  const auto table = csv::read_file(path.string());
  std::vector<SubmissionPredictions> subs;
  for (const auto& c : table.rows) {
    if (c.size() != 8) throw PipelineError(path.string() + ": malformed row");
    if (subs.empty() || subs.back().submission != c[0]) subs.push_back({c[0], {}, {}});
    auto& s = subs.back();
    s.observed.push_back(csv::to_double(c[3]).value());
    for (std::size_t k = 0; k < 4; ++k)
      s.predicted[d::predictor_order()[k]].push_back(csv::to_double(c[4 + k]).value());
  }
  std::string out = "submission,predictor,rmse,r2,n_test,included_in_profiles\n";
  for (const auto& r : compare_predictors(subs)) {
    out += r.submission + "," + to_string(r.predictor) + "," + csv::format_double(r.metrics.rmse) + "," +
           csv::format_double(r.metrics.r2) + "," + std::to_string(r.metrics.n_test) + "," +
           (r.included_in_profiles ? "true" : "false") + "\n";
    log << r.submission << " " << to_string(r.predictor) << ": rmse " << r.metrics.rmse << ", r2 "
        << r.metrics.r2 << '\n';
  }
  const auto dir = d::stage_dir(cfg, "compare");
  d::write_text(dir / "comparison.csv", out);
  d::write_manifest(dir, "compare", d::json::object(), {path}, {"comparison.csv"});
  return kExitOk;
}

/// Ability profiles for submissions whose layout test R^2 exceeds 0.25.
inline int cmd_profile(const RunConfig& cfg, std::ostream& log) {
  namespace d = pipeline_detail;
  const auto cmp = d::stage_dir(cfg, "compare") / "comparison.csv";
  d::require(cmp, "compare");
  const auto table = csv::read_file(cmp.string());
  const auto dir = d::stage_dir(cfg, "profile");
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> inputs = {cmp};
  std::vector<std::string> outputs;
  std::string report;
  for (const auto& c : table.rows) {
    if (c.size() != 6) throw PipelineError(cmp.string() + ": malformed row");
    if (c[1] != to_string(PredictorKind::layout_posterior)) continue;
    if (cfg.submission && *cfg.submission != c[0]) continue;
    const std::string& sub = c[0];
    if (c[5] != "true") {
      const std::string line = sub + ": omitted, layout test R^2 = " + c[3] + " is not above " +
                               csv::format_double(kProfileR2Threshold) + "\n";
      report += line;
      log << line;
      continue;
    }
    const auto sum_path = d::stage_dir(cfg, "diagnose") / sub / "summary.csv";
    d::require(sum_path, "diagnose");
    inputs.push_back(sum_path);
    d::json abilities = d::json::object(), base, nu;
    for (const auto& r : d::load_summary(sum_path)) {
      const d::json entry = {{"mean", r.mean}, {"hdi_low", r.hdi_low}, {"hdi_high", r.hdi_high}};
      if (r.parameter == "rho") {
        base = entry;
      } else if (r.parameter == "nu") {
        nu = entry;
      } else if (r.parameter.starts_with("theta[") && r.parameter.ends_with("]")) {
        abilities[r.parameter.substr(6, r.parameter.size() - 7)] = entry;
      }
    }
    d::write_json(dir / (sub + ".json"), {{"abilities", abilities}, {"base_chance", base}, {"nu", nu}});
    outputs.push_back(sub + ".json");
    report += sub + ": profiled, layout test R^2 = " + c[3] + "\n";
    log << sub << ": profile written\n";
  }
  d::write_text(dir / "profile_report.txt", report);
  outputs.push_back("profile_report.txt");
  d::write_manifest(dir, "profile", d::json::object(), inputs, outputs);
  return kExitOk;
}

/// Synthetic contest data in the ingest formats, plus the generating truth.
/// Each block's episodes all equal the block score, so binning at
/// --block-size recovers one model draw per block.
inline int cmd_synth(const RunConfig& cfg, std::ostream& log) {
  namespace d = pipeline_detail;
  const auto& s = cfg.synth;
  d::check_id(s.submission);
  GroundTruth truth;
  truth.theta_true = spread_abilities(static_cast<std::size_t>(s.n_demands));
  truth.rho_true = s.rho;
  truth.nu_true = s.nu;
  truth.demand_density = s.density;
  truth.seed = cfg.seed;
  truth.validate();

  Rng rng(cfg.seed);
  const auto deltas = draw_demands(rng, static_cast<std::size_t>(s.n_scenarios),
                                   static_cast<std::size_t>(s.n_demands), s.density);
  DemandTable table;
  for (int j = 0; j < s.n_demands; ++j) table.demand_names.push_back("demand_" + std::to_string(j + 1));
  std::vector<std::string> scenario_ids;
  const int width = static_cast<int>(std::to_string(s.n_scenarios).size());
  for (int k = 0; k < s.n_scenarios; ++k) {
    std::ostringstream id;
    id << "scenario_" << std::setw(width) << std::setfill('0') << k + 1;
    scenario_ids.push_back(id.str());
    table.flags[id.str()] = deltas[static_cast<std::size_t>(k)];
  }
  std::vector<RawScoreRecord> records;
  for (int k = 0; k < s.n_scenarios; ++k)
    for (int b = 0; b < s.n_blocks; ++b) {
      const double score = draw_score(rng, truth, deltas[static_cast<std::size_t>(k)]);
      for (int e = 0; e < cfg.block_size; ++e)
        records.push_back({s.submission, scenario_ids[static_cast<std::size_t>(k)],
                           static_cast<long long>(b) * cfg.block_size + e, score});
    }

  const auto dir = d::stage_dir(cfg, "synth");
  std::filesystem::create_directories(dir);
  {
    std::ofstream sc(dir / "scores.csv", std::ios::binary), dm(dir / "demands.csv", std::ios::binary);
    if (!sc || !dm) throw PipelineError("cannot write to " + dir.string());
    write_scores(sc, records);
    write_demands(dm, table);
  }
  d::json theta = d::json::object();
  for (std::size_t j = 0; j < truth.theta_true.size(); ++j) theta[table.demand_names[j]] = truth.theta_true[j];
  d::write_json(dir / "truth.json", {{"submission", s.submission},
                                     {"theta", theta},
                                     {"rho", truth.rho_true},
                                     {"nu", truth.nu_true},
                                     {"demand_density", truth.demand_density},
                                     {"seed", cfg.seed}});
  const d::json config = {{"seed", cfg.seed},           {"n_demands", s.n_demands}, {"n_scenarios", s.n_scenarios},
                          {"n_blocks", s.n_blocks},     {"block_size", cfg.block_size},
                          {"density", s.density},       {"rho", s.rho},
                          {"nu", s.nu},                 {"submission", s.submission}};
  d::write_manifest(dir, "synth", config, {}, {"scores.csv", "demands.csv", "truth.json"});
  log << "wrote " << records.size() << " episode records over " << s.n_scenarios << " scenarios to "
      << dir.string() << '\n';
  return kExitOk;
}

}  // namespace layout_infer

#endif  // LAYOUT_INFER_PIPELINE_HPP
