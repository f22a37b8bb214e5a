#include <functional>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "layout_infer.hpp"

using namespace layout_infer;

namespace {

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  1  error (bad input, missing upstream artifact, sampler failure)\n"
    "  2  usage error\n"
    "  3  completed with warnings (divergent transitions, unconverged fit)\n"
    "Environment: LAYOUT_INFER_THREADS caps the number of sampler threads.";

void add_common(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--out", cfg.out, "Output root; stages live in <out>/<stage>/")->capture_default_str();
  cmd->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
}

void add_sampler(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--chains", cfg.sampler.chains, "Number of chains")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--draws", cfg.sampler.draws, "Post-warmup draws per chain")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--warmup", cfg.sampler.warmup, "Warmup iterations per chain")->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--target-accept", cfg.sampler.target_accept, "Step-size adaptation target")->capture_default_str();
  cmd->add_option("--max-tree-depth", cfg.sampler.max_tree_depth, "NUTS tree depth limit")->capture_default_str();
  cmd->add_option("--epsilon", cfg.epsilon, "Score clamp margin into (0, 1)")->capture_default_str();
}

void add_submission(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--submission", cfg.submission, "Only process this submission id");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Measurement-layout inference of capability profiles from binary task demands.", "layout_infer"};
  app.footer(kExitCodes);
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::map<CLI::App*, std::function<int(const RunConfig&, std::ostream&)>> commands;

  auto* ingest = app.add_subcommand("ingest", "Validate and join scores.csv and demands.csv");
  ingest->add_option("--scores", cfg.scores, "Episode scores CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--demands", cfg.demands, "Scenario demand annotations CSV")->required()->check(CLI::ExistingFile);
  add_common(ingest, cfg);
  commands[ingest] = cmd_ingest;

  auto* pre = app.add_subcommand("preprocess", "Bin episodes, normalize, select demands, split train/test");
  add_common(pre, cfg);
  pre->add_option("--block-size", cfg.block_size, "Episodes per averaged block")->capture_default_str();
  pre->add_option("--split-ratio", cfg.split_ratio, "Training fraction per submission")->capture_default_str();
  pre->add_option("--normalize", cfg.normalization, "Min-max normalization scope")
      ->transform(CLI::CheckedTransformer(std::map<std::string, Normalization>{
          {"global", Normalization::global},
          {"per-submission", Normalization::per_submission},
          {"none", Normalization::none}}))
      ->default_str("global");
  pre->add_option("--select", cfg.demand_filter, "Keep negatively correlated demands or all deduplicated ones")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, DemandFilter>{{"negative", DemandFilter::negative}, {"all", DemandFilter::all}}))
      ->default_str("negative");
  commands[pre] = cmd_preprocess;

  auto* fit = app.add_subcommand("fit", "Fit one measurement layout per submission with NUTS");
  add_common(fit, cfg);
  add_sampler(fit, cfg);
  add_submission(fit, cfg);
  commands[fit] = cmd_fit;

  auto* diag = app.add_subcommand("diagnose", "Posterior summaries, R-hat and ESS");
  add_common(diag, cfg);
  add_submission(diag, cfg);
  diag->add_option("--hdi-mass", cfg.hdi_mass, "HDI probability mass")->capture_default_str();
  commands[diag] = cmd_diagnose;

  auto* predict = app.add_subcommand("predict", "Test-set predictions of the layout and baseline assessors");
  add_common(predict, cfg);
  add_submission(predict, cfg);
  commands[predict] = cmd_predict;

  auto* compare = app.add_subcommand("compare", "RMSE and R^2 per predictor per submission");
  add_common(compare, cfg);
  commands[compare] = cmd_compare;

  auto* profile = app.add_subcommand("profile", "Ability profiles for submissions with layout R^2 > 0.25");
  add_common(profile, cfg);
  add_submission(profile, cfg);
  commands[profile] = cmd_profile;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset from known parameters");
  add_common(synth, cfg);
  synth->add_option("--n-demands", cfg.synth.n_demands, "Number of demands")->capture_default_str();
  synth->add_option("--n-scenarios", cfg.synth.n_scenarios, "Number of scenarios")->capture_default_str();
  synth->add_option("--n-blocks", cfg.synth.n_blocks, "Blocks per scenario")->capture_default_str();
  synth->add_option("--block-size", cfg.block_size, "Episodes per block")->capture_default_str();
  synth->add_option("--density", cfg.synth.density, "Probability a demand is present")->capture_default_str();
  synth->add_option("--rho", cfg.synth.rho, "Base chance")->capture_default_str();
  synth->add_option("--nu", cfg.synth.nu, "Concentration")->capture_default_str();
  synth->add_option("--submission-name", cfg.synth.submission, "Submission id")->capture_default_str();
  commands[synth] = cmd_synth;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    for (auto* sub : app.get_subcommands()) return commands.at(sub)(cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
