// Command-line front end: one subcommand per pipeline stage plus `run` for the
// whole chain and `synth` for generated inputs.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "sleepnet/pipeline.hpp"

namespace {

using namespace sleepnet;

template <typename E>
CLI::CheckedTransformer choices(const std::map<std::string, E>& table) {
  return CLI::CheckedTransformer(table, CLI::ignore_case);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stay-up-late detection and behavioural Bayesian networks"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Configuration file (TOML or INI); flags override it");
  app.fallthrough();

  PipelineConfig cfg;
  std::string input_dir, out_dir = "out";
  std::string sessions, transactions, borrows, grades, demographics;
  std::string cohort = "all";
  std::string variant = "standard";
  bool lenient = false;

  app.add_option("--input", input_dir, "Directory holding the five input CSV files");
  app.add_option("--net-sessions", sessions, "Override the net session log path");
  app.add_option("--transactions", transactions, "Override the transaction log path");
  app.add_option("--borrows", borrows, "Override the library loan log path");
  app.add_option("--grades", grades, "Override the grade file path");
  app.add_option("--demographics", demographics, "Override the demographics path");
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
  app.add_option("--cohort", cohort, "Cohort to process")
      ->check(CLI::IsMember({"freshman", "sophomore", "junior", "all"}))
      ->capture_default_str();
  app.add_flag("--lenient", lenient, "Skip and count malformed input rows");
  app.add_option("--min-nights", cfg.min_nights, "Minimum observed nights per student")
      ->capture_default_str();

  app.add_option("--variant", variant, "EM update forms")
      ->check(CLI::IsMember({"paper", "standard"}))
      ->capture_default_str();
  app.add_option("--components", cfg.mixture.components)->capture_default_str();
  app.add_option("--alpha", cfg.mixture.alpha, "Gamma prior shape")->capture_default_str();
  app.add_option("--beta", cfg.mixture.beta, "Gamma prior rate")->capture_default_str();
  app.add_option("--em-restarts", cfg.mixture.restarts)->capture_default_str();
  app.add_option("--max-iterations", cfg.mixture.max_iterations)->capture_default_str();
  app.add_option("--tolerance", cfg.mixture.tolerance)->capture_default_str();
  app.add_option("--threshold", cfg.stay_up_threshold, "Stay-up responsibility cut")
      ->capture_default_str();

  app.add_option("--median-scope", cfg.median_scope)
      ->transform(choices(std::map<std::string, MedianScope>{
          {"per-cohort", MedianScope::per_cohort}, {"global", MedianScope::global}}));

  app.add_option("--ess", cfg.bdeu.ess, "BDeu equivalent sample size")->capture_default_str();
  app.add_option("--restarts", cfg.ensemble.restarts, "Hill-climbing restarts")
      ->capture_default_str();
  app.add_option("--edge-probability", cfg.ensemble.edge_probability)->capture_default_str();
  app.add_option("--top-fraction", cfg.ensemble.top_fraction)->capture_default_str();
  app.add_option("--null-replicas", cfg.ensemble.null_replicas)->capture_default_str();
  app.add_option("--null-scheme", cfg.ensemble.null_scheme)
      ->transform(choices(std::map<std::string, NullScheme>{
          {"permute", NullScheme::permute_columns},
          {"bootstrap", NullScheme::bootstrap_rows}}));

  app.add_option("--folds", cfg.prediction.folds, "Cross-validation folds")
      ->capture_default_str();
  app.add_option("--eval-mode", cfg.prediction.mode)
      ->transform(choices(std::map<std::string, EvalMode>{
          {"cv", EvalMode::cross_validated}, {"in-sample", EvalMode::in_sample}}));
  app.add_option("--structure", cfg.prediction.structure)
      ->transform(choices(std::map<std::string, StructureSource>{
          {"consensus", StructureSource::consensus},
          {"hill-climb", StructureSource::hill_climb}}));

  const std::map<std::string, Stage> stage_commands{
      {"ingest", Stage::ingest},     {"sleep-fit", Stage::sleep_fit},
      {"profile", Stage::profile},   {"bn-learn", Stage::bn_learn},
      {"consensus", Stage::consensus}, {"predict", Stage::predict}};
  for (const auto& [name, stage] : stage_commands) {
    app.add_subcommand(name, "Run the " + name + " stage only");
  }
  auto* run = app.add_subcommand("run", "Run every stage and write report.json");

  SynthOptions synth;
  std::string emit = "full_logs";
  std::string truth_path;
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic inputs with known truth");
  synth_cmd->add_option("--students", synth.generator.n_students)->capture_default_str();
  synth_cmd->add_option("--nights", synth.generator.n_nights)->capture_default_str();
  synth_cmd->add_option("--emit", emit)
      ->check(CLI::IsMember({"count_vectors", "profiles", "full_logs"}))
      ->capture_default_str();
  synth_cmd->add_option("--observed-fraction", synth.generator.observed_fraction)
      ->capture_default_str();
  synth_cmd->add_option("--truth", truth_path, "Ground truth JSON to use instead of the default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  cfg.out_dir = out_dir;
  cfg.parse.strict = !lenient;
  if (cohort != "all") cfg.cohort = parse_cohort(cohort);
  if (variant == "paper") {
    cfg.mixture.estep = EStepVariant::paper_literal;
    cfg.mixture.mstep = MStepVariant::paper_literal;
  }
  if (!input_dir.empty()) cfg.inputs = LogPaths::in_directory(input_dir);
  for (auto [flag, target] : {std::pair{&sessions, &cfg.inputs.net_sessions},
                              std::pair{&transactions, &cfg.inputs.transactions},
                              std::pair{&borrows, &cfg.inputs.borrows},
                              std::pair{&grades, &cfg.inputs.grades},
                              std::pair{&demographics, &cfg.inputs.demographics}}) {
    if (!flag->empty()) *target = *flag;
  }

  StageOutcome outcome;
  if (synth_cmd->parsed()) {
    synth.out_dir = out_dir;
    synth.truth_path = truth_path;
    synth.generator.seed = cfg.seed;
    synth.generator.cohort = cfg.cohort;
    synth.generator.emit = emit == "count_vectors" ? EmitKind::count_vectors
                           : emit == "profiles"    ? EmitKind::profiles
                                                   : EmitKind::full_logs;
    outcome = run_synth(synth);
  } else {
    const bool needs_inputs = run->parsed() || app.get_subcommand("ingest")->parsed();
    if (needs_inputs && cfg.inputs.demographics.empty()) {
      std::cerr << "sleepnet: no input given (use --input DIR)\n";
      return 2;
    }
    if (run->parsed()) {
      outcome = run_stages(cfg, kAllStages, true);
    } else {
      for (const auto& [name, stage] : stage_commands) {
        if (app.get_subcommand(name)->parsed()) {
          const Stage one[] = {stage};
          outcome = run_stages(cfg, one, false);
        }
      }
    }
  }

  if (outcome.exit_code != 0) {
    std::cerr << "sleepnet: " << outcome.message << '\n';
  } else {
    std::cout << "outputs written to " << out_dir << '\n';
  }
  return outcome.exit_code;
}
