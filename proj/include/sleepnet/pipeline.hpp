#pragma once

// End-to-end orchestration. Every stage reads the previous stage's files
// from the output directory and writes its own, so stages can be re-run one
// at a time. Each run keeps a MANIFEST of stage status and file digests.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sleepnet/consensus.hpp"
#include "sleepnet/eval.hpp"
#include "sleepnet/ingest.hpp"
#include "sleepnet/serialize.hpp"
#include "sleepnet/sleepmix.hpp"
#include "sleepnet/synth.hpp"

namespace sleepnet {

enum class MedianScope { per_cohort, global };

struct PipelineConfig {
  LogPaths inputs;
  std::filesystem::path out_dir = "out";
  NightWindowConfig window;
  int min_nights = 20;
  ParseOptions parse;
  MixtureConfig mixture;
  double stay_up_threshold = 0.5;
  BdeuConfig bdeu;
  EnsembleConfig ensemble;
  PredictionExperiment prediction;
  std::optional<Cohort> cohort;  // nullopt: every cohort present
  MedianScope median_scope = MedianScope::per_cohort;
  std::uint64_t seed = 0;

  void validate() const;
  Json to_json() const;
};

enum class Stage { ingest, sleep_fit, profile, bn_learn, consensus, predict };
inline constexpr Stage kAllStages[] = {Stage::ingest,   Stage::sleep_fit,
                                       Stage::profile,  Stage::bn_learn,
                                       Stage::consensus, Stage::predict};
std::string_view to_string(Stage s);

// Stage status and SHA-256 of every file written under the output directory.
class Manifest {
 public:
  explicit Manifest(std::filesystem::path out_dir);

  // Reads an existing MANIFEST, if any, so single-stage runs extend it.
  void load();
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void mark(std::string_view stage, bool complete);
  // Records the digest of a file given relative to the output directory.
  void add_file(const std::filesystem::path& relative);
  void save() const;

  std::string text() const;

 private:
  std::filesystem::path dir_;
  std::optional<std::uint64_t> seed_;
  std::vector<std::pair<std::string, bool>> stages_;
  std::vector<std::pair<std::string, std::string>> files_;  // path, digest
};

std::string sha256_hex(const std::filesystem::path& file);

// Results the report gathers per cohort.
struct CohortSummary {
  Cohort cohort = Cohort::freshman;
  int stay_up = 0;
  int non_stay_up = 0;
  int excluded = 0;
  Dag consensus;
  double null_threshold = 0.0;
  std::vector<double> auc_per_fold;
  double auc_mean = 0.0;
};

struct PipelineState {
  PipelineConfig config;
  Manifest manifest;
  std::vector<Cohort> cohorts;  // groups processed, in enum order
  std::vector<CohortSummary> summaries;
  std::optional<ConsensusDag> total_network;
  Json ingest_summary;
};

// Stage runners. They throw IoError for missing inputs and other Error
// types for failures inside the stage.
void run_ingest(PipelineState& state);
void run_sleep_fit(PipelineState& state);
void run_profile(PipelineState& state);
void run_bn_learn(PipelineState& state);
void run_consensus_stage(PipelineState& state);
void run_predict(PipelineState& state);

Json build_report(const PipelineState& state);

struct StageOutcome {
  int exit_code = 0;  // 0 ok, 1 stage failure, 2 I/O or configuration
  std::string message;
};

// Runs the listed stages in order, keeping the MANIFEST current after each
// one. When every stage runs, report.json is written as well.
StageOutcome run_stages(const PipelineConfig& config, std::span<const Stage> stages,
                        bool write_report);

struct SynthOptions {
  GeneratorConfig generator;
  std::filesystem::path out_dir = "synth";
  std::filesystem::path truth_path;  // empty: built-in ground truth
};

// Writes the emitted artifacts plus truth.json.
StageOutcome run_synth(const SynthOptions& options);

}  // namespace sleepnet
