#pragma once

// Consensus structure learning: restart ensembles, top-fraction selection,
// a dependence-destroying null model for the edge-frequency threshold, and
// reconstruction of consensus and merged networks.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sleepnet/bayesnet.hpp"

namespace sleepnet {

enum class NullScheme {
  permute_columns,  // each column shuffled independently
  bootstrap_rows    // rows resampled with replacement
};

struct EnsembleConfig {
  int restarts = 200;
  double edge_probability = 0.15;
  double top_fraction = 1.0 / 3.0;
  int null_replicas = 10;
  NullScheme null_scheme = NullScheme::permute_columns;

  void validate() const;
};

struct ScoredDag {
  Dag dag;
  double score = 0.0;
};

struct EnsembleResult {
  std::vector<ScoredDag> members;
  int restarts = 0;
  std::uint64_t seed = 0;
};

// Restart r climbs from random_start(derive_seed(seed, 2r)) with tie-break
// stream derive_seed(seed, 2r + 1).
EnsembleResult learn_ensemble(const FamilyScorer& scorer,
                              const LayerConstraints& constraints,
                              int n_restarts, double edge_probability,
                              std::uint64_t seed);
EnsembleResult learn_ensemble(const DatasetTable& data,
                              const LayerConstraints& constraints,
                              const BdeuConfig& cfg, int n_restarts,
                              double edge_probability, std::uint64_t seed);

// The ceil(fraction * size) best members. Equal scores are ordered by a
// key derived from the ensemble seed.
std::vector<ScoredDag> top_fraction(const EnsembleResult& ensemble,
                                    double fraction);

// Members whose score equals the best score in the subset (1e-9 relative).
std::vector<ScoredDag> best_scoring(std::span<const ScoredDag> subset);

class EdgeFrequencyTable {
 public:
  EdgeFrequencyTable() = default;
  explicit EdgeFrequencyTable(int n) : n_(n), counts_(n * n, 0) {}
  static EdgeFrequencyTable from(std::span<const ScoredDag> subset);
  static EdgeFrequencyTable from_dags(std::span<const Dag> subset);

  int size() const noexcept { return n_; }
  int subset_size() const noexcept { return subset_size_; }
  int count(int from, int to) const { return counts_[from * n_ + to]; }
  void set(int from, int to, int value) { counts_[from * n_ + to] = value; }
  void set_subset_size(int s) { subset_size_ = s; }

 private:
  int n_ = 0;
  int subset_size_ = 0;
  std::vector<int> counts_;
};

struct NullModelResult {
  std::vector<EdgeFrequencyTable> replicas;
  std::vector<double> pooled;  // every allowed edge of every replica
  double mean = 0.0;
  double std = 0.0;
  double threshold = 0.0;  // mean + 2 std
};

DatasetTable permute_columns(const DatasetTable& data, std::uint64_t seed);
DatasetTable bootstrap_rows(const DatasetTable& data, std::uint64_t seed);

// Summary statistics of a pooled frequency sample (population std).
NullModelResult summarize_null(std::vector<double> pooled);

NullModelResult null_threshold(const DatasetTable& data,
                               const LayerConstraints& constraints,
                               const BdeuConfig& cfg,
                               const EnsembleConfig& ensemble,
                               std::uint64_t seed);

struct ConsensusEdge {
  int from = 0;
  int to = 0;
  double frequency = 0.0;
};

struct DirectionDecision {
  int kept_from = -1, kept_to = -1;        // -1 when nothing was kept
  int dropped_from = -1, dropped_to = -1;
  std::string reason;
};

struct ConsensusDag {
  Dag dag;
  std::vector<ConsensusEdge> edges;  // sorted (from, to)
  double threshold = 0.0;
  std::vector<DirectionDecision> provenance;
};

// Keeps edges with frequency > threshold, resolves opposite directions by
// the high-score table, then removes the weakest edge of any cycle.
ConsensusDag build_consensus(const EdgeFrequencyTable& freqs,
                             const EdgeFrequencyTable& high_score_freqs,
                             double threshold);

// Unordered pairs present in at least ceil(k/2) of the k inputs survive;
// direction follows the summed high-score frequency.
ConsensusDag merge_total_network(
    std::span<const ConsensusDag> consensus_dags,
    std::span<const EdgeFrequencyTable> high_score_freqs);

struct ConsensusRun {
  EnsembleResult ensemble;
  std::vector<ScoredDag> top;
  EdgeFrequencyTable frequencies;        // over the top fraction
  EdgeFrequencyTable high_score_frequencies;
  NullModelResult null_model;
  ConsensusDag consensus;
};

ConsensusRun run_consensus(const DatasetTable& data,
                           const LayerConstraints& constraints,
                           const BdeuConfig& cfg,
                           const EnsembleConfig& ensemble, std::uint64_t seed);

}  // namespace sleepnet
