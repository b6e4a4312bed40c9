#pragma once

// Predictability of the sleep variable from its Markov blanket, scored by
// ROC/AUC.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sleepnet/bayesnet.hpp"
#include "sleepnet/consensus.hpp"

namespace sleepnet {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0,0) ... (1,1)
  double auc = 0.0;
};

// Threshold sweep from the highest score down; tied scores form one segment.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

enum class EvalMode { cross_validated, in_sample };
enum class StructureSource {
  consensus,  // full consensus pipeline per training set
  hill_climb  // best member of a restart ensemble
};

struct PredictionExperiment {
  int folds = 5;
  std::string target = "S";
  EvalMode mode = EvalMode::cross_validated;
  StructureSource structure = StructureSource::consensus;
  EnsembleConfig ensemble;

  void validate() const;
};

struct FoldResult {
  RocCurve roc;
  Dag dag;
  NodeMask blanket = 0;
  bool degenerate_blanket = false;  // empty blanket: scores are the marginal
  std::size_t test_rows = 0;
};

struct PredictionResult {
  std::vector<FoldResult> folds;
  double mean_auc = 0.0;
};

// Fold index per row, stratified by the binary label so every training part
// keeps both classes when each class has at least `folds` rows.
std::vector<int> fold_assignment(std::span<const std::uint8_t> labels, int folds,
                                 std::uint64_t seed);

// P(target = 1 | blanket values) for every row of `rows`.
std::vector<double> blanket_scores(const Dag& dag, const CptSet& cpts,
                                   const DatasetTable& rows, int target);

PredictionResult predict_sleep_experiment(const DatasetTable& profiles,
                                          const LayerConstraints& constraints,
                                          const BdeuConfig& cfg,
                                          const PredictionExperiment& experiment,
                                          std::uint64_t seed);

}  // namespace sleepnet
