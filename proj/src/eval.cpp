#include "sleepnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "sleepnet/error.hpp"
#include "sleepnet/rng.hpp"

namespace sleepnet {

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw DomainError("scores and labels differ in length");
  }
  double positives = 0.0, negatives = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DomainError("labels must be 0 or 1");
    if (std::isnan(scores[i])) throw DomainError("score is NaN");
    (labels[i] ? positives : negatives) += 1.0;
  }
  if (positives == 0.0 || negatives == 0.0) {
    throw DomainError("ROC needs both positive and negative labels");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  double tp = 0.0, fp = 0.0, area = 0.0;  // area in units of (neg x pos)
  for (std::size_t i = 0; i < order.size();) {
    double group_tp = 0.0, group_fp = 0.0;
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) {
      (labels[order[i]] ? group_tp : group_fp) += 1.0;
    }
    area += group_fp * (2.0 * tp + group_tp) / 2.0;
    tp += group_tp;
    fp += group_fp;
    curve.points.push_back({fp / negatives, tp / positives});
  }
  curve.auc = area / (positives * negatives);
  return curve;
}

void PredictionExperiment::validate() const {
  if (mode == EvalMode::cross_validated && folds < 2) {
    throw DomainError("cross-validation needs at least two folds");
  }
  ensemble.validate();
}

std::vector<int> fold_assignment(std::span<const std::uint8_t> labels, int folds,
                                 std::uint64_t seed) {
  if (folds < 1) throw DomainError("folds must be positive");
  std::vector<int> fold(labels.size(), 0);
  int counter = 0;
  for (int cls = 0; cls < 256; ++cls) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) idx.push_back(i);
    }
    if (idx.empty()) continue;
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(cls));
    std::shuffle(idx.begin(), idx.end(), rng);
    for (auto i : idx) fold[i] = counter++ % folds;
  }
  return fold;
}

std::vector<double> blanket_scores(const Dag& dag, const CptSet& cpts,
                                   const DatasetTable& rows, int target) {
  const auto blanket = members(markov_blanket(dag, target));
  std::unordered_map<std::uint64_t, double> memo;
  std::vector<double> out(rows.rows());
  Evidence evidence;
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    std::uint64_t key = 0;
    evidence.clear();
    for (int v : blanket) {
      key = key * 256 + rows(r, v);
      evidence.emplace_back(v, rows(r, v));
    }
    auto it = memo.find(key);
    if (it == memo.end()) {
      it = memo.emplace(key, posterior_query(dag, cpts, evidence, target)[1]).first;
    }
    out[r] = it->second;
  }
  return out;
}

namespace {

Dag learn_structure(const DatasetTable& train, const LayerConstraints& constraints,
                    const BdeuConfig& cfg, const PredictionExperiment& experiment,
                    std::uint64_t seed) {
  if (experiment.structure == StructureSource::consensus) {
    return run_consensus(train, constraints, cfg, experiment.ensemble, seed)
        .consensus.dag;
  }
  auto ensemble = learn_ensemble(train, constraints, cfg,
                                 experiment.ensemble.restarts,
                                 experiment.ensemble.edge_probability, seed);
  return top_fraction(ensemble, 1.0 / ensemble.members.size()).front().dag;
}

FoldResult evaluate(const DatasetTable& train, const DatasetTable& test,
                    const LayerConstraints& constraints, const BdeuConfig& cfg,
                    const PredictionExperiment& experiment, int target,
                    std::uint64_t seed) {
  FoldResult fold;
  fold.dag = learn_structure(train, constraints, cfg, experiment, seed);
  const auto cpts = fit_mle(fold.dag, train);
  fold.blanket = markov_blanket(fold.dag, target);
  fold.degenerate_blanket = fold.blanket == 0;
  const auto scores = blanket_scores(fold.dag, cpts, test, target);
  std::vector<int> labels(test.rows());
  for (std::size_t r = 0; r < test.rows(); ++r) labels[r] = test(r, target);
  fold.roc = roc_auc(scores, labels);
  fold.test_rows = test.rows();
  return fold;
}

}  // namespace

PredictionResult predict_sleep_experiment(const DatasetTable& profiles,
                                          const LayerConstraints& constraints,
                                          const BdeuConfig& cfg,
                                          const PredictionExperiment& experiment,
                                          std::uint64_t seed) {
  experiment.validate();
  const int target = profiles.variables().index_of(experiment.target);
  if (profiles.variables().arity(target) != 2) {
    throw DomainError("prediction target must be binary");
  }
  PredictionResult result;

  if (experiment.mode == EvalMode::in_sample) {
    result.folds.push_back(evaluate(profiles, profiles, constraints, cfg,
                                    experiment, target, derive_seed(seed, 1)));
  } else {
    const auto fold_of =
        fold_assignment(profiles.column(target), experiment.folds, derive_seed(seed, 0));
    for (int f = 0; f < experiment.folds; ++f) {
      std::vector<std::size_t> train_rows, test_rows;
      for (std::size_t r = 0; r < profiles.rows(); ++r) {
        (fold_of[r] == f ? test_rows : train_rows).push_back(r);
      }
      const auto train = profiles.select_rows(train_rows);
      const auto test = profiles.select_rows(test_rows);
      const auto positives = std::count(train.column(target).begin(),
                                        train.column(target).end(), 1);
      if (positives == 0 || positives == static_cast<long>(train.rows())) {
        throw DomainError("fold " + std::to_string(f) +
                          " training data lacks one of the target classes");
      }
      result.folds.push_back(evaluate(train, test, constraints, cfg, experiment,
                                      target, derive_seed(seed, 100 + f)));
    }
  }

  double total = 0.0;
  for (const auto& f : result.folds) total += f.roc.auc;
  result.mean_auc = total / result.folds.size();
  return result;
}

}  // namespace sleepnet
