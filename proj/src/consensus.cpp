#include "sleepnet/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "sleepnet/error.hpp"
#include "sleepnet/rng.hpp"

namespace sleepnet {

void EnsembleConfig::validate() const {
  if (restarts < 1) throw DomainError("restarts must be at least 1");
  if (!(edge_probability >= 0.0 && edge_probability <= 1.0)) {
    throw DomainError("edge_probability must lie in [0, 1]");
  }
  if (!(top_fraction > 0.0 && top_fraction <= 1.0)) {
    throw DomainError("top_fraction must lie in (0, 1]");
  }
  if (null_replicas < 1) throw DomainError("null_replicas must be at least 1");
}

EnsembleResult learn_ensemble(const FamilyScorer& scorer,
                              const LayerConstraints& constraints,
                              int n_restarts, double edge_probability,
                              std::uint64_t seed) {
  if (n_restarts < 1) throw DomainError("n_restarts must be at least 1");
  EnsembleResult out;
  out.restarts = n_restarts;
  out.seed = seed;
  out.members.reserve(n_restarts);
  for (int r = 0; r < n_restarts; ++r) {
    Dag start = random_start(constraints, edge_probability,
                             derive_seed(seed, 2 * static_cast<std::uint64_t>(r)));
    auto found = hill_climb(scorer, constraints, std::move(start),
                            derive_seed(seed, 2 * static_cast<std::uint64_t>(r) + 1));
    out.members.push_back({std::move(found.dag), found.score});
  }
  return out;
}

EnsembleResult learn_ensemble(const DatasetTable& data,
                              const LayerConstraints& constraints,
                              const BdeuConfig& cfg, int n_restarts,
                              double edge_probability, std::uint64_t seed) {
  FamilyScorer scorer(data, cfg);
  return learn_ensemble(scorer, constraints, n_restarts, edge_probability, seed);
}

std::vector<ScoredDag> top_fraction(const EnsembleResult& ensemble,
                                    double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw DomainError("fraction must lie in (0, 1]");
  }
  const std::size_t size = ensemble.members.size();
  const auto keep = std::min<std::size_t>(
      size, static_cast<std::size_t>(std::ceil(fraction * size - 1e-9)));
  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double sa = ensemble.members[a].score, sb = ensemble.members[b].score;
    if (sa != sb) return sa > sb;
    const auto ka = derive_seed(ensemble.seed, a), kb = derive_seed(ensemble.seed, b);
    return ka != kb ? ka < kb : a < b;
  });
  std::vector<ScoredDag> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(ensemble.members[order[i]]);
  return out;
}

std::vector<ScoredDag> best_scoring(std::span<const ScoredDag> subset) {
  if (subset.empty()) return {};
  double best = subset.front().score;
  for (const auto& m : subset) best = std::max(best, m.score);
  const double slack = 1e-9 * std::max(1.0, std::abs(best));
  std::vector<ScoredDag> out;
  for (const auto& m : subset) {
    if (m.score >= best - slack) out.push_back(m);
  }
  return out;
}

EdgeFrequencyTable EdgeFrequencyTable::from(std::span<const ScoredDag> subset) {
  std::vector<Dag> dags;
  dags.reserve(subset.size());
  for (const auto& m : subset) dags.push_back(m.dag);
  return from_dags(dags);
}

EdgeFrequencyTable EdgeFrequencyTable::from_dags(std::span<const Dag> subset) {
  if (subset.empty()) return EdgeFrequencyTable(0);
  EdgeFrequencyTable table(subset.front().size());
  table.subset_size_ = static_cast<int>(subset.size());
  for (const auto& dag : subset) {
    if (dag.size() != table.n_) throw DomainError("DAG sizes differ");
    for (auto [u, v] : dag.edges()) ++table.counts_[u * table.n_ + v];
  }
  return table;
}

DatasetTable permute_columns(const DatasetTable& data, std::uint64_t seed) {
  DatasetTable out = data;
  for (int c = 0; c < out.cols(); ++c) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(c));
    auto& col = out.mutable_column(c);
    std::shuffle(col.begin(), col.end(), rng);
  }
  return out;
}

DatasetTable bootstrap_rows(const DatasetTable& data, std::uint64_t seed) {
  if (data.rows() == 0) return data;
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, data.rows() - 1);
  std::vector<std::size_t> rows(data.rows());
  for (auto& r : rows) r = pick(rng);
  return data.select_rows(rows);
}

NullModelResult summarize_null(std::vector<double> pooled) {
  NullModelResult out;
  out.pooled = std::move(pooled);
  if (out.pooled.empty()) return out;
  const double n = static_cast<double>(out.pooled.size());
  out.mean = std::accumulate(out.pooled.begin(), out.pooled.end(), 0.0) / n;
  double ss = 0.0;
  for (double f : out.pooled) ss += (f - out.mean) * (f - out.mean);
  out.std = std::sqrt(ss / n);
  out.threshold = out.mean + 2.0 * out.std;
  return out;
}

NullModelResult null_threshold(const DatasetTable& data,
                               const LayerConstraints& constraints,
                               const BdeuConfig& cfg,
                               const EnsembleConfig& ensemble,
                               std::uint64_t seed) {
  ensemble.validate();
  std::vector<EdgeFrequencyTable> replicas;
  std::vector<double> pooled;
  for (int r = 0; r < ensemble.null_replicas; ++r) {
    const std::uint64_t replica_seed = derive_seed(seed, static_cast<std::uint64_t>(r));
    const DatasetTable shuffled =
        ensemble.null_scheme == NullScheme::permute_columns
            ? permute_columns(data, derive_seed(replica_seed, 0))
            : bootstrap_rows(data, derive_seed(replica_seed, 0));
    FamilyScorer scorer(shuffled, cfg);
    const auto members = learn_ensemble(scorer, constraints, ensemble.restarts,
                                        ensemble.edge_probability,
                                        derive_seed(replica_seed, 1));
    const auto top = top_fraction(members, ensemble.top_fraction);
    auto table = EdgeFrequencyTable::from(top);
    for (int u = 0; u < table.size(); ++u) {
      for (int v = 0; v < table.size(); ++v) {
        if (constraints.allows(u, v)) pooled.push_back(table.count(u, v));
      }
    }
    replicas.push_back(std::move(table));
  }
  auto out = summarize_null(std::move(pooled));
  out.replicas = std::move(replicas);
  return out;
}

namespace {

// Directed graph over candidate edges that may still contain cycles.
struct CandidateGraph {
  int n;
  std::vector<std::vector<double>> weight;  // NaN = absent

  explicit CandidateGraph(int size)
      : n(size), weight(size, std::vector<double>(size, std::nan(""))) {}

  bool has(int u, int v) const { return !std::isnan(weight[u][v]); }

  // Edges of some directed cycle, or nullopt when acyclic.
  std::optional<std::vector<std::pair<int, int>>> find_cycle() const {
    std::vector<int> state(n, 0), parent(n, -1);
    for (int root = 0; root < n; ++root) {
      if (state[root]) continue;
      // Iterative DFS keeping the next child to visit per node.
      std::vector<std::pair<int, int>> stack{{root, 0}};
      state[root] = 1;
      while (!stack.empty()) {
        auto& [u, next] = stack.back();
        if (next == n) {
          state[u] = 2;
          stack.pop_back();
          continue;
        }
        const int v = next++;
        if (!has(u, v)) continue;
        if (state[v] == 1) {
          std::vector<std::pair<int, int>> cycle{{u, v}};
          for (int w = u; w != v; w = parent[w]) cycle.emplace_back(parent[w], w);
          return cycle;
        }
        if (state[v] == 0) {
          state[v] = 1;
          parent[v] = u;
          stack.emplace_back(v, 0);
        }
      }
    }
    return std::nullopt;
  }

  void repair_cycles(std::vector<DirectionDecision>& provenance) {
    while (auto cycle = find_cycle()) {
      auto weakest = cycle->front();
      for (auto e : *cycle) {
        const double w = weight[e.first][e.second];
        const double best = weight[weakest.first][weakest.second];
        if (w < best || (w == best && e > weakest)) weakest = e;
      }
      weight[weakest.first][weakest.second] = std::nan("");
      provenance.push_back({-1, -1, weakest.first, weakest.second,
                            "dropped lowest-frequency edge on a cycle"});
    }
  }

  ConsensusDag finish(double threshold, std::vector<DirectionDecision> provenance) {
    repair_cycles(provenance);
    ConsensusDag out;
    out.dag = Dag(n);
    out.threshold = threshold;
    for (int u = 0; u < n; ++u) {
      for (int v = 0; v < n; ++v) {
        if (has(u, v)) {
          out.dag.add_edge(u, v);
          out.edges.push_back({u, v, weight[u][v]});
        }
      }
    }
    out.provenance = std::move(provenance);
    return out;
  }
};

}  // namespace

ConsensusDag build_consensus(const EdgeFrequencyTable& freqs,
                             const EdgeFrequencyTable& high_score_freqs,
                             double threshold) {
  const int n = freqs.size();
  if (high_score_freqs.size() != n) {
    throw DomainError("frequency tables cover different variable sets");
  }
  CandidateGraph graph(n);
  std::vector<DirectionDecision> provenance;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      const bool forward = freqs.count(u, v) > threshold;
      const bool backward = freqs.count(v, u) > threshold;
      if (forward && backward) {
        const int hf = high_score_freqs.count(u, v), hb = high_score_freqs.count(v, u);
        const int ff = freqs.count(u, v), fb = freqs.count(v, u);
        bool keep_forward;
        std::string reason;
        if (hf != hb) {
          keep_forward = hf > hb;
          reason = "higher frequency among high-score networks";
        } else if (ff != fb) {
          keep_forward = ff > fb;
          reason = "high-score tie; higher frequency in the selected subset";
        } else {
          keep_forward = true;
          reason = "full tie; kept the direction from the lower variable index";
        }
        const auto [a, b] = keep_forward ? std::pair{u, v} : std::pair{v, u};
        graph.weight[a][b] = freqs.count(a, b);
        provenance.push_back({a, b, b, a, reason});
      } else if (forward) {
        graph.weight[u][v] = freqs.count(u, v);
      } else if (backward) {
        graph.weight[v][u] = freqs.count(v, u);
      }
    }
  }
  return graph.finish(threshold, std::move(provenance));
}

ConsensusDag merge_total_network(
    std::span<const ConsensusDag> consensus_dags,
    std::span<const EdgeFrequencyTable> high_score_freqs) {
  if (consensus_dags.empty()) throw DomainError("no consensus networks to merge");
  if (high_score_freqs.size() != consensus_dags.size()) {
    throw DomainError("one high-score table per consensus network is required");
  }
  const int n = consensus_dags.front().dag.size();
  for (const auto& c : consensus_dags) {
    if (c.dag.size() != n) throw DomainError("consensus networks differ in size");
  }
  for (const auto& h : high_score_freqs) {
    if (h.size() != n) throw DomainError("high-score tables differ in size");
  }
  const int k = static_cast<int>(consensus_dags.size());
  const int majority = (k + 1) / 2;

  CandidateGraph graph(n);
  std::vector<DirectionDecision> provenance;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      int forward = 0, backward = 0;
      long high_forward = 0, high_backward = 0;
      for (int i = 0; i < k; ++i) {
        forward += consensus_dags[i].dag.has_edge(u, v);
        backward += consensus_dags[i].dag.has_edge(v, u);
        high_forward += high_score_freqs[i].count(u, v);
        high_backward += high_score_freqs[i].count(v, u);
      }
      const int present = forward + backward;
      if (present < majority) continue;
      bool keep_forward;
      if (forward && backward) {
        std::string reason;
        if (high_forward != high_backward) {
          keep_forward = high_forward > high_backward;
          reason = "higher summed frequency among high-score networks";
        } else if (forward != backward) {
          keep_forward = forward > backward;
          reason = "high-score tie; direction present in more cohorts";
        } else {
          keep_forward = true;
          reason = "full tie; kept the direction from the lower variable index";
        }
        const auto [a, b] = keep_forward ? std::pair{u, v} : std::pair{v, u};
        provenance.push_back({a, b, b, a, reason});
      } else {
        keep_forward = forward > 0;
      }
      if (keep_forward) {
        graph.weight[u][v] = present;
      } else {
        graph.weight[v][u] = present;
      }
    }
  }
  return graph.finish(majority - 1, std::move(provenance));
}

ConsensusRun run_consensus(const DatasetTable& data,
                           const LayerConstraints& constraints,
                           const BdeuConfig& cfg,
                           const EnsembleConfig& ensemble, std::uint64_t seed) {
  ensemble.validate();
  ConsensusRun run;
  FamilyScorer scorer(data, cfg);
  run.ensemble = learn_ensemble(scorer, constraints, ensemble.restarts,
                                ensemble.edge_probability, derive_seed(seed, 0));
  run.top = top_fraction(run.ensemble, ensemble.top_fraction);
  run.frequencies = EdgeFrequencyTable::from(run.top);
  run.high_score_frequencies = EdgeFrequencyTable::from(best_scoring(run.top));
  run.null_model = null_threshold(data, constraints, cfg, ensemble,
                                  derive_seed(seed, 1));
  run.consensus = build_consensus(run.frequencies, run.high_score_frequencies,
                                  run.null_model.threshold);
  return run;
}

}  // namespace sleepnet
