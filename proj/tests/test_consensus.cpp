#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "sleepnet/consensus.hpp"
#include "sleepnet/error.hpp"
#include "sleepnet/profile.hpp"
#include "sleepnet/rng.hpp"

using namespace sleepnet;

namespace {

VariableSet generic(int n) {
  std::vector<std::string> v;
  for (int i = 0; i < n; ++i) v.push_back("X" + std::to_string(i));
  return VariableSet::binary(v);
}

EdgeFrequencyTable table(int n, std::vector<std::tuple<int, int, int>> counts, int subset = 10) {
  EdgeFrequencyTable t(n);
  for (auto [u, v, c] : counts) t.set(u, v, c);
  t.set_subset_size(subset);
  return t;
}

}  // namespace

TEST_SUITE("consensus.ensemble") {
  TEST_CASE("ensembles are reproducible and sized by the restart count") {
    std::mt19937_64 rng(1);
    const auto vars = generic(5);
    const auto net = oracle::random_network(5, 0.5, rng);
    const auto data = oracle::sample(net, vars, 300, rng);
    const auto layers = LayerConstraints::unconstrained(5);
    const auto a = learn_ensemble(data, layers, {}, 12, 0.15, 42);
    const auto b = learn_ensemble(data, layers, {}, 12, 0.15, 42);
    REQUIRE(a.members.size() == 12);
    for (std::size_t i = 0; i < 12; ++i) {
      CHECK(a.members[i].dag == b.members[i].dag);
      CHECK(a.members[i].score == b.members[i].score);
      CHECK(a.members[i].score == doctest::Approx(bdeu_score(a.members[i].dag, data, {})).epsilon(1e-12));
    }
    CHECK_THROWS_AS(learn_ensemble(data, layers, {}, 0, 0.15, 42), DomainError);
  }

  TEST_CASE("restart r reproduces a single climb from its derived seeds") {
    std::mt19937_64 rng(2);
    const auto vars = generic(4);
    const auto data = oracle::sample(oracle::random_network(4, 0.6, rng), vars, 200, rng);
    const auto layers = LayerConstraints::unconstrained(4);
    const auto e = learn_ensemble(data, layers, {}, 5, 0.3, 9);
    for (int r = 0; r < 5; ++r) {
      const auto start = random_start(layers, 0.3, derive_seed(9, 2 * r));
      const auto single = hill_climb(data, layers, {}, start, derive_seed(9, 2 * r + 1));
      CHECK(single.dag == e.members[r].dag);
    }
  }

  TEST_CASE("the top fraction takes the ceiling and the best scores") {
    EnsembleResult e;
    for (int i = 0; i < 10; ++i) e.members.push_back({Dag(2), -static_cast<double>(i)});
    e.restarts = 10;
    const auto top = top_fraction(e, 1.0 / 3.0);
    REQUIRE(top.size() == 4);
    std::vector<double> scores;
    for (const auto& m : top) scores.push_back(m.score);
    std::sort(scores.begin(), scores.end());
    CHECK(scores == std::vector<double>{-3, -2, -1, 0});
    CHECK(top_fraction(e, 1.0).size() == 10);
    CHECK_THROWS_AS(top_fraction(e, 0.0), DomainError);
  }

  TEST_CASE("the high-score subset holds every member tied at the best score") {
    Dag a(2), b(2);
    b.add_edge(0, 1);
    std::vector<ScoredDag> subset{{a, -10.0}, {b, -10.0}, {a, -12.0}};
    CHECK(best_scoring(subset).size() == 2);
    subset[1].score = -10.5;
    CHECK(best_scoring(subset).size() == 1);
  }

  TEST_CASE("frequency tables count edges over the subset") {
    Dag a(3), b(3);
    a.add_edge(0, 1);
    b.add_edge(0, 1);
    b.add_edge(2, 1);
    std::vector<ScoredDag> s{{a, 0}, {b, 0}};
    const auto t = EdgeFrequencyTable::from(s);
    CHECK(t.subset_size() == 2);
    CHECK(t.count(0, 1) == 2);
    CHECK(t.count(2, 1) == 1);
    CHECK(t.count(1, 0) == 0);
  }
}

TEST_SUITE("consensus.null") {
  TEST_CASE("threshold is mean plus two population standard deviations") {
    const auto r = summarize_null({0, 0, 2, 2, 4, 4});
    CHECK(r.mean == doctest::Approx(2.0));
    const double sd = std::sqrt(8.0 / 3.0);
    CHECK(r.std == doctest::Approx(sd));
    CHECK(r.threshold == doctest::Approx(2.0 + 2 * sd));
  }

  TEST_CASE("column permutation keeps every marginal") {
    std::mt19937_64 rng(3);
    const auto vars = generic(6);
    const auto data = oracle::sample(oracle::random_network(6, 0.5, rng), vars, 500, rng);
    const auto p = permute_columns(data, 11);
    CHECK(p.rows() == data.rows());
    for (int c = 0; c < 6; ++c) {
      int a = 0, b = 0;
      for (std::size_t r = 0; r < data.rows(); ++r) {
        a += data(r, c);
        b += p(r, c);
      }
      CHECK(a == b);
    }
    const auto q = permute_columns(data, 11);
    for (std::size_t r = 0; r < data.rows(); ++r)
      for (int c = 0; c < 6; ++c) CHECK(p(r, c) == q(r, c));
    CHECK(bootstrap_rows(data, 4).rows() == data.rows());
  }

  TEST_CASE("replica count and pooled size follow the configuration") {
    std::mt19937_64 rng(4);
    const auto vars = VariableSet::binary(kProfileVariables);
    const auto layers = LayerConstraints::profile_layers(vars);
    const auto data = oracle::coin_flips(vars, 200, rng);
    EnsembleConfig cfg;
    cfg.restarts = 6;
    cfg.null_replicas = 3;
    const auto r = null_threshold(data, layers, {}, cfg, 5);
    CHECK(r.replicas.size() == 3);
    // 72 ordered pairs less 15 forbidden, per replica.
    CHECK(r.pooled.size() == 3 * 57);
    CHECK(r.threshold >= r.mean);
  }
}

TEST_SUITE("consensus.build") {
  TEST_CASE("only edges strictly above the threshold survive") {
    const auto f = table(3, {{0, 1, 5}, {1, 2, 4}});
    const auto c = build_consensus(f, table(3, {}), 4.0);
    CHECK(c.dag.edges() == std::vector<std::pair<int, int>>{{0, 1}});
    CHECK(c.edges.size() == 1);
    CHECK(c.threshold == 4.0);
  }

  TEST_CASE("opposite directions resolve by high-score frequency, then subset frequency") {
    auto c = build_consensus(table(2, {{0, 1, 6}, {1, 0, 5}}), table(2, {{1, 0, 2}}), 1.0);
    CHECK(c.dag.has_edge(1, 0));
    REQUIRE(c.provenance.size() == 1);
    CHECK(c.provenance[0].dropped_from == 0);
    c = build_consensus(table(2, {{0, 1, 5}, {1, 0, 6}}), table(2, {}), 1.0);
    CHECK(c.dag.has_edge(1, 0));
    CHECK(c.provenance[0].reason.find("selected subset") != std::string::npos);
    c = build_consensus(table(2, {{0, 1, 5}, {1, 0, 5}}), table(2, {}), 1.0);
    CHECK(c.dag.has_edge(0, 1));
  }

  TEST_CASE("a surviving cycle loses its weakest edge") {
    const auto f = table(3, {{0, 1, 9}, {1, 2, 8}, {2, 0, 7}});
    const auto c = build_consensus(f, table(3, {}), 1.0);
    CHECK(c.dag.edges() == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
    CHECK(c.provenance.back().dropped_from == 2);
    CHECK(c.provenance.back().dropped_to == 0);
  }

  TEST_CASE("merging keeps pairs present in a majority of cohorts") {
    auto make = [](std::vector<std::pair<int, int>> e) {
      ConsensusDag c;
      c.dag = Dag::from_edges(3, e);
      return c;
    };
    std::vector<ConsensusDag> dags{make({{0, 1}, {1, 2}}), make({{1, 0}}), make({{0, 2}})};
    std::vector<EdgeFrequencyTable> high{table(3, {{0, 1, 1}}), table(3, {{1, 0, 3}}), table(3, {})};
    const auto m = merge_total_network(dags, high);
    CHECK(m.dag.edges() == std::vector<std::pair<int, int>>{{1, 0}});
    CHECK_THROWS_AS(merge_total_network(std::span<const ConsensusDag>{}, high), DomainError);
  }
}

TEST_SUITE("consensus.run") {
  TEST_CASE("a strong chain is recovered and the run is deterministic") {
    std::mt19937_64 rng(6);
    const auto vars = generic(4);
    oracle::Network net;
    net.n = 4;
    net.parents = {{}, {0}, {1}, {}};
    net.p_one = {{0.5}, {0.15, 0.85}, {0.2, 0.8}, {0.5}};
    const auto data = oracle::sample(net, vars, 2000, rng);
    EnsembleConfig cfg;
    cfg.restarts = 30;
    cfg.null_replicas = 3;
    const auto layers = LayerConstraints::unconstrained(4);
    const auto a = run_consensus(data, layers, {}, cfg, 7);
    const auto b = run_consensus(data, layers, {}, cfg, 7);
    CHECK(a.consensus.dag == b.consensus.dag);
    CHECK(a.null_model.threshold == b.null_model.threshold);
    CHECK(a.top.size() == 10);
    const auto& d = a.consensus.dag;
    CHECK((d.has_edge(0, 1) || d.has_edge(1, 0)));
    CHECK((d.has_edge(1, 2) || d.has_edge(2, 1)));
    CHECK(d.parents(3) == 0);
    CHECK(d.children(3) == 0);
  }

  TEST_CASE("configuration bounds are enforced") {
    EnsembleConfig c;
    CHECK_NOTHROW(c.validate());
    c.top_fraction = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = {};
    c.null_replicas = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = {};
    c.edge_probability = -0.1;
    CHECK_THROWS_AS(c.validate(), DomainError);
  }
}
