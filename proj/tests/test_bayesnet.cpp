#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "sleepnet/bayesnet.hpp"
#include "sleepnet/error.hpp"
#include "sleepnet/profile.hpp"

using namespace sleepnet;

namespace {

VariableSet names(std::initializer_list<const char*> n) {
  std::vector<std::string> v(n.begin(), n.end());
  return VariableSet::binary(v);
}

VariableSet generic(int n) {
  std::vector<std::string> v;
  for (int i = 0; i < n; ++i) v.push_back("X" + std::to_string(i));
  return VariableSet::binary(v);
}

Dag dag_of(int n, std::vector<std::pair<int, int>> edges) {
  return Dag::from_edges(n, edges);
}

std::vector<std::vector<int>> to_adj(const Dag& dag) {
  std::vector<std::vector<int>> adj(dag.size(), std::vector<int>(dag.size(), 0));
  for (auto [u, v] : dag.edges()) adj[u][v] = 1;
  return adj;
}

Cpt cpt_from(const VariableSet& vars, int child, std::vector<int> parents,
             std::vector<double> p_one) {
  Cpt c;
  c.child = child;
  c.parents = std::move(parents);
  for (int p : c.parents) c.parent_arities.push_back(vars.arity(p));
  for (double p : p_one) {
    c.table.push_back(1 - p);
    c.table.push_back(p);
  }
  return c;
}

}  // namespace

TEST_SUITE("bayesnet.dag") {
  TEST_CASE("mutators refuse cycles and self-loops") {
    Dag d(3);
    d.add_edge(0, 1);
    d.add_edge(1, 2);
    CHECK_THROWS_AS(d.add_edge(2, 0), DomainError);
    CHECK_THROWS_AS(d.add_edge(1, 1), DomainError);
    CHECK(d.creates_cycle(2, 0));
    CHECK_FALSE(d.creates_cycle(0, 2));
    CHECK_THROWS_AS(dag_of(2, {{0, 1}, {1, 0}}), DomainError);
  }

  TEST_CASE("reversal, removal and accessors") {
    Dag d = dag_of(4, {{0, 2}, {1, 2}, {2, 3}});
    CHECK(d.parents(2) == (bit(0) | bit(1)));
    CHECK(d.children(2) == bit(3));
    CHECK(d.edge_count() == 3);
    d.reverse_edge(2, 3);
    CHECK(d.has_edge(3, 2));
    CHECK_FALSE(d.has_edge(2, 3));
    d.remove_edge(0, 2);
    CHECK(d.edges() == std::vector<std::pair<int, int>>{{1, 2}, {3, 2}});
  }

  TEST_CASE("topological order respects every edge") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
      const auto d = random_start(LayerConstraints::unconstrained(8), 0.4, rng());
      const auto order = d.topological_order();
      std::vector<int> pos(8);
      for (int i = 0; i < 8; ++i) pos[order[i]] = i;
      for (auto [u, v] : d.edges()) CHECK(pos[u] < pos[v]);
    }
  }

  TEST_CASE("structural Hamming distance counts pair differences") {
    const auto a = dag_of(3, {{0, 1}, {1, 2}});
    CHECK(structural_hamming_distance(a, a) == 0);
    CHECK(structural_hamming_distance(a, dag_of(3, {{1, 0}, {1, 2}})) == 1);
    CHECK(structural_hamming_distance(a, dag_of(3, {{0, 1}})) == 1);
    CHECK(structural_hamming_distance(a, dag_of(3, {{0, 2}})) == 3);
  }
}

TEST_SUITE("bayesnet.constraints") {
  const auto vars = VariableSet::binary(kProfileVariables);
  const auto layers = LayerConstraints::profile_layers(vars);

  TEST_CASE("nothing points into G and nothing leaves Ac") {
    const int g = vars.index_of("G"), ac = vars.index_of("Ac");
    for (int v = 0; v < vars.size(); ++v) {
      CHECK_FALSE(layers.allows(v, g));
      CHECK_FALSE(layers.allows(ac, v));
    }
    CHECK(layers.allows(g, ac));
    CHECK(layers.allows(vars.index_of("S"), vars.index_of("A")));
    CHECK(layers.allows(vars.index_of("A"), vars.index_of("S")));
    // 8 into G, 8 out of Ac, with G->... and ...->Ac each counted once.
    CHECK(layers.forbidden_edges().size() == 8 + 8 - 1);
  }

  TEST_CASE("empty graph: no move adds a parent to G or a child to Ac") {
    const int g = vars.index_of("G"), ac = vars.index_of("Ac");
    for (const auto& m : legal_moves(Dag(vars.size()), layers)) {
      CHECK(m.kind == Move::Kind::add);
      CHECK(m.to != g);
      CHECK(m.from != ac);
    }
  }

  TEST_CASE("an edge R->S can be deleted and reversed") {
    const int r = vars.index_of("R"), s = vars.index_of("S");
    Dag d(vars.size());
    d.add_edge(r, s);
    const auto moves = legal_moves(d, layers);
    auto has = [&](Move m) { return std::find(moves.begin(), moves.end(), m) != moves.end(); };
    CHECK(has({Move::Kind::remove, r, s}));
    CHECK(has({Move::Kind::reverse, r, s}));
    Dag e(vars.size());
    e.add_edge(vars.index_of("G"), s);
    const auto moves_e = legal_moves(e, layers);
    CHECK(std::find(moves_e.begin(), moves_e.end(),
                    Move{Move::Kind::reverse, vars.index_of("G"), s}) == moves_e.end());
  }

  TEST_CASE("a chain A->B->C offers no add(C, A)") {
    const auto d = dag_of(3, {{0, 1}, {1, 2}});
    const auto moves = legal_moves(d, LayerConstraints::unconstrained(3));
    CHECK(std::find(moves.begin(), moves.end(), Move{Move::Kind::add, 2, 0}) == moves.end());
    CHECK(std::find(moves.begin(), moves.end(), Move{Move::Kind::add, 0, 2}) != moves.end());
  }

  TEST_CASE("property: legal moves are exactly the constraint-respecting acyclic ones") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
      const auto d = random_start(layers, 0.25, rng());
      const auto moves = legal_moves(d, layers);
      std::set<std::tuple<int, int, int>> got;
      for (const auto& m : moves) got.insert({static_cast<int>(m.kind), m.from, m.to});
      std::set<std::tuple<int, int, int>> want;
      for (int u = 0; u < 9; ++u) {
        for (int v = 0; v < 9; ++v) {
          if (u == v) continue;
          auto adj = to_adj(d);
          if (adj[u][v]) {
            want.insert({static_cast<int>(Move::Kind::remove), u, v});
            adj[u][v] = 0;
            adj[v][u] = 1;
            if (layers.allows(v, u) && oracle::acyclic(adj)) {
              want.insert({static_cast<int>(Move::Kind::reverse), u, v});
            }
          } else if (!adj[v][u] && layers.allows(u, v)) {
            adj[u][v] = 1;
            if (oracle::acyclic(adj)) want.insert({static_cast<int>(Move::Kind::add), u, v});
          }
        }
      }
      CHECK(got == want);
      for (const auto& m : moves) {
        Dag next = d;
        apply_move(next, m);
        CHECK(layers.satisfied_by(next));
      }
    }
  }
}

TEST_SUITE("bayesnet.bdeu") {
  TEST_CASE("an empty dataset scores zero") {
    const DatasetTable empty(generic(3), 0);
    CHECK(bdeu_family_score(empty, 0, bit(1) | bit(2), {}) == 0.0);
    CHECK(bdeu_family_score(empty, 2, 0, {}) == 0.0);
  }

  TEST_CASE("one observation of a parentless binary variable scores ln 1/2") {
    DatasetTable one(generic(1), 1);
    one.set(0, 0, 1);
    const double closed = std::lgamma(1.0) - std::lgamma(2.0) + std::lgamma(1.5) - std::lgamma(0.5);
    CHECK(bdeu_family_score(one, 0, 0, {}) == doctest::Approx(closed).epsilon(1e-14));
    CHECK(bdeu_family_score(one, 0, 0, {}) == doctest::Approx(-0.693147).epsilon(1e-6));
  }

  TEST_CASE("property: family scores match the sequential predictive oracle") {
    std::mt19937_64 rng(17);
    const auto vars = generic(6);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t rows = rng() % 300;
      auto net = oracle::random_network(6, 0.5, rng);
      const auto data = oracle::sample(net, vars, rows, rng);
      const int child = static_cast<int>(rng() % 6);
      std::vector<int> parents;
      NodeMask mask = 0;
      for (int p = 0; p < 6; ++p) {
        if (p != child && rng() % 3 == 0) {
          parents.push_back(p);
          mask |= bit(p);
        }
      }
      const double ess = std::uniform_real_distribution<double>(0.1, 10.0)(rng);
      const double got = bdeu_family_score(data, child, mask, {ess});
      const double want = oracle::sequential_bdeu(data, child, parents, ess);
      CHECK(std::abs(got - want) <= 1e-9 * std::max(1.0, std::abs(want)));
    }
  }

  TEST_CASE("Markov-equivalent graphs score alike") {
    std::mt19937_64 rng(3);
    const auto vars = generic(3);
    for (int trial = 0; trial < 20; ++trial) {
      const auto net = oracle::random_network(3, 0.7, rng);
      const auto data = oracle::sample(net, vars, 400, rng);
      const BdeuConfig cfg{std::uniform_real_distribution<double>(0.5, 5.0)(rng)};
      CHECK(bdeu_score(dag_of(3, {{0, 1}}), data, cfg) ==
            doctest::Approx(bdeu_score(dag_of(3, {{1, 0}}), data, cfg)).epsilon(1e-12));
      const double chain = bdeu_score(dag_of(3, {{0, 1}, {1, 2}}), data, cfg);
      CHECK(bdeu_score(dag_of(3, {{2, 1}, {1, 0}}), data, cfg) == doctest::Approx(chain).epsilon(1e-12));
      CHECK(bdeu_score(dag_of(3, {{1, 0}, {1, 2}}), data, cfg) == doctest::Approx(chain).epsilon(1e-12));
      const double full = bdeu_score(dag_of(3, {{0, 1}, {0, 2}, {1, 2}}), data, cfg);
      CHECK(bdeu_score(dag_of(3, {{2, 1}, {2, 0}, {1, 0}}), data, cfg) ==
            doctest::Approx(full).epsilon(1e-12));
    }
  }

  TEST_CASE("decomposability: one edge changes only the child's family") {
    std::mt19937_64 rng(4);
    const auto vars = generic(5);
    for (int trial = 0; trial < 30; ++trial) {
      const auto net = oracle::random_network(5, 0.5, rng);
      const auto data = oracle::sample(net, vars, 250, rng);
      const Dag d = random_start(LayerConstraints::unconstrained(5), 0.4, rng());
      for (auto [u, v] : d.edges()) {
        Dag without = d;
        without.remove_edge(u, v);
        const double delta = bdeu_score(d, data, {}) - bdeu_score(without, data, {});
        const double family = bdeu_family_score(data, v, d.parents(v), {}) -
                              bdeu_family_score(data, v, without.parents(v), {});
        CHECK(delta == doctest::Approx(family).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("the empty graph is the sum of parentless families") {
    std::mt19937_64 rng(6);
    const auto vars = generic(4);
    const auto data = oracle::coin_flips(vars, 100, rng);
    double sum = 0.0;
    for (int v = 0; v < 4; ++v) sum += bdeu_family_score(data, v, 0, {});
    CHECK(bdeu_score(Dag(4), data, {}) == doctest::Approx(sum).epsilon(1e-14));
  }

  TEST_CASE("the family cache agrees with direct scoring") {
    std::mt19937_64 rng(7);
    const auto vars = generic(5);
    const auto data = oracle::coin_flips(vars, 80, rng);
    FamilyScorer scorer(data, {2.0});
    for (int trial = 0; trial < 20; ++trial) {
      const Dag d = random_start(LayerConstraints::unconstrained(5), 0.5, rng());
      CHECK(scorer.score(d) == bdeu_score(d, data, {2.0}));
    }
    CHECK(scorer.cache_size() > 0);
    CHECK_THROWS_AS(BdeuConfig{0.0}.validate(), DomainError);
  }
}

TEST_SUITE("bayesnet.search") {
  TEST_CASE("property: incremental deltas equal full rescoring") {
    std::mt19937_64 rng(8);
    const auto vars = VariableSet::binary(kProfileVariables);
    const auto layers = LayerConstraints::profile_layers(vars);
    auto net = oracle::random_network(9, 0.3, rng);
    const auto data = oracle::sample(net, vars, 300, rng);
    FamilyScorer scorer(data, {});
    Dag d(9);
    for (int step = 0; step < 200; ++step) {
      const auto moves = legal_moves(d, layers);
      const auto& m = moves[rng() % moves.size()];
      const double delta = move_delta(scorer, d, m);
      Dag next = d;
      apply_move(next, m);
      CHECK(delta == doctest::Approx(bdeu_score(next, data, {}) - bdeu_score(d, data, {}))
                         .epsilon(1e-9));
      d = next;
    }
  }

  TEST_CASE("independent coin flips at large N give the empty graph") {
    std::mt19937_64 rng(9);
    const auto vars = generic(5);
    const auto data = oracle::coin_flips(vars, 20000, rng);
    const auto r = hill_climb(data, LayerConstraints::unconstrained(5), {}, Dag(5), 1);
    CHECK(r.dag.edge_count() == 0);
  }

  TEST_CASE("a local optimum is a fixed point and the score never drops") {
    std::mt19937_64 rng(10);
    const auto vars = VariableSet::binary(kProfileVariables);
    const auto layers = LayerConstraints::profile_layers(vars);
    const auto net = oracle::random_network(9, 0.3, rng);
    const auto data = oracle::sample(net, vars, 500, rng);
    for (int trial = 0; trial < 10; ++trial) {
      const Dag start = random_start(layers, 0.2, rng());
      const auto r = hill_climb(data, layers, {}, start, rng());
      CHECK(r.score >= bdeu_score(start, data, {}) - 1e-9);
      CHECK(r.score == doctest::Approx(bdeu_score(r.dag, data, {})).epsilon(1e-12));
      CHECK(layers.satisfied_by(r.dag));
      const auto again = hill_climb(data, layers, {}, r.dag, rng());
      CHECK(again.dag == r.dag);
      CHECK(again.steps == 0);
    }
  }

  TEST_CASE("a start that breaks the constraints is rejected") {
    const auto vars = VariableSet::binary(kProfileVariables);
    const auto layers = LayerConstraints::profile_layers(vars);
    Dag bad(9);
    bad.add_edge(vars.index_of("S"), vars.index_of("G"));
    std::mt19937_64 rng(1);
    const auto data = oracle::coin_flips(vars, 10, rng);
    CHECK_THROWS_AS(hill_climb(data, layers, {}, bad, 0), DomainError);
  }

  TEST_CASE("random starts: edge probability extremes and determinism") {
    const auto none = random_start(LayerConstraints::unconstrained(6), 0.0, 3);
    CHECK(none.edge_count() == 0);
    const auto full = random_start(LayerConstraints::unconstrained(6), 1.0, 3);
    CHECK(full.edge_count() == 15);
    CHECK(random_start(LayerConstraints::unconstrained(6), 0.3, 77) ==
          random_start(LayerConstraints::unconstrained(6), 0.3, 77));
    const auto vars = VariableSet::binary(kProfileVariables);
    const auto layers = LayerConstraints::profile_layers(vars);
    for (std::uint64_t s = 0; s < 50; ++s) CHECK(layers.satisfied_by(random_start(layers, 0.5, s)));
    CHECK_THROWS_AS(random_start(layers, 1.5, 0), DomainError);
  }
}

TEST_SUITE("bayesnet.parameters") {
  TEST_CASE("MLE rows are count ratios with a uniform fallback") {
    const auto vars = names({"A", "B"});
    DatasetTable data(vars, 4);
    // A = 0 always; B = 1,1,1,0.
    for (int r = 0; r < 4; ++r) data.set(r, 1, r < 3 ? 1 : 0);
    const auto cpts = fit_mle(dag_of(2, {{0, 1}}), data);
    CHECK(cpts[1].prob(0, 1) == 0.75);
    CHECK(cpts[1].prob(0, 0) == 0.25);
    CHECK(cpts[1].prob(1, 0) == 0.5);
    CHECK(cpts[1].prob(1, 1) == 0.5);
    CHECK(cpts[0].prob(0, 0) == 1.0);
  }

  TEST_CASE("property: fitted rows sum to one") {
    std::mt19937_64 rng(11);
    const auto vars = generic(7);
    for (int trial = 0; trial < 20; ++trial) {
      const auto net = oracle::random_network(7, 0.4, rng);
      const auto data = oracle::sample(net, vars, 1 + rng() % 50, rng);
      const auto dag = random_start(LayerConstraints::unconstrained(7), 0.4, rng());
      for (const auto& cpt : fit_mle(dag, data)) {
        CHECK(cpt.configurations() == 1 << std::popcount(dag.parents(cpt.child)));
        for (int j = 0; j < cpt.configurations(); ++j) {
          CHECK(std::abs(cpt.prob(j, 0) + cpt.prob(j, 1) - 1.0) <= 1e-12);
        }
      }
    }
  }

  TEST_CASE("configuration index puts the first parent most significant") {
    const auto vars = generic(4);
    const auto c = cpt_from(vars, 3, {0, 2}, {0.1, 0.2, 0.3, 0.4});
    const std::vector<int> x{1, 0, 0, 0};
    CHECK(c.config_of(x) == 2);
    const std::vector<int> y{0, 1, 1, 0};
    CHECK(c.config_of(y) == 1);
  }
}

TEST_SUITE("bayesnet.inference") {
  const auto ab = names({"A", "B"});
  const Dag a_to_b = dag_of(2, {{0, 1}});
  const CptSet ab_cpts{cpt_from(ab, 0, {}, {0.5}), cpt_from(ab, 1, {0}, {0.2, 0.8})};

  TEST_CASE("no evidence on a root gives its marginal") {
    CHECK(posterior_query(a_to_b, ab_cpts, {}, 0)[1] == doctest::Approx(0.5));
    CHECK(posterior_query(a_to_b, ab_cpts, {}, 1)[1] == doctest::Approx(0.5));
  }

  TEST_CASE("observing B = 1 raises P(A = 1) to 0.8") {
    const auto p = posterior_query(a_to_b, ab_cpts, {{1, 1}}, 0);
    CHECK(p[1] == doctest::Approx(0.8).epsilon(1e-14));
    CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("impossible evidence and evidence on the query are errors") {
    const CptSet certain{cpt_from(ab, 0, {}, {1.0}), cpt_from(ab, 1, {0}, {0.2, 1.0})};
    try {
      posterior_query(a_to_b, certain, {{1, 0}}, 0);
      FAIL("expected impossible evidence");
    } catch (const DomainError& e) {
      CHECK(std::string(e.what()).find("impossible evidence") != std::string::npos);
    }
    CHECK_THROWS_AS(posterior_query(a_to_b, ab_cpts, {{0, 1}}, 0), DomainError);
  }

  TEST_CASE("property: full evidence is proportional to the factored joint") {
    std::mt19937_64 rng(12);
    const auto vars = generic(6);
    for (int trial = 0; trial < 30; ++trial) {
      const auto net = oracle::random_network(6, 0.5, rng);
      std::vector<std::pair<int, int>> edges;
      CptSet cpts;
      for (int v = 0; v < 6; ++v) {
        for (int p : net.parents[v]) edges.emplace_back(p, v);
        cpts.push_back(cpt_from(vars, v, net.parents[v], net.p_one[v]));
      }
      const Dag dag = Dag::from_edges(6, edges);
      std::vector<int> x(6);
      for (auto& xi : x) xi = static_cast<int>(rng() & 1);
      const int q = static_cast<int>(rng() % 6);
      Evidence ev;
      for (int v = 0; v < 6; ++v)
        if (v != q) ev.emplace_back(v, x[v]);
      auto x0 = x, x1 = x;
      x0[q] = 0;
      x1[q] = 1;
      const double j0 = oracle::joint(net, x0), j1 = oracle::joint(net, x1);
      const auto p = posterior_query(dag, cpts, ev, q);
      CHECK(p[1] == doctest::Approx(j1 / (j0 + j1)).epsilon(1e-12));
      CHECK(joint_probability(cpts, x) == doctest::Approx(oracle::joint(net, x)).epsilon(1e-13));
    }
  }

  TEST_CASE("Markov blankets") {
    CHECK(markov_blanket(Dag(3), 1) == 0);
    // A->S, B->S, S->C, D->C with S = 2.
    const auto d = dag_of(5, {{0, 2}, {1, 2}, {2, 3}, {4, 3}});
    CHECK(markov_blanket(d, 2) == (bit(0) | bit(1) | bit(3) | bit(4)));
    const auto vars = VariableSet::binary(kProfileVariables);
    auto i = [&](const char* n) { return vars.index_of(n); };
    const auto fresh = dag_of(9, {{i("A"), i("S")}, {i("T"), i("S")}, {i("S"), i("Br")},
                                  {i("S"), i("Ac")}});
    const NodeMask mb = markov_blanket(fresh, i("S"));
    for (const char* v : {"A", "T", "Br", "Ac"}) CHECK((mb & bit(i(v))) != 0);
  }
}
