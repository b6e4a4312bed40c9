#include "sleepnet/bayesnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "sleepnet/error.hpp"
#include "sleepnet/rng.hpp"

namespace sleepnet {

std::vector<int> members(NodeMask mask) {
  std::vector<int> out;
  while (mask) {
    out.push_back(std::countr_zero(mask));
    mask &= mask - 1;
  }
  return out;
}

// --- VariableSet -----------------------------------------------------------

VariableSet::VariableSet(std::vector<Variable> vars) : vars_(std::move(vars)) {
  if (vars_.size() > static_cast<std::size_t>(kMaxVariables)) {
    throw DomainError("at most 32 variables are supported");
  }
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i].arity < 2 || vars_[i].arity > 255) {
      throw DomainError("variable " + vars_[i].name + " has invalid arity");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (vars_[i].name == vars_[j].name) {
        throw DomainError("duplicate variable name " + vars_[i].name);
      }
    }
  }
}

VariableSet VariableSet::binary(std::span<const std::string_view> names) {
  std::vector<Variable> vars;
  for (auto n : names) vars.push_back({std::string(n), 2});
  return VariableSet(std::move(vars));
}

VariableSet VariableSet::binary(const std::vector<std::string>& names) {
  std::vector<Variable> vars;
  for (const auto& n : names) vars.push_back({n, 2});
  return VariableSet(std::move(vars));
}

int VariableSet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i].name == name) return static_cast<int>(i);
  }
  throw DomainError("unknown variable '" + std::string(name) + "'");
}

std::vector<std::string> VariableSet::names() const {
  std::vector<std::string> out;
  for (const auto& v : vars_) out.push_back(v.name);
  return out;
}

bool VariableSet::operator==(const VariableSet& o) const {
  return std::equal(vars_.begin(), vars_.end(), o.vars_.begin(), o.vars_.end(),
                    [](const Variable& a, const Variable& b) {
                      return a.name == b.name && a.arity == b.arity;
                    });
}

// --- DatasetTable ----------------------------------------------------------

DatasetTable::DatasetTable(VariableSet vars, std::size_t rows)
    : vars_(std::move(vars)),
      rows_(rows),
      columns_(vars_.size(), std::vector<std::uint8_t>(rows, 0)) {}

DatasetTable::DatasetTable(VariableSet vars,
                           std::vector<std::vector<std::uint8_t>> columns)
    : vars_(std::move(vars)), columns_(std::move(columns)) {
  if (columns_.size() != static_cast<std::size_t>(vars_.size())) {
    throw DomainError("column count does not match the variable set");
  }
  rows_ = columns_.empty() ? 0 : columns_.front().size();
  for (int c = 0; c < vars_.size(); ++c) {
    if (columns_[c].size() != rows_) throw DomainError("ragged dataset columns");
    for (auto v : columns_[c]) {
      if (v >= vars_.arity(c)) {
        throw DomainError("value out of range in column " + vars_.name(c));
      }
    }
  }
}

void DatasetTable::set(std::size_t row, int col, int value) {
  if (value < 0 || value >= vars_.arity(col)) {
    throw DomainError("value out of range in column " + vars_.name(col));
  }
  columns_[col][row] = static_cast<std::uint8_t>(value);
}

DatasetTable DatasetTable::select_rows(std::span<const std::size_t> rows) const {
  DatasetTable out(vars_, rows.size());
  for (int c = 0; c < cols(); ++c) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.columns_[c][i] = columns_[c][rows[i]];
    }
  }
  return out;
}

// --- Dag -------------------------------------------------------------------

Dag::Dag(int n) : parents_(n, 0) {
  if (n < 0 || n > kMaxVariables) throw DomainError("invalid DAG size");
}

Dag Dag::from_edges(int n, std::span<const std::pair<int, int>> edges) {
  Dag dag(n);
  for (auto [u, v] : edges) dag.add_edge(u, v);
  return dag;
}

NodeMask Dag::children(int v) const {
  NodeMask out = 0;
  for (int c = 0; c < size(); ++c) {
    if (parents_[c] & bit(v)) out |= bit(c);
  }
  return out;
}

bool Dag::reaches(int from, int to) const {
  if (from == to) return true;
  // Walk backwards from `to` through parent masks.
  NodeMask visited = bit(to);
  NodeMask frontier = bit(to);
  while (frontier) {
    NodeMask next = 0;
    for (NodeMask f = frontier; f; f &= f - 1) {
      next |= parents_[std::countr_zero(f)];
    }
    next &= ~visited;
    if (next & bit(from)) return true;
    visited |= next;
    frontier = next;
  }
  return false;
}

void Dag::add_edge(int from, int to) {
  if (from < 0 || to < 0 || from >= size() || to >= size()) {
    throw DomainError("edge endpoint out of range");
  }
  if (from == to) throw DomainError("self-loops are not allowed");
  if (has_edge(from, to)) return;
  if (creates_cycle(from, to)) {
    throw DomainError("edge " + std::to_string(from) + "->" +
                      std::to_string(to) + " would create a cycle");
  }
  parents_[to] |= bit(from);
}

void Dag::remove_edge(int from, int to) { parents_[to] &= ~bit(from); }

void Dag::reverse_edge(int from, int to) {
  if (!has_edge(from, to)) throw DomainError("cannot reverse a missing edge");
  remove_edge(from, to);
  try {
    add_edge(to, from);
  } catch (...) {
    parents_[to] |= bit(from);
    throw;
  }
}

std::vector<std::pair<int, int>> Dag::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int u = 0; u < size(); ++u) {
    for (int v = 0; v < size(); ++v) {
      if (has_edge(u, v)) out.emplace_back(u, v);
    }
  }
  return out;
}

int Dag::edge_count() const {
  int n = 0;
  for (auto p : parents_) n += std::popcount(p);
  return n;
}

std::vector<int> Dag::topological_order() const {
  std::vector<int> order;
  NodeMask placed = 0;
  while (static_cast<int>(order.size()) < size()) {
    for (int v = 0; v < size(); ++v) {
      if (!(placed & bit(v)) && (parents_[v] & ~placed) == 0) {
        order.push_back(v);
        placed |= bit(v);
        break;
      }
    }
  }
  return order;
}

// --- LayerConstraints ------------------------------------------------------

LayerConstraints::LayerConstraints(std::vector<int> layer)
    : layer_(std::move(layer)) {}

LayerConstraints LayerConstraints::unconstrained(int n) {
  return LayerConstraints(std::vector<int>(n, 0));
}

LayerConstraints LayerConstraints::profile_layers(const VariableSet& vars) {
  std::vector<int> layer(vars.size(), 2);
  layer[vars.index_of("G")] = 1;
  layer[vars.index_of("Ac")] = 3;
  return LayerConstraints(std::move(layer));
}

bool LayerConstraints::satisfied_by(const Dag& dag) const {
  if (dag.size() != size()) return false;
  for (auto [u, v] : dag.edges()) {
    if (!allows(u, v)) return false;
  }
  return true;
}

std::vector<std::pair<int, int>> LayerConstraints::forbidden_edges() const {
  std::vector<std::pair<int, int>> out;
  for (int u = 0; u < size(); ++u) {
    for (int v = 0; v < size(); ++v) {
      if (u != v && !allows(u, v)) out.emplace_back(u, v);
    }
  }
  return out;
}

// --- BDeu ------------------------------------------------------------------

void BdeuConfig::validate() const {
  if (!(ess > 0.0)) throw DomainError("equivalent sample size must be positive");
}

double bdeu_family_score(const DatasetTable& data, int child, NodeMask parents,
                         const BdeuConfig& cfg) {
  cfg.validate();
  if (parents & bit(child)) throw DomainError("child cannot be its own parent");
  const auto& vars = data.variables();
  const int r = vars.arity(child);
  const auto parent_list = members(parents);
  std::size_t q = 1;
  for (int p : parent_list) q *= vars.arity(p);

  std::vector<std::uint32_t> counts(q * r, 0);
  const auto child_col = data.column(child);
  std::vector<std::span<const std::uint8_t>> parent_cols;
  for (int p : parent_list) parent_cols.push_back(data.column(p));
  for (std::size_t row = 0; row < data.rows(); ++row) {
    std::size_t j = 0;
    for (std::size_t k = 0; k < parent_list.size(); ++k) {
      j = j * vars.arity(parent_list[k]) + parent_cols[k][row];
    }
    ++counts[j * r + child_col[row]];
  }

  const double a_j = cfg.ess / static_cast<double>(q);
  const double a_jk = a_j / r;
  const double lg_a_j = std::lgamma(a_j);
  const double lg_a_jk = std::lgamma(a_jk);
  double score = 0.0;
  for (std::size_t j = 0; j < q; ++j) {
    std::uint32_t n_j = 0;
    double inner = 0.0;
    for (int k = 0; k < r; ++k) {
      const auto n = counts[j * r + k];
      n_j += n;
      if (n) inner += std::lgamma(a_jk + n) - lg_a_jk;
    }
    if (n_j == 0) continue;
    score += lg_a_j - std::lgamma(a_j + n_j) + inner;
  }
  return score;
}

FamilyScorer::FamilyScorer(const DatasetTable& data, BdeuConfig cfg)
    : data_(&data), cfg_(cfg) {
  cfg_.validate();
}

double FamilyScorer::family(int child, NodeMask parents) const {
  const std::uint64_t key =
      (static_cast<std::uint64_t>(parents) << 8) | static_cast<std::uint64_t>(child);
  {
    std::shared_lock lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  const double value = bdeu_family_score(*data_, child, parents, cfg_);
  std::unique_lock lock(mutex_);
  cache_.emplace(key, value);
  return value;
}

double FamilyScorer::score(const Dag& dag) const {
  if (dag.size() != data_->cols()) {
    throw DomainError("DAG and dataset disagree on the variable count");
  }
  double total = 0.0;
  for (int v = 0; v < dag.size(); ++v) total += family(v, dag.parents(v));
  return total;
}

std::size_t FamilyScorer::cache_size() const {
  std::shared_lock lock(mutex_);
  return cache_.size();
}

double bdeu_score(const Dag& dag, const DatasetTable& data,
                  const BdeuConfig& cfg) {
  return FamilyScorer(data, cfg).score(dag);
}

// --- Search ----------------------------------------------------------------

std::vector<Move> legal_moves(const Dag& dag,
                              const LayerConstraints& constraints) {
  std::vector<Move> moves;
  const int n = dag.size();
  Dag scratch = dag;
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      if (u == v) continue;
      if (dag.has_edge(u, v)) {
        moves.push_back({Move::Kind::remove, u, v});
        if (constraints.allows(v, u)) {
          scratch.remove_edge(u, v);
          if (!scratch.reaches(u, v)) moves.push_back({Move::Kind::reverse, u, v});
          scratch.add_edge(u, v);
        }
      } else if (!dag.has_edge(v, u) && constraints.allows(u, v) &&
                 !dag.reaches(v, u)) {
        moves.push_back({Move::Kind::add, u, v});
      }
    }
  }
  return moves;
}

void apply_move(Dag& dag, const Move& move) {
  switch (move.kind) {
    case Move::Kind::add: dag.add_edge(move.from, move.to); break;
    case Move::Kind::remove: dag.remove_edge(move.from, move.to); break;
    case Move::Kind::reverse: dag.reverse_edge(move.from, move.to); break;
  }
}

double move_delta(const FamilyScorer& scorer, const Dag& dag, const Move& move) {
  const int u = move.from, v = move.to;
  const NodeMask pv = dag.parents(v);
  switch (move.kind) {
    case Move::Kind::add:
      return scorer.family(v, pv | bit(u)) - scorer.family(v, pv);
    case Move::Kind::remove:
      return scorer.family(v, pv & ~bit(u)) - scorer.family(v, pv);
    case Move::Kind::reverse: {
      const NodeMask pu = dag.parents(u);
      return scorer.family(v, pv & ~bit(u)) - scorer.family(v, pv) +
             scorer.family(u, pu | bit(v)) - scorer.family(u, pu);
    }
  }
  return 0.0;
}

SearchResult hill_climb(const FamilyScorer& scorer,
                        const LayerConstraints& constraints, Dag start,
                        std::uint64_t seed) {
  if (!constraints.satisfied_by(start)) {
    throw DomainError("hill_climb start graph violates the layer constraints");
  }
  constexpr double kMinGain = 1e-10;
  constexpr double kTieWidth = 1e-12;
  Rng rng = make_rng(seed);
  SearchResult result{std::move(start), 0.0, 0};
  std::vector<std::pair<Move, double>> scored;
  std::vector<Move> ties;
  while (true) {
    scored.clear();
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& m : legal_moves(result.dag, constraints)) {
      const double d = move_delta(scorer, result.dag, m);
      scored.emplace_back(m, d);
      best = std::max(best, d);
    }
    if (!(best > kMinGain)) break;
    ties.clear();
    for (const auto& [m, d] : scored) {
      if (d >= best - kTieWidth) ties.push_back(m);
    }
    const auto pick =
        ties.size() == 1
            ? 0
            : std::uniform_int_distribution<std::size_t>(0, ties.size() - 1)(rng);
    apply_move(result.dag, ties[pick]);
    ++result.steps;
  }
  result.score = scorer.score(result.dag);
  return result;
}

SearchResult hill_climb(const DatasetTable& data,
                        const LayerConstraints& constraints,
                        const BdeuConfig& cfg, Dag start, std::uint64_t seed) {
  FamilyScorer scorer(data, cfg);
  return hill_climb(scorer, constraints, std::move(start), seed);
}

Dag random_start(const LayerConstraints& constraints, double edge_probability,
                 std::uint64_t seed) {
  if (!(edge_probability >= 0.0 && edge_probability <= 1.0)) {
    throw DomainError("edge_probability must lie in [0, 1]");
  }
  const int n = constraints.size();
  Rng rng = make_rng(seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::bernoulli_distribution keep(edge_probability);
  Dag dag(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (constraints.allows(order[i], order[j]) && keep(rng)) {
        dag.add_edge(order[i], order[j]);
      }
    }
  }
  return dag;
}

// --- Parameters and inference ----------------------------------------------

int Cpt::config_of(std::span<const int> assignment) const {
  int j = 0;
  for (std::size_t k = 0; k < parents.size(); ++k) {
    j = j * parent_arities[k] + assignment[parents[k]];
  }
  return j;
}

int Cpt::config_of_row(const DatasetTable& data, std::size_t row) const {
  int j = 0;
  for (std::size_t k = 0; k < parents.size(); ++k) {
    j = j * parent_arities[k] + data(row, parents[k]);
  }
  return j;
}

CptSet fit_mle(const Dag& dag, const DatasetTable& data, CptFallback) {
  if (dag.size() != data.cols()) {
    throw DomainError("DAG and dataset disagree on the variable count");
  }
  const auto& vars = data.variables();
  CptSet cpts(dag.size());
  for (int v = 0; v < dag.size(); ++v) {
    Cpt& cpt = cpts[v];
    cpt.child = v;
    cpt.arity = vars.arity(v);
    cpt.parents = members(dag.parents(v));
    int q = 1;
    for (int p : cpt.parents) {
      cpt.parent_arities.push_back(vars.arity(p));
      q *= vars.arity(p);
    }
    std::vector<double> counts(static_cast<std::size_t>(q) * cpt.arity, 0.0);
    for (std::size_t row = 0; row < data.rows(); ++row) {
      counts[cpt.config_of_row(data, row) * cpt.arity + data(row, v)] += 1.0;
    }
    cpt.table.assign(counts.size(), 0.0);
    for (int j = 0; j < q; ++j) {
      double n_j = 0.0;
      for (int k = 0; k < cpt.arity; ++k) n_j += counts[j * cpt.arity + k];
      for (int k = 0; k < cpt.arity; ++k) {
        cpt.table[j * cpt.arity + k] =
            n_j > 0.0 ? counts[j * cpt.arity + k] / n_j : 1.0 / cpt.arity;
      }
    }
  }
  return cpts;
}

double joint_probability(const CptSet& cpts, std::span<const int> assignment) {
  double p = 1.0;
  for (const auto& cpt : cpts) {
    p *= cpt.prob(cpt.config_of(assignment), assignment[cpt.child]);
  }
  return p;
}

std::vector<double> posterior_query(const Dag& dag, const CptSet& cpts,
                                    const Evidence& evidence, int query) {
  const int n = dag.size();
  if (static_cast<int>(cpts.size()) != n) {
    throw DomainError("CPT set does not match the DAG");
  }
  if (query < 0 || query >= n) throw DomainError("query variable out of range");
  std::vector<int> assignment(n, 0);
  std::vector<bool> fixed(n, false);
  for (auto [var, value] : evidence) {
    if (var == query) throw DomainError("evidence must not include the query");
    if (var < 0 || var >= n || value < 0 || value >= cpts[var].arity) {
      throw DomainError("evidence out of range");
    }
    assignment[var] = value;
    fixed[var] = true;
  }
  std::vector<int> free_vars;
  double states = 1.0;
  for (int v = 0; v < n; ++v) {
    if (!fixed[v]) {
      free_vars.push_back(v);
      states *= cpts[v].arity;
    }
  }
  if (states > double(1 << 24)) {
    throw DomainError("state space too large for enumeration");
  }

  std::vector<double> dist(cpts[query].arity, 0.0);
  // Odometer over the free variables.
  while (true) {
    dist[assignment[query]] += joint_probability(cpts, assignment);
    std::size_t k = 0;
    for (; k < free_vars.size(); ++k) {
      int& value = assignment[free_vars[k]];
      if (++value < cpts[free_vars[k]].arity) break;
      value = 0;
    }
    if (k == free_vars.size()) break;
  }
  const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
  if (!(total > 0.0)) throw DomainError("impossible evidence");
  for (double& p : dist) p /= total;
  return dist;
}

NodeMask markov_blanket(const Dag& dag, int v) {
  NodeMask blanket = dag.parents(v);
  const NodeMask kids = dag.children(v);
  blanket |= kids;
  for (int c : members(kids)) blanket |= dag.parents(c);
  return blanket & ~bit(v);
}

int structural_hamming_distance(const Dag& a, const Dag& b) {
  if (a.size() != b.size()) throw DomainError("DAG sizes differ");
  int distance = 0;
  for (int u = 0; u < a.size(); ++u) {
    for (int v = u + 1; v < a.size(); ++v) {
      const int sa = a.has_edge(u, v) ? 1 : a.has_edge(v, u) ? 2 : 0;
      const int sb = b.has_edge(u, v) ? 1 : b.has_edge(v, u) ? 2 : 0;
      if (sa != sb) ++distance;
    }
  }
  return distance;
}

}  // namespace sleepnet
