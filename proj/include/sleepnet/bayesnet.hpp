#pragma once

// Discrete Bayesian networks: DAGs with layer constraints, BDeu scoring,
// greedy structure search, maximum-likelihood CPTs and exact inference.

#include <cstdint>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sleepnet {

// Bit i set <=> variable i is a member. Networks are limited to 32 nodes.
using NodeMask = std::uint32_t;
inline constexpr int kMaxVariables = 32;

inline constexpr NodeMask bit(int i) { return NodeMask{1} << i; }
std::vector<int> members(NodeMask mask);

struct Variable {
  std::string name;
  int arity = 2;
};

class VariableSet {
 public:
  VariableSet() = default;
  explicit VariableSet(std::vector<Variable> vars);
  static VariableSet binary(std::span<const std::string_view> names);
  static VariableSet binary(const std::vector<std::string>& names);

  int size() const noexcept { return static_cast<int>(vars_.size()); }
  const Variable& operator[](int i) const { return vars_[i]; }
  int arity(int i) const { return vars_[i].arity; }
  const std::string& name(int i) const { return vars_[i].name; }
  int index_of(std::string_view name) const;  // throws for unknown names
  std::vector<std::string> names() const;

  bool operator==(const VariableSet&) const;

 private:
  std::vector<Variable> vars_;
};

// N rows x n categorical columns, stored column-major.
class DatasetTable {
 public:
  DatasetTable() = default;
  DatasetTable(VariableSet vars, std::size_t rows);
  DatasetTable(VariableSet vars, std::vector<std::vector<std::uint8_t>> columns);

  const VariableSet& variables() const noexcept { return vars_; }
  std::size_t rows() const noexcept { return rows_; }
  int cols() const noexcept { return vars_.size(); }

  std::uint8_t operator()(std::size_t row, int col) const {
    return columns_[col][row];
  }
  void set(std::size_t row, int col, int value);
  std::span<const std::uint8_t> column(int col) const { return columns_[col]; }
  std::vector<std::uint8_t>& mutable_column(int col) { return columns_[col]; }

  DatasetTable select_rows(std::span<const std::size_t> rows) const;

  bool operator==(const DatasetTable&) const = default;

 private:
  VariableSet vars_;
  std::size_t rows_ = 0;
  std::vector<std::vector<std::uint8_t>> columns_;
};

// Directed acyclic graph. Mutators refuse to create cycles or self-loops.
class Dag {
 public:
  Dag() = default;
  explicit Dag(int n);
  // Throws DomainError if the edges contain a cycle.
  static Dag from_edges(int n, std::span<const std::pair<int, int>> edges);

  int size() const noexcept { return static_cast<int>(parents_.size()); }
  NodeMask parents(int v) const { return parents_[v]; }
  NodeMask children(int v) const;
  bool has_edge(int from, int to) const { return (parents_[to] & bit(from)) != 0; }
  // True when a directed path leads from `from` to `to` (including from == to).
  bool reaches(int from, int to) const;
  bool creates_cycle(int from, int to) const { return reaches(to, from); }

  void add_edge(int from, int to);
  void remove_edge(int from, int to);
  void reverse_edge(int from, int to);

  std::vector<std::pair<int, int>> edges() const;  // sorted (from, to)
  int edge_count() const;
  std::vector<int> topological_order() const;

  bool operator==(const Dag&) const = default;

 private:
  std::vector<NodeMask> parents_;
};

// Layered blacklist: u -> v is allowed iff layer(u) <= layer(v).
class LayerConstraints {
 public:
  LayerConstraints() = default;
  explicit LayerConstraints(std::vector<int> layer);
  static LayerConstraints unconstrained(int n);
  // {G} / {R, A, T, Br, Ba, F, S} / {Ac}.
  static LayerConstraints profile_layers(const VariableSet& vars);

  int size() const noexcept { return static_cast<int>(layer_.size()); }
  int layer(int v) const { return layer_[v]; }
  bool allows(int from, int to) const {
    return from != to && layer_[from] <= layer_[to];
  }
  bool satisfied_by(const Dag& dag) const;
  std::vector<std::pair<int, int>> forbidden_edges() const;

 private:
  std::vector<int> layer_;
};

struct BdeuConfig {
  double ess = 1.0;
  void validate() const;
};

// Uncached BDeu family term for `child` given `parents`.
double bdeu_family_score(const DatasetTable& data, int child, NodeMask parents,
                         const BdeuConfig& cfg);

// Caches family scores by (child, parent set). Safe for concurrent use.
class FamilyScorer {
 public:
  FamilyScorer(const DatasetTable& data, BdeuConfig cfg);

  double family(int child, NodeMask parents) const;
  double score(const Dag& dag) const;
  const DatasetTable& data() const noexcept { return *data_; }
  std::size_t cache_size() const;

 private:
  const DatasetTable* data_;
  BdeuConfig cfg_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::uint64_t, double> cache_;
};

double bdeu_score(const Dag& dag, const DatasetTable& data,
                  const BdeuConfig& cfg);

struct Move {
  enum class Kind { add, remove, reverse };
  Kind kind;
  int from;
  int to;

  bool operator==(const Move&) const = default;
};

std::vector<Move> legal_moves(const Dag& dag,
                              const LayerConstraints& constraints);
void apply_move(Dag& dag, const Move& move);
// Score change of applying `move`, touching only the affected families.
double move_delta(const FamilyScorer& scorer, const Dag& dag, const Move& move);

struct SearchResult {
  Dag dag;
  double score = 0.0;
  int steps = 0;
};

// Steepest-ascent hill climbing. Moves whose gain lies within 1e-12 of the
// best are tied and one is chosen with the seeded generator; the search stops
// once no move gains more than 1e-10.
SearchResult hill_climb(const FamilyScorer& scorer,
                        const LayerConstraints& constraints, Dag start,
                        std::uint64_t seed);
SearchResult hill_climb(const DatasetTable& data,
                        const LayerConstraints& constraints,
                        const BdeuConfig& cfg, Dag start, std::uint64_t seed);

// Random topological order; each allowed forward edge kept with probability p.
Dag random_start(const LayerConstraints& constraints, double edge_probability,
                 std::uint64_t seed);

// Conditional table for one variable. Parents are sorted by index; the
// configuration index is mixed-radix with the first parent most significant.
struct Cpt {
  int child = 0;
  std::vector<int> parents;
  std::vector<int> parent_arities;
  int arity = 2;
  std::vector<double> table;  // configurations x arity, row-major

  int configurations() const { return static_cast<int>(table.size()) / arity; }
  double prob(int config, int value) const { return table[config * arity + value]; }
  // Configuration index of `assignment` (indexed by variable).
  int config_of(std::span<const int> assignment) const;
  int config_of_row(const DatasetTable& data, std::size_t row) const;
};

using CptSet = std::vector<Cpt>;  // indexed by variable

enum class CptFallback { uniform };

CptSet fit_mle(const Dag& dag, const DatasetTable& data,
               CptFallback fallback = CptFallback::uniform);

// Product of CPT entries for a full assignment.
double joint_probability(const CptSet& cpts, std::span<const int> assignment);

using Evidence = std::vector<std::pair<int, int>>;  // (variable, value)

// Exact inference by enumerating every completion of the evidence.
std::vector<double> posterior_query(const Dag& dag, const CptSet& cpts,
                                    const Evidence& evidence, int query);

NodeMask markov_blanket(const Dag& dag, int v);

// Edge insertions, deletions and reversals separating two DAGs.
int structural_hamming_distance(const Dag& a, const Dag& b);

}  // namespace sleepnet
