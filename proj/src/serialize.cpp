#include "sleepnet/serialize.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "sleepnet/csv.hpp"
#include "sleepnet/error.hpp"

namespace sleepnet {

namespace {

std::string_view to_string(EStepVariant v) {
  return v == EStepVariant::standard ? "standard" : "paper_literal";
}
std::string_view to_string(MStepVariant v) {
  return v == MStepVariant::exact_map ? "exact_map" : "paper_literal";
}

std::vector<int> sorted_by_name(std::vector<int> idx, const VariableSet& vars) {
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return vars.name(a) < vars.name(b); });
  return idx;
}

Json names_of(NodeMask mask, const VariableSet& vars) {
  std::vector<std::string> names;
  for (int v : members(mask)) names.push_back(vars.name(v));
  std::sort(names.begin(), names.end());
  return names;
}

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.contains(key)) throw DomainError(std::string("JSON lacks field '") + key + "'");
  return j.at(key).get<T>();
}

}  // namespace

Json to_json(const MixtureConfig& cfg) {
  return Json{{"estep", to_string(cfg.estep)},
              {"mstep", to_string(cfg.mstep)},
              {"restarts", cfg.restarts},
              {"max_iterations", cfg.max_iterations},
              {"tolerance", cfg.tolerance},
              {"seed", cfg.seed}};
}

Json to_json(const PoissonMixtureModel& model, const MixtureConfig& cfg) {
  Json lambda = Json::array();
  for (std::size_t m = 0; m < model.components(); ++m) {
    auto row = model.lambda.row(m);
    lambda.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return Json{{"D", model.bins()},
              {"M", model.components()},
              {"alpha", cfg.alpha},
              {"beta", cfg.beta},
              {"lambda", lambda},
              {"mixing", model.mixing},
              {"variant", to_json(cfg)}};
}

PoissonMixtureModel mixture_from_json(const Json& j) {
  const auto rows = field<std::vector<std::vector<double>>>(j, "lambda");
  PoissonMixtureModel model;
  model.mixing = field<std::vector<double>>(j, "mixing");
  const auto d = rows.empty() ? 0 : rows.front().size();
  model.lambda = Matrix(rows.size(), d);
  for (std::size_t m = 0; m < rows.size(); ++m) {
    if (rows[m].size() != d) throw DomainError("ragged lambda matrix");
    std::copy(rows[m].begin(), rows[m].end(), model.lambda.row(m).begin());
  }
  if (j.contains("D") && j.at("D").get<std::size_t>() != d) {
    throw DomainError("lambda width disagrees with D");
  }
  model.validate();
  return model;
}

void write_assignments_csv(std::ostream& out,
                           std::span<const std::string> student_ids,
                           const Assignment& assignment) {
  if (student_ids.size() != assignment.labels.size()) {
    throw DomainError("one student id per assignment required");
  }
  out << "student_id,omega_stayup,label\n";
  for (std::size_t i = 0; i < student_ids.size(); ++i) {
    out << student_ids[i] << ',' << csv::format_double(assignment.stay_up_weight[i])
        << ',' << to_string(assignment.labels[i]) << '\n';
  }
}

std::map<std::string, SleepLabel> read_assignments_csv(
    const std::filesystem::path& path) {
  csv::Reader reader(path, {"student_id", "omega_stayup", "label"});
  std::map<std::string, SleepLabel> out;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    if (f.size() != 3) throw ParseError(reader.file(), reader.line_number(), "expected 3 fields");
    SleepLabel label;
    if (f[2] == to_string(SleepLabel::stay_up)) {
      label = SleepLabel::stay_up;
    } else if (f[2] == to_string(SleepLabel::non_stay_up)) {
      label = SleepLabel::non_stay_up;
    } else {
      throw ParseError(reader.file(), reader.line_number(), "unknown label");
    }
    if (!out.emplace(std::string(f[0]), label).second) {
      throw ParseError(reader.file(), reader.line_number(), "duplicate student");
    }
  }
  return out;
}

Json to_json(const Dag& dag, const VariableSet& vars) {
  Json edges = Json::array();
  for (auto [from, to] : dag.edges()) {
    edges.push_back({vars.name(from), vars.name(to)});
  }
  return Json{{"variables", vars.names()}, {"edges", edges}};
}

Dag dag_from_json(const Json& j, const VariableSet& vars) {
  if (field<std::vector<std::string>>(j, "variables") != vars.names()) {
    throw DomainError("DAG variables do not match");
  }
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : j.at("edges")) {
    edges.emplace_back(vars.index_of(e.at(0).get<std::string>()),
                       vars.index_of(e.at(1).get<std::string>()));
  }
  return Dag::from_edges(vars.size(), edges);
}

Json to_json(const CptSet& cpts, const VariableSet& vars) {
  Json out = Json::object();
  for (const auto& cpt : cpts) {
    const auto parents = sorted_by_name(cpt.parents, vars);
    Json names = Json::array();
    for (int p : parents) names.push_back(vars.name(p));
    Json rows = Json::object();
    std::vector<int> assignment(vars.size(), 0);
    const int q = cpt.configurations();
    for (int c = 0; c < q; ++c) {
      // Decode c with the lexicographically first parent most significant.
      std::string key;
      int rest = c;
      for (auto it = parents.rbegin(); it != parents.rend(); ++it) {
        assignment[*it] = rest % vars.arity(*it);
        rest /= vars.arity(*it);
      }
      for (int p : parents) {
        if (!key.empty()) key += ',';
        key += vars.name(p) + "=" + std::to_string(assignment[p]);
      }
      const int j = cpt.config_of(assignment);
      rows[key] = std::vector<double>(cpt.table.begin() + j * cpt.arity,
                                      cpt.table.begin() + (j + 1) * cpt.arity);
    }
    out[vars.name(cpt.child)] = Json{{"parents", names}, {"rows", rows}};
  }
  return out;
}

CptSet cpts_from_json(const Json& j, const VariableSet& vars) {
  CptSet cpts(vars.size());
  for (int v = 0; v < vars.size(); ++v) {
    if (!j.contains(vars.name(v))) throw DomainError("CPT missing for " + vars.name(v));
    const auto& entry = j.at(vars.name(v));
    Cpt& cpt = cpts[v];
    cpt.child = v;
    cpt.arity = vars.arity(v);
    for (const auto& name : entry.at("parents")) {
      cpt.parents.push_back(vars.index_of(name.get<std::string>()));
    }
    std::sort(cpt.parents.begin(), cpt.parents.end());
    int q = 1;
    for (int p : cpt.parents) {
      cpt.parent_arities.push_back(vars.arity(p));
      q *= vars.arity(p);
    }
    cpt.table.assign(static_cast<std::size_t>(q) * cpt.arity, 0.0);
    std::vector<int> seen(q, 0);
    std::vector<int> assignment(vars.size(), 0);
    for (const auto& [key, row] : entry.at("rows").items()) {
      std::string_view rest = key;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto item = rest.substr(0, comma);
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) throw DomainError("bad CPT row key " + key);
        long long value = 0;
        if (!csv::parse_int(item.substr(eq + 1), value)) {
          throw DomainError("bad CPT row key " + key);
        }
        assignment[vars.index_of(item.substr(0, eq))] = static_cast<int>(value);
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      }
      const auto probs = row.get<std::vector<double>>();
      if (static_cast<int>(probs.size()) != cpt.arity) {
        throw DomainError("CPT row width mismatch for " + vars.name(v));
      }
      const int c = cpt.config_of(assignment);
      std::copy(probs.begin(), probs.end(), cpt.table.begin() + c * cpt.arity);
      seen[c] = 1;
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
      throw DomainError("CPT rows incomplete for " + vars.name(v));
    }
  }
  return cpts;
}

Json to_json(const BayesNet& net) {
  Json j = to_json(net.dag, net.variables);
  j["cpts"] = to_json(net.cpts, net.variables);
  return j;
}

BayesNet bayes_net_from_json(const Json& j) {
  BayesNet net;
  net.variables = VariableSet::binary(field<std::vector<std::string>>(j, "variables"));
  net.dag = dag_from_json(j, net.variables);
  net.cpts = cpts_from_json(j.at("cpts"), net.variables);
  for (int v = 0; v < net.variables.size(); ++v) {
    std::vector<int> expected = members(net.dag.parents(v));
    if (net.cpts[v].parents != expected) {
      throw DomainError("CPT parents disagree with the DAG for " + net.variables.name(v));
    }
  }
  return net;
}

Json to_json(const NullModelResult& null_model) {
  return Json{{"replicas", null_model.replicas.size()},
              {"pooled_edges", null_model.pooled.size()},
              {"mean", null_model.mean},
              {"std", null_model.std},
              {"threshold", null_model.threshold}};
}

Json to_json(const ConsensusDag& consensus, const VariableSet& vars) {
  Json edges = Json::array();
  for (const auto& e : consensus.edges) {
    edges.push_back(Json{{"from", vars.name(e.from)},
                         {"to", vars.name(e.to)},
                         {"frequency", e.frequency}});
  }
  Json provenance = Json::array();
  auto edge_name = [&](int from, int to) -> Json {
    if (from < 0) return nullptr;
    return Json::array({vars.name(from), vars.name(to)});
  };
  for (const auto& d : consensus.provenance) {
    provenance.push_back(Json{{"kept", edge_name(d.kept_from, d.kept_to)},
                              {"dropped", edge_name(d.dropped_from, d.dropped_to)},
                              {"reason", d.reason}});
  }
  return Json{{"variables", vars.names()},
              {"edges", edges},
              {"threshold", consensus.threshold},
              {"provenance", provenance}};
}

void write_edge_frequency_csv(std::ostream& out, const EdgeFrequencyTable& freqs,
                              const EdgeFrequencyTable& high_score_freqs,
                              const VariableSet& vars) {
  out << "from,to,count,frequency,high_score_count\n";
  const double n = std::max(1, freqs.subset_size());
  for (int from = 0; from < freqs.size(); ++from) {
    for (int to = 0; to < freqs.size(); ++to) {
      if (from == to) continue;
      out << vars.name(from) << ',' << vars.name(to) << ',' << freqs.count(from, to)
          << ',' << csv::format_double(freqs.count(from, to) / n) << ','
          << high_score_freqs.count(from, to) << '\n';
    }
  }
}

void write_roc_csv(std::ostream& out, const RocCurve& roc) {
  out << "fpr,tpr\n";
  for (const auto& p : roc.points) {
    out << csv::format_double(p.fpr) << ',' << csv::format_double(p.tpr) << '\n';
  }
}

Json to_json(const GroundTruth& truth) {
  return Json{{"mixture", to_json(truth.mixture, MixtureConfig{})},
              {"profile_net", to_json(truth.profile_net)}};
}

GroundTruth truth_from_json(const Json& j) {
  GroundTruth truth;
  truth.mixture = mixture_from_json(j.at("mixture"));
  truth.profile_net = bayes_net_from_json(j.at("profile_net"));
  return truth;
}

Json to_json(const ProfileMetadata& meta) {
  Json vars = Json::array();
  for (const auto& v : meta.variables) {
    vars.push_back(Json{{"variable", v.variable},
                        {"source", v.source},
                        {"direction", v.direction},
                        {"median", v.median}});
  }
  Json excluded = Json::object();
  for (const auto& [id, reason] : meta.excluded) excluded[id] = reason;
  return Json{{"variables", vars}, {"excluded", excluded}};
}

Json neighbourhood_json(const Dag& dag, const VariableSet& vars, int target) {
  return Json{{"parents", names_of(dag.parents(target), vars)},
              {"children", names_of(dag.children(target), vars)},
              {"markov_blanket", names_of(markov_blanket(dag, target), vars)}};
}

void write_json(const std::filesystem::path& path, const Json& j) {
  auto out = csv::open_output(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
}

}  // namespace sleepnet
