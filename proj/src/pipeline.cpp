#include "sleepnet/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <functional>
#include <sstream>

#include "sleepnet/csv.hpp"
#include "sleepnet/error.hpp"
#include "sleepnet/profile.hpp"
#include "sleepnet/rng.hpp"

namespace sleepnet {

namespace fs = std::filesystem;

namespace {

constexpr int kSchemaVersion = 1;

std::string_view to_string(MedianScope s) {
  return s == MedianScope::per_cohort ? "per_cohort" : "global";
}
std::string_view to_string(EvalMode m) {
  return m == EvalMode::cross_validated ? "cross_validated" : "in_sample";
}
std::string_view to_string(StructureSource s) {
  return s == StructureSource::consensus ? "consensus" : "hill_climb";
}
std::string_view to_string(NullScheme s) {
  return s == NullScheme::permute_columns ? "permute_columns" : "bootstrap_rows";
}

int cohort_index(Cohort c) { return static_cast<int>(c); }

// Streams of the master seed, one per (stage, cohort).
std::uint64_t stage_seed(std::uint64_t master, int stage, Cohort c) {
  return derive_seed(master, static_cast<std::uint64_t>(100 * stage + cohort_index(c)));
}

fs::path cohort_dir(Cohort c) { return fs::path(std::string(to_string(c))); }

void require_file(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw IoError("missing input file " + path.string());
}

void emit_json(PipelineState& state, const fs::path& relative, Json j) {
  const fs::path path = state.config.out_dir / relative;
  fs::create_directories(path.parent_path());
  write_json(path, j);
  state.manifest.add_file(relative);
}

void emit_text(PipelineState& state, const fs::path& relative,
               const std::function<void(std::ostream&)>& body) {
  const fs::path path = state.config.out_dir / relative;
  fs::create_directories(path.parent_path());
  {
    auto out = csv::open_output(path);
    body(out);
    if (!out) throw IoError("failed writing " + path.string());
  }
  state.manifest.add_file(relative);
}

CohortSummary& summary_for(PipelineState& state, Cohort c) {
  for (auto& s : state.summaries) {
    if (s.cohort == c) return s;
  }
  CohortSummary fresh;
  fresh.cohort = c;
  state.summaries.push_back(fresh);
  std::sort(state.summaries.begin(), state.summaries.end(),
            [](const auto& a, const auto& b) { return a.cohort < b.cohort; });
  return summary_for(state, c);
}

FeatureMap load_features(const PipelineState& state) {
  const auto path = state.config.out_dir / "features.csv";
  require_file(path);
  return read_features_csv(path);
}

// Groups to process: the configured cohort, or every cohort with students.
void resolve_cohorts(PipelineState& state, const FeatureMap& features) {
  state.cohorts.clear();
  for (Cohort c : {Cohort::freshman, Cohort::sophomore, Cohort::junior}) {
    if (state.config.cohort && *state.config.cohort != c) continue;
    const bool present = std::any_of(features.begin(), features.end(), [&](const auto& kv) {
      return kv.second.cohort == c;
    });
    if (present) state.cohorts.push_back(c);
  }
  if (state.cohorts.empty()) throw DomainError("no students in the selected cohort");
}

DatasetTable load_profiles(const PipelineState& state, Cohort c) {
  const auto path = state.config.out_dir / cohort_dir(c) / "profiles.csv";
  require_file(path);
  const auto profiles = read_profiles_csv(path);
  return to_dataset(profiles);
}

std::vector<StudentProfile> table_to_profiles(const DatasetTable& table,
                                              std::span<const std::string> ids) {
  std::vector<StudentProfile> out(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out[r].student_id = ids[r];
    for (int c = 0; c < table.cols(); ++c) out[r].values[c] = table(r, c);
  }
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  window.validate();
  if (min_nights < 1) throw DomainError("min_nights must be at least 1");
  if (!(stay_up_threshold > 0.0 && stay_up_threshold < 1.0)) {
    throw DomainError("stay-up threshold must lie in (0, 1)");
  }
  mixture.validate();
  bdeu.validate();
  ensemble.validate();
  prediction.validate();
}

Json PipelineConfig::to_json() const {
  return Json{
      {"seed", seed},
      {"cohort", cohort ? std::string(sleepnet::to_string(*cohort)) : "all"},
      {"inputs",
       {{"net_sessions", inputs.net_sessions.string()},
        {"transactions", inputs.transactions.string()},
        {"borrows", inputs.borrows.string()},
        {"grades", inputs.grades.string()},
        {"demographics", inputs.demographics.string()}}},
      {"window",
       {{"start", window.window_start.str()},
        {"bin_minutes", window.bin_minutes},
        {"bins", window.bin_count},
        {"night_boundary", window.night_boundary.str()}}},
      {"min_nights", min_nights},
      {"strict_parsing", parse.strict},
      {"mixture",
       {{"components", mixture.components},
        {"alpha", mixture.alpha},
        {"beta", mixture.beta},
        {"variant", sleepnet::to_json(mixture)},
        {"stay_up_threshold", stay_up_threshold}}},
      {"median_scope", to_string(median_scope)},
      {"ess", bdeu.ess},
      {"ensemble",
       {{"restarts", ensemble.restarts},
        {"edge_probability", ensemble.edge_probability},
        {"top_fraction", ensemble.top_fraction},
        {"null_replicas", ensemble.null_replicas},
        {"null_scheme", to_string(ensemble.null_scheme)}}},
      {"prediction",
       {{"folds", prediction.folds},
        {"mode", to_string(prediction.mode)},
        {"structure", to_string(prediction.structure)}}}};
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::ingest: return "ingest";
    case Stage::sleep_fit: return "sleep-fit";
    case Stage::profile: return "profile";
    case Stage::bn_learn: return "bn-learn";
    case Stage::consensus: return "consensus";
    case Stage::predict: return "predict";
  }
  return "?";
}

// ---------------------------------------------------------------- manifest

std::string sha256_hex(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                             EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 unavailable");
  }
  std::array<char, 1 << 16> buf;
  while (in.read(buf.data(), buf.size()) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 15];
  }
  return hex;
}

Manifest::Manifest(fs::path out_dir) : dir_(std::move(out_dir)) {}

void Manifest::load() {
  std::ifstream in(dir_ / "MANIFEST");
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string kind, a, b;
    fields >> kind >> a >> b;
    if (kind == "seed") {
      long long v = 0;
      if (csv::parse_int(a, v)) seed_ = static_cast<std::uint64_t>(v);
    } else if (kind == "stage") {
      mark(a, b == "complete");
    } else if (kind == "file") {
      files_.emplace_back(b, a);
    }
  }
}

void Manifest::mark(std::string_view stage, bool complete) {
  for (auto& [name, done] : stages_) {
    if (name == stage) {
      done = complete;
      return;
    }
  }
  stages_.emplace_back(std::string(stage), complete);
}

void Manifest::add_file(const fs::path& relative) {
  const std::string key = relative.generic_string();
  const std::string digest = sha256_hex(dir_ / relative);
  for (auto& [path, d] : files_) {
    if (path == key) {
      d = digest;
      return;
    }
  }
  files_.emplace_back(key, digest);
}

std::string Manifest::text() const {
  auto rank = [](const std::string& name) {
    int r = 0;
    for (Stage s : kAllStages) {
      if (to_string(s) == name) return r;
      ++r;
    }
    return r;
  };
  auto stages = stages_;
  std::stable_sort(stages.begin(), stages.end(), [&](const auto& a, const auto& b) {
    return rank(a.first) < rank(b.first);
  });
  auto files = files_;
  std::sort(files.begin(), files.end());

  std::ostringstream out;
  out << "sleepnet-manifest 1\n";
  if (seed_) out << "seed " << *seed_ << '\n';
  for (const auto& [name, done] : stages) {
    out << "stage " << name << ' ' << (done ? "complete" : "incomplete") << '\n';
  }
  for (const auto& [path, digest] : files) out << "file " << digest << ' ' << path << '\n';
  return out.str();
}

void Manifest::save() const {
  auto out = csv::open_output(dir_ / "MANIFEST");
  out << text();
  if (!out) throw IoError("failed writing " + (dir_ / "MANIFEST").string());
}

// ------------------------------------------------------------------ stages

void run_ingest(PipelineState& state) {
  const auto& cfg = state.config;
  for (const auto* p : {&cfg.inputs.net_sessions, &cfg.inputs.transactions,
                        &cfg.inputs.borrows, &cfg.inputs.grades,
                        &cfg.inputs.demographics}) {
    if (!p->empty()) require_file(*p);
  }
  const auto parsed = parse_logs(cfg.inputs, cfg.parse);
  const int study_days = infer_study_days(parsed.store, cfg.window);
  const auto bedtimes = extract_bedtimes(parsed.store.net_sessions, cfg.window);
  const auto counts = aggregate_sleep_counts(bedtimes, cfg.window, cfg.min_nights);
  const auto features = compute_raw_features(parsed.store, study_days);

  emit_text(state, "sleep_counts.csv", [&](std::ostream& out) {
    write_sleep_counts_csv(out, counts, cfg.window.bin_count);
  });
  emit_text(state, "features.csv",
            [&](std::ostream& out) { write_features_csv(out, features); });

  auto kind = [](const KindReport& k) {
    return Json{{"loaded", k.loaded}, {"skipped", k.skipped}};
  };
  const auto& r = parsed.report;
  state.ingest_summary = Json{{"students", features.size()},
                              {"students_with_counts", counts.size()},
                              {"study_days", study_days},
                              {"bedtime_observations", bedtimes.size()},
                              {"records",
                               {{"net_sessions", kind(r.net_sessions)},
                                {"transactions", kind(r.transactions)},
                                {"borrows", kind(r.borrows)},
                                {"grades", kind(r.grades)},
                                {"demographics", kind(r.demographics)}}}};
  Json j{{"seed", cfg.seed}};
  j.update(state.ingest_summary);
  emit_json(state, "ingest.json", j);
}

void run_sleep_fit(PipelineState& state) {
  const auto& cfg = state.config;
  const auto features = load_features(state);
  resolve_cohorts(state, features);
  const auto counts_path = cfg.out_dir / "sleep_counts.csv";
  require_file(counts_path);
  const auto counts = read_sleep_counts_csv(counts_path, cfg.window.bin_count);

  for (Cohort c : state.cohorts) {
    std::vector<SleepCountVector> data;
    std::vector<std::string> ids;
    for (const auto& [id, vec] : counts) {
      auto it = features.find(id);
      if (it != features.end() && it->second.cohort == c) {
        data.push_back(vec);
        ids.push_back(id);
      }
    }
    MixtureConfig mcfg = cfg.mixture;
    mcfg.seed = stage_seed(cfg.seed, 1, c);
    const auto result = fit(data, mcfg);
    const auto assignment =
        assign_and_label(result.responsibilities, result.model, cfg.stay_up_threshold);

    Json model = to_json(result.model, mcfg);
    model["stay_up_component"] = assignment.stay_up_component;
    const auto& diag = result.diagnostics;
    model["diagnostics"] = Json{{"iterations", diag.iterations_used},
                                {"converged", diag.converged},
                                {"best_restart", diag.best_restart_index},
                                {"objective", diag.objective_trace.empty()
                                                  ? 0.0
                                                  : diag.objective_trace.back()}};
    model["seed"] = cfg.seed;
    emit_json(state, cohort_dir(c) / "mixture.json", model);
    emit_text(state, cohort_dir(c) / "assignments.csv", [&](std::ostream& out) {
      write_assignments_csv(out, ids, assignment);
    });

    auto& summary = summary_for(state, c);
    summary.stay_up = static_cast<int>(
        std::count(assignment.labels.begin(), assignment.labels.end(), SleepLabel::stay_up));
    summary.non_stay_up = static_cast<int>(assignment.labels.size()) - summary.stay_up;
  }
}

void run_profile(PipelineState& state) {
  const auto& cfg = state.config;
  const auto features = load_features(state);
  resolve_cohorts(state, features);

  std::map<Cohort, std::map<std::string, SleepLabel>> labels;
  for (Cohort c : state.cohorts) {
    const auto path = cfg.out_dir / cohort_dir(c) / "assignments.csv";
    require_file(path);
    labels[c] = read_assignments_csv(path);
  }

  auto cohort_features = [&](std::optional<Cohort> only) {
    FeatureMap out;
    for (const auto& [id, rec] : features) {
      const bool selected = std::find(state.cohorts.begin(), state.cohorts.end(),
                                      rec.cohort) != state.cohorts.end();
      if (selected && (!only || rec.cohort == *only)) out.emplace(id, rec);
    }
    return out;
  };

  std::optional<ProfileResult> pooled;
  if (cfg.median_scope == MedianScope::global) {
    std::map<std::string, SleepLabel> all;
    for (const auto& [c, l] : labels) all.insert(l.begin(), l.end());
    pooled = build_profiles(cohort_features(std::nullopt), all);
  }

  for (Cohort c : state.cohorts) {
    ProfileResult result;
    if (pooled) {
      result.metadata.variables = pooled->metadata.variables;
      for (const auto& p : pooled->profiles) {
        if (features.at(p.student_id).cohort == c) result.profiles.push_back(p);
      }
      for (const auto& [id, reason] : pooled->metadata.excluded) {
        auto it = features.find(id);
        if (it == features.end() || it->second.cohort == c) {
          result.metadata.excluded[id] = reason;
        }
      }
    } else {
      result = build_profiles(cohort_features(c), labels[c]);
    }
    emit_text(state, cohort_dir(c) / "profiles.csv", [&](std::ostream& out) {
      write_profiles_csv(out, result.profiles);
    });
    Json meta = to_json(result.metadata);
    meta["median_scope"] = to_string(cfg.median_scope);
    meta["students"] = result.profiles.size();
    meta["seed"] = cfg.seed;
    emit_json(state, cohort_dir(c) / "profile_metadata.json", meta);
    summary_for(state, c).excluded = static_cast<int>(result.metadata.excluded.size());
  }
}

void run_bn_learn(PipelineState& state) {
  const auto& cfg = state.config;
  resolve_cohorts(state, load_features(state));
  for (Cohort c : state.cohorts) {
    const auto data = load_profiles(state, c);
    const auto constraints = LayerConstraints::profile_layers(data.variables());
    const auto ensemble =
        learn_ensemble(data, constraints, cfg.bdeu, cfg.ensemble.restarts,
                       cfg.ensemble.edge_probability, stage_seed(cfg.seed, 4, c));
    const auto best = top_fraction(ensemble, 1.0 / ensemble.members.size()).front();
    Json j{{"seed", cfg.seed}, {"restarts", ensemble.restarts}, {"score", best.score}};
    j.update(to_json(best.dag, data.variables()));
    j["cpts"] = to_json(fit_mle(best.dag, data), data.variables());
    emit_json(state, cohort_dir(c) / "bn.json", j);
  }
}

void run_consensus_stage(PipelineState& state) {
  const auto& cfg = state.config;
  resolve_cohorts(state, load_features(state));
  std::vector<ConsensusDag> dags;
  std::vector<EdgeFrequencyTable> high_score;
  VariableSet vars;
  for (Cohort c : state.cohorts) {
    const auto data = load_profiles(state, c);
    vars = data.variables();
    const auto constraints = LayerConstraints::profile_layers(vars);
    const auto run = run_consensus(data, constraints, cfg.bdeu, cfg.ensemble,
                                   stage_seed(cfg.seed, 5, c));
    Json j{{"seed", cfg.seed}};
    j.update(to_json(run.consensus, vars));
    j["ensemble"] = Json{{"restarts", run.ensemble.restarts},
                         {"top_size", run.top.size()},
                         {"high_score_size", run.high_score_frequencies.subset_size()},
                         {"best_score", run.top.front().score}};
    j["null_model"] = to_json(run.null_model);
    j["cpts"] = to_json(fit_mle(run.consensus.dag, data), vars);
    emit_json(state, cohort_dir(c) / "consensus.json", j);
    emit_text(state, cohort_dir(c) / "edge_frequencies.csv", [&](std::ostream& out) {
      write_edge_frequency_csv(out, run.frequencies, run.high_score_frequencies, vars);
    });

    auto& summary = summary_for(state, c);
    summary.consensus = run.consensus.dag;
    summary.null_threshold = run.null_model.threshold;
    dags.push_back(run.consensus);
    high_score.push_back(run.high_score_frequencies);
  }
  if (dags.size() > 1) {
    state.total_network = merge_total_network(dags, high_score);
    Json j{{"seed", cfg.seed}};
    j.update(to_json(*state.total_network, vars));
    Json cohorts = Json::array();
    for (Cohort c : state.cohorts) cohorts.push_back(to_string(c));
    j["cohorts"] = cohorts;
    emit_json(state, "total_network.json", j);
  }
}

void run_predict(PipelineState& state) {
  const auto& cfg = state.config;
  resolve_cohorts(state, load_features(state));
  PredictionExperiment experiment = cfg.prediction;
  experiment.ensemble = cfg.ensemble;
  for (Cohort c : state.cohorts) {
    const auto data = load_profiles(state, c);
    const auto constraints = LayerConstraints::profile_layers(data.variables());
    const auto result = predict_sleep_experiment(data, constraints, cfg.bdeu, experiment,
                                                 stage_seed(cfg.seed, 6, c));
    auto& summary = summary_for(state, c);
    summary.auc_per_fold.clear();
    Json folds = Json::array();
    for (std::size_t f = 0; f < result.folds.size(); ++f) {
      const auto& fold = result.folds[f];
      summary.auc_per_fold.push_back(fold.roc.auc);
      const fs::path roc = cohort_dir(c) / ("roc_fold" + std::to_string(f) + ".csv");
      emit_text(state, roc, [&](std::ostream& out) { write_roc_csv(out, fold.roc); });
      folds.push_back(Json{{"auc", fold.roc.auc},
                           {"test_rows", fold.test_rows},
                           {"degenerate_blanket", fold.degenerate_blanket},
                           {"sleep_neighbourhood",
                            neighbourhood_json(fold.dag, data.variables(),
                                               data.variables().index_of(experiment.target))}});
    }
    summary.auc_mean = result.mean_auc;
    emit_json(state, cohort_dir(c) / "prediction.json",
              Json{{"seed", cfg.seed},
                   {"mode", to_string(experiment.mode)},
                   {"structure", to_string(experiment.structure)},
                   {"auc_per_fold", summary.auc_per_fold},
                   {"auc_mean", result.mean_auc},
                   {"folds", folds}});
  }
}

Json build_report(const PipelineState& state) {
  const auto vars = VariableSet::binary(kProfileVariables);
  const int s = vars.index_of(state.config.prediction.target);

  Json clusters = Json::array();
  Json membership = Json::array();
  Json consensus = Json::array();
  Json prediction = Json::array();
  for (const auto& summary : state.summaries) {
    const std::string cohort(to_string(summary.cohort));
    clusters.push_back(Json{{"cohort", cohort},
                            {"non_stay_up", summary.non_stay_up},
                            {"stay_up", summary.stay_up},
                            {"total", summary.non_stay_up + summary.stay_up}});

    const Dag& dag = summary.consensus;
    if (dag.size() == vars.size()) {
      Json row{{"cohort", cohort}};
      const NodeMask blanket = markov_blanket(dag, s);
      for (int v = 0; v < vars.size(); ++v) {
        if (v == s) continue;
        std::string role;
        if (dag.has_edge(v, s)) {
          role = "parent";
        } else if (dag.has_edge(s, v)) {
          role = "child";
        } else if (blanket & bit(v)) {
          role = "spouse";
        }
        row[vars.name(v)] = role;
      }
      membership.push_back(row);
      Json c = to_json(dag, vars);
      c.erase("variables");
      c["cohort"] = cohort;
      c["null_threshold"] = summary.null_threshold;
      c["sleep_neighbourhood"] = neighbourhood_json(dag, vars, s);
      consensus.push_back(c);
    }
    if (!summary.auc_per_fold.empty()) {
      prediction.push_back(Json{{"cohort", cohort},
                                {"auc_per_fold", summary.auc_per_fold},
                                {"auc_mean", summary.auc_mean}});
    }
  }

  Json total = nullptr;
  if (state.total_network) {
    total = Json::array();
    for (const auto& e : state.total_network->edges) {
      total.push_back(Json{{"from", vars.name(e.from)},
                           {"to", vars.name(e.to)},
                           {"cohorts", e.frequency}});
    }
  }

  return Json{{"schema_version", kSchemaVersion},
              {"seed", state.config.seed},
              {"config", state.config.to_json()},
              {"ingest", state.ingest_summary},
              {"cluster_sizes", clusters},
              {"sleep_membership", membership},
              {"consensus", consensus},
              {"total_network", total},
              {"prediction", prediction}};
}

StageOutcome run_stages(const PipelineConfig& config, std::span<const Stage> stages,
                        bool write_report) {
  PipelineState state{config, Manifest(config.out_dir), {}, {}, std::nullopt, Json::object()};
  try {
    config.validate();
    fs::create_directories(config.out_dir);
  } catch (const std::exception& e) {
    return {2, std::string("configuration: ") + e.what()};
  }
  if (!write_report) state.manifest.load();
  state.manifest.set_seed(config.seed);

  for (std::size_t i = 0; i < stages.size(); ++i) {
    const Stage stage = stages[i];
    int code = 0;
    std::string message;
    try {
      switch (stage) {
        case Stage::ingest: run_ingest(state); break;
        case Stage::sleep_fit: run_sleep_fit(state); break;
        case Stage::profile: run_profile(state); break;
        case Stage::bn_learn: run_bn_learn(state); break;
        case Stage::consensus: run_consensus_stage(state); break;
        case Stage::predict: run_predict(state); break;
      }
    } catch (const IoError& e) {
      code = 2;
      message = e.what();
    } catch (const ParseError& e) {
      code = 2;
      message = e.what();
    } catch (const fs::filesystem_error& e) {
      code = 2;
      message = e.what();
    } catch (const std::exception& e) {
      code = 1;
      message = e.what();
    }
    state.manifest.mark(to_string(stage), code == 0);
    if (code != 0) {
      for (std::size_t k = i + 1; k < stages.size(); ++k) {
        state.manifest.mark(to_string(stages[k]), false);
      }
      try {
        state.manifest.save();
      } catch (const std::exception&) {
      }
      return {code, "stage " + std::string(to_string(stage)) + " failed: " + message};
    }
    try {
      state.manifest.save();
    } catch (const std::exception& e) {
      return {2, e.what()};
    }
  }

  if (write_report) {
    try {
      emit_json(state, "report.json", build_report(state));
      state.manifest.save();
    } catch (const std::exception& e) {
      return {2, std::string("report: ") + e.what()};
    }
  }
  return {0, ""};
}

// ------------------------------------------------------------------- synth

StageOutcome run_synth(const SynthOptions& options) {
  PipelineConfig dummy;
  dummy.out_dir = options.out_dir;
  dummy.seed = options.generator.seed;
  PipelineState state{dummy, Manifest(options.out_dir), {}, {}, std::nullopt, Json::object()};
  try {
    options.generator.validate();
    fs::create_directories(options.out_dir);
    state.manifest.set_seed(options.generator.seed);

    GroundTruth truth = default_truth();
    if (!options.truth_path.empty()) {
      require_file(options.truth_path);
      truth = truth_from_json(read_json(options.truth_path));
    }
    const auto& g = options.generator;
    std::vector<std::string> ids;
    for (int i = 0; i < g.n_students; ++i) ids.push_back(synthetic_student_id(i));

    auto write_counts = [&](const SleepSample& sample, const char* name) {
      SleepCountMap counts;
      for (const auto& v : sample.counts) counts.emplace(v.student_id, v);
      emit_text(state, name, [&](std::ostream& out) {
        write_sleep_counts_csv(out, counts, g.window.bin_count);
      });
      emit_text(state, "true_components.csv", [&](std::ostream& out) {
        out << "student_id,component\n";
        for (std::size_t i = 0; i < sample.counts.size(); ++i) {
          out << sample.counts[i].student_id << ',' << sample.components[i] << '\n';
        }
      });
    };

    switch (g.emit) {
      case EmitKind::count_vectors:
        write_counts(generate_sleep_data(truth, g), "sleep_counts.csv");
        break;
      case EmitKind::profiles: {
        const auto table = generate_profiles(truth, g);
        emit_text(state, "profiles.csv", [&](std::ostream& out) {
          write_profiles_csv(out, table_to_profiles(table, ids));
        });
        break;
      }
      case EmitKind::full_logs: {
        const auto logs = generate_full_logs(truth, g);
        const auto paths = LogPaths::in_directory(options.out_dir);
        write_logs(logs.store, paths);
        for (const auto& p : {paths.net_sessions, paths.transactions, paths.borrows,
                              paths.grades, paths.demographics}) {
          state.manifest.add_file(p.filename());
        }
        write_counts(logs.sleep, "true_sleep_counts.csv");
        emit_text(state, "true_profiles.csv", [&](std::ostream& out) {
          write_profiles_csv(out, table_to_profiles(logs.profiles, logs.student_ids));
        });
        break;
      }
    }

    Json j = to_json(truth);
    const Matrix rates = effective_rates(truth, g);
    Json effective = Json::array();
    for (std::size_t m = 0; m < rates.rows(); ++m) {
      auto row = rates.row(m);
      effective.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["effective_lambda"] = effective;
    j["stay_up_component"] = stay_up_component(truth.mixture);
    j["generator"] = Json{{"seed", g.seed},
                          {"n_students", g.n_students},
                          {"n_nights", g.n_nights},
                          {"observed_fraction", g.observed_fraction},
                          {"start_date", format_date(g.start_day)}};
    emit_json(state, "truth.json", j);
    state.manifest.mark("synth", true);
    state.manifest.save();
  } catch (const IoError& e) {
    return {2, std::string("stage synth failed: ") + e.what()};
  } catch (const ParseError& e) {
    return {2, std::string("stage synth failed: ") + e.what()};
  } catch (const std::exception& e) {
    return {1, std::string("stage synth failed: ") + e.what()};
  }
  return {0, ""};
}

}  // namespace sleepnet
