#pragma once

// JSON and CSV forms of fitted models, networks and evaluation results.

#include <filesystem>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "sleepnet/bayesnet.hpp"
#include "sleepnet/consensus.hpp"
#include "sleepnet/eval.hpp"
#include "sleepnet/profile.hpp"
#include "sleepnet/sleepmix.hpp"
#include "sleepnet/synth.hpp"

namespace sleepnet {

using Json = nlohmann::ordered_json;

Json to_json(const MixtureConfig& cfg);
Json to_json(const PoissonMixtureModel& model, const MixtureConfig& cfg);
PoissonMixtureModel mixture_from_json(const Json& j);

void write_assignments_csv(std::ostream& out,
                           std::span<const std::string> student_ids,
                           const Assignment& assignment);
std::map<std::string, SleepLabel> read_assignments_csv(
    const std::filesystem::path& path);

// {"variables":[...],"edges":[["A","T"],...]}
Json to_json(const Dag& dag, const VariableSet& vars);
Dag dag_from_json(const Json& j, const VariableSet& vars);

// Per variable: parents in lexicographic name order and one row per parent
// configuration, keyed "A=0,T=1" and enumerated in that order.
Json to_json(const CptSet& cpts, const VariableSet& vars);
CptSet cpts_from_json(const Json& j, const VariableSet& vars);

Json to_json(const BayesNet& net);
BayesNet bayes_net_from_json(const Json& j);

Json to_json(const NullModelResult& null_model);
Json to_json(const ConsensusDag& consensus, const VariableSet& vars);

// from,to,count,frequency,high_score_count for every ordered pair.
void write_edge_frequency_csv(std::ostream& out, const EdgeFrequencyTable& freqs,
                              const EdgeFrequencyTable& high_score_freqs,
                              const VariableSet& vars);

void write_roc_csv(std::ostream& out, const RocCurve& roc);

Json to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const Json& j);

Json to_json(const ProfileMetadata& meta);

// Parents, children and blanket of `target` as sorted name lists.
Json neighbourhood_json(const Dag& dag, const VariableSet& vars, int target);

// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

}  // namespace sleepnet
