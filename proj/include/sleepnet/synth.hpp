#pragma once

// Ground-truth-driven synthetic data: sleep count vectors from a known
// Poisson mixture, profiles from a known network, and full event logs that
// the ingest stage turns back into the same counts and (mostly) the same
// profiles.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sleepnet/bayesnet.hpp"
#include "sleepnet/ingest.hpp"
#include "sleepnet/sleepmix.hpp"

namespace sleepnet {

struct BayesNet {
  VariableSet variables;
  Dag dag;
  CptSet cpts;
};

// Builds a CPT from rows listed in configuration order (first parent most
// significant), each row giving P(child = 1 | configuration).
Cpt binary_cpt(const VariableSet& vars, int child, std::vector<int> parents,
               const std::vector<double>& p_one);

struct GroundTruth {
  // Rows are bedtime-profile shapes; generation rescales each row so its
  // expected total matches the observed nights.
  PoissonMixtureModel mixture;
  BayesNet profile_net;  // over the nine profile variables
};

// Discretised bell over `bins` with separate left/right widths and a
// constant floor added underneath; the peak sits 1 above the floor.
std::vector<double> bell_curve(int bins, double peak, double left_width,
                               double right_width, double floor);

// Early component peaking at the 22:30 bin, late component peaking at 0:00
// with a heavier right tail; profile network with the target conditional
// magnitudes (P(S=1|video) = 0.75, P(S=1|game) = 0.5, ...).
GroundTruth default_truth();

enum class EmitKind { count_vectors, profiles, full_logs };

struct GeneratorConfig {
  int n_students = 2000;
  int n_nights = 150;
  std::uint64_t seed = 0;
  EmitKind emit = EmitKind::full_logs;
  // Expected fraction of nights with an in-window signal.
  double observed_fraction = 0.85;
  NightWindowConfig window;
  std::int64_t start_day = 17836;  // 2018-11-01
  std::optional<Cohort> cohort;    // nullopt: cohorts drawn uniformly

  void validate() const;
};

std::string synthetic_student_id(int index);

// Rates actually used for sampling: each row rescaled to sum to
// n_nights * observed_fraction.
Matrix effective_rates(const GroundTruth& truth, const GeneratorConfig& cfg);

struct SleepSample {
  std::vector<SleepCountVector> counts;
  std::vector<int> components;  // true component per student
};

// Component from the mixing weights, then Poisson counts per bin. Students
// whose total exceeds n_nights are redrawn so every vector is realisable.
SleepSample generate_sleep_data(const GroundTruth& truth,
                                const GeneratorConfig& cfg);

// Ancestral sampling through the network.
DatasetTable sample_network(const BayesNet& net, std::size_t rows,
                            std::uint64_t seed);

DatasetTable generate_profiles(const GroundTruth& truth,
                               const GeneratorConfig& cfg);

struct SyntheticLogs {
  EventStore store;
  DatasetTable profiles;  // true binary profiles
  SleepSample sleep;      // component = stay-up component iff S = 1
  std::vector<std::string> student_ids;
};

// Profiles are sampled first; each student's sleep component follows S and
// raw features are drawn from class-conditional log-normals per variable.
SyntheticLogs generate_full_logs(const GroundTruth& truth,
                                 const GeneratorConfig& cfg);

// Class medians and log-scale spread of one raw feature.
struct ClassConditional {
  double median_low;   // variable = 0
  double median_high;  // variable = 1
  double log_sigma;
  double midpoint() const;  // geometric mean of the class medians
};

struct FeatureDesign {
  ClassConditional books{3.0, 12.0, 0.35};
  ClassConditional surf_minutes{80.0, 260.0, 0.25};
  ClassConditional breakfast_fraction{0.25, 0.7, 0.25};
  // Spread of bath gaps for orderly (Ba = 1) vs irregular students.
  ClassConditional bath_jitter{1.8, 0.3, 0.3};
  ClassConditional daily_spend{16.0, 40.0, 0.2};
  ClassConditional gpa{2.6, 3.4, 0.08};
};

const FeatureDesign& default_feature_design();

}  // namespace sleepnet
