#pragma once

// Poisson mixture over aggregated sleep counts, fitted by EM toward the MAP
// estimate under independent Gamma(alpha, beta) priors on every rate.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sleepnet/ingest.hpp"
#include "sleepnet/matrix.hpp"

namespace sleepnet {

enum class EStepVariant {
  standard,      // omega_im ∝ pi_m p(s_i | lambda_m)
  paper_literal  // additionally weighted by the Gamma density of lambda_m
};

enum class MStepVariant {
  exact_map,     // (sum w s + alpha - 1) / (sum w + beta)
  paper_literal  // sum w (s + alpha - 1) / ((beta + 1) sum w)
};

struct MixtureConfig {
  int components = 2;
  double alpha = 1.1;
  double beta = 0.1;
  int max_iterations = 500;
  double tolerance = 1e-8;  // relative change of the objective
  int restarts = 10;
  EStepVariant estep = EStepVariant::standard;
  MStepVariant mstep = MStepVariant::exact_map;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PoissonMixtureModel {
  Matrix lambda;                // components x bins, all entries > 0
  std::vector<double> mixing;   // sums to 1

  std::size_t components() const noexcept { return lambda.rows(); }
  std::size_t bins() const noexcept { return lambda.cols(); }
  void validate() const;
};

struct Responsibilities {
  Matrix weights;  // students x components, rows sum to 1
};

struct FitDiagnostics {
  std::vector<double> objective_trace;  // one value per completed M-step
  int iterations_used = 0;
  bool converged = false;
  int best_restart_index = 0;
};

struct FitResult {
  PoissonMixtureModel model;
  Responsibilities responsibilities;
  FitDiagnostics diagnostics;
};

// sum_d [ s_d ln(lambda_d) - lambda_d - ln(s_d!) ]
double component_log_likelihood(std::span<const int> counts,
                                std::span<const double> rates);

// Log density of Gamma(shape alpha, rate beta) at x.
double log_gamma_prior(double x, double alpha, double beta);

// Marginal log likelihood of the data plus the log Gamma prior of every rate.
double log_joint_posterior(std::span<const SleepCountVector> data,
                           const PoissonMixtureModel& model,
                           const MixtureConfig& cfg);

Responsibilities e_step(std::span<const SleepCountVector> data,
                        const PoissonMixtureModel& model,
                        const MixtureConfig& cfg);

PoissonMixtureModel m_step(std::span<const SleepCountVector> data,
                           const Responsibilities& resp,
                           const MixtureConfig& cfg);

// Single EM run from the given responsibilities.
FitResult run_em(std::span<const SleepCountVector> data, Responsibilities init,
                 const MixtureConfig& cfg);

// Responsibilities drawn uniformly from the simplex, one stream per student
// derived from (seed, restart, student_id). Reordering students therefore
// does not change anyone's starting point.
Responsibilities random_responsibilities(
    std::span<const SleepCountVector> data, int components, std::uint64_t seed,
    int restart);

FitResult fit(std::span<const SleepCountVector> data, const MixtureConfig& cfg);

enum class SleepLabel { non_stay_up, stay_up };
std::string_view to_string(SleepLabel l);

// Component with the latest rate-weighted mean bin. Throws on a tie.
int stay_up_component(const PoissonMixtureModel& model);

struct Assignment {
  int stay_up_component = 0;
  std::vector<double> stay_up_weight;  // omega for the stay-up component
  std::vector<SleepLabel> labels;
};

Assignment assign_and_label(const Responsibilities& resp,
                            const PoissonMixtureModel& model,
                            double threshold = 0.5);

}  // namespace sleepnet
