#include "sleepnet/sleepmix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sleepnet/error.hpp"
#include "sleepnet/rng.hpp"

namespace sleepnet {
namespace {

constexpr double kMinComponentMass = 1e-12;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> v) {
  double hi = kNegInf;
  for (double x : v) hi = std::max(hi, x);
  if (hi == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - hi);
  return hi + std::log(sum);
}

void check_shape(std::span<const SleepCountVector> data, std::size_t bins) {
  for (const auto& s : data) {
    if (s.counts.size() != bins) {
      throw DomainError("student " + s.student_id + " has " +
                        std::to_string(s.counts.size()) + " bins, expected " +
                        std::to_string(bins));
    }
  }
}

// Rates in the form the inner loops need.
struct PreparedModel {
  Matrix log_lambda;
  std::vector<double> rate_sum;
  std::vector<double> log_mixing;

  explicit PreparedModel(const PoissonMixtureModel& model)
      : log_lambda(model.components(), model.bins()),
        rate_sum(model.components(), 0.0),
        log_mixing(model.components(), kNegInf) {
    for (std::size_t m = 0; m < model.components(); ++m) {
      for (std::size_t d = 0; d < model.bins(); ++d) {
        const double rate = model.lambda(m, d);
        if (!(rate > 0.0)) throw DomainError("Poisson rate must be positive");
        log_lambda(m, d) = std::log(rate);
        rate_sum[m] += rate;
      }
      if (model.mixing[m] > 0.0) log_mixing[m] = std::log(model.mixing[m]);
    }
  }
};

double log_factorial_sum(const SleepCountVector& s) {
  double sum = 0.0;
  for (int c : s.counts) sum += std::lgamma(c + 1.0);
  return sum;
}

// Per-component log scores ln pi_m + ln p(s_i | lambda_m) (+ prior term).
void component_scores(const SleepCountVector& s, const PreparedModel& model,
                      std::span<const double> log_priors,
                      std::vector<double>& out) {
  const std::size_t k = model.rate_sum.size();
  const double log_fact = log_factorial_sum(s);
  out.resize(k);
  for (std::size_t m = 0; m < k; ++m) {
    auto log_rates = model.log_lambda.row(m);
    double ll = -model.rate_sum[m] - log_fact;
    for (std::size_t d = 0; d < log_rates.size(); ++d) {
      if (s.counts[d] != 0) ll += s.counts[d] * log_rates[d];
    }
    out[m] = model.log_mixing[m] + ll +
             (log_priors.empty() ? 0.0 : log_priors[m]);
  }
}

std::vector<double> component_log_priors(const PoissonMixtureModel& model,
                                         const MixtureConfig& cfg) {
  std::vector<double> out(model.components(), 0.0);
  for (std::size_t m = 0; m < model.components(); ++m) {
    for (double rate : model.lambda.row(m)) {
      out[m] += log_gamma_prior(rate, cfg.alpha, cfg.beta);
    }
  }
  return out;
}

}  // namespace

void MixtureConfig::validate() const {
  if (components < 1) throw DomainError("components must be at least 1");
  if (!(alpha > 1.0)) throw DomainError("alpha must exceed 1");
  if (!(beta > 0.0)) throw DomainError("beta must be positive");
  if (max_iterations < 1) throw DomainError("max_iterations must be positive");
  if (!(tolerance > 0.0)) throw DomainError("tolerance must be positive");
  if (restarts < 1) throw DomainError("restarts must be at least 1");
}

void PoissonMixtureModel::validate() const {
  if (mixing.size() != lambda.rows()) {
    throw DomainError("mixing weight count does not match components");
  }
  double sum = 0.0;
  for (double w : mixing) {
    if (!(w >= 0.0 && w <= 1.0)) throw DomainError("mixing weight outside [0,1]");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw DomainError("mixing weights do not sum to 1");
  for (std::size_t m = 0; m < lambda.rows(); ++m) {
    for (double r : lambda.row(m)) {
      if (!(r > 0.0) || !std::isfinite(r)) {
        throw DomainError("Poisson rates must be positive and finite");
      }
    }
  }
}

double component_log_likelihood(std::span<const int> counts,
                                std::span<const double> rates) {
  if (counts.size() != rates.size()) {
    throw DomainError("count and rate vectors differ in length");
  }
  double ll = 0.0;
  for (std::size_t d = 0; d < counts.size(); ++d) {
    if (!(rates[d] > 0.0)) throw DomainError("Poisson rate must be positive");
    const double s = counts[d];
    ll += s * std::log(rates[d]) - rates[d] - std::lgamma(s + 1.0);
  }
  return ll;
}

double log_gamma_prior(double x, double alpha, double beta) {
  return alpha * std::log(beta) - std::lgamma(alpha) +
         (alpha - 1.0) * std::log(x) - beta * x;
}

double log_joint_posterior(std::span<const SleepCountVector> data,
                           const PoissonMixtureModel& model,
                           const MixtureConfig& cfg) {
  check_shape(data, model.bins());
  const PreparedModel prepared(model);
  std::vector<double> scores;
  double total = 0.0;
  for (const auto& s : data) {
    component_scores(s, prepared, {}, scores);
    total += log_sum_exp(scores);
  }
  for (double p : component_log_priors(model, cfg)) total += p;
  return total;
}

Responsibilities e_step(std::span<const SleepCountVector> data,
                        const PoissonMixtureModel& model,
                        const MixtureConfig& cfg) {
  check_shape(data, model.bins());
  std::vector<double> priors;
  if (cfg.estep == EStepVariant::paper_literal) {
    priors = component_log_priors(model, cfg);
  }
  const PreparedModel prepared(model);
  Responsibilities resp{Matrix(data.size(), model.components())};
  std::vector<double> scores;
  for (std::size_t i = 0; i < data.size(); ++i) {
    component_scores(data[i], prepared, priors, scores);
    const double norm = log_sum_exp(scores);
    if (!std::isfinite(norm)) {
      throw DomainError("all component scores underflow for student " +
                        data[i].student_id);
    }
    auto row = resp.weights.row(i);
    double sum = 0.0;
    for (std::size_t m = 0; m < scores.size(); ++m) {
      row[m] = std::exp(scores[m] - norm);
      sum += row[m];
    }
    for (double& w : row) w /= sum;
  }
  return resp;
}

PoissonMixtureModel m_step(std::span<const SleepCountVector> data,
                           const Responsibilities& resp,
                           const MixtureConfig& cfg) {
  const std::size_t n = data.size();
  const std::size_t k = resp.weights.cols();
  if (resp.weights.rows() != n) {
    throw DomainError("responsibilities do not match the data");
  }
  const std::size_t bins = n ? data.front().counts.size() : 0;
  check_shape(data, bins);

  PoissonMixtureModel model{Matrix(k, bins), std::vector<double>(k, 0.0)};
  std::vector<double> mass(k, 0.0);
  Matrix weighted_counts(k, bins);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < k; ++m) {
      const double w = resp.weights(i, m);
      mass[m] += w;
      for (std::size_t d = 0; d < bins; ++d) {
        weighted_counts(m, d) += w * data[i].counts[d];
      }
    }
  }

  double total_mass = 0.0;
  for (double w : mass) total_mass += w;
  for (std::size_t m = 0; m < k; ++m) {
    const double w = std::max(mass[m], kMinComponentMass);
    for (std::size_t d = 0; d < bins; ++d) {
      if (cfg.mstep == MStepVariant::exact_map) {
        model.lambda(m, d) =
            (weighted_counts(m, d) + cfg.alpha - 1.0) / (w + cfg.beta);
      } else {
        model.lambda(m, d) = (weighted_counts(m, d) + (cfg.alpha - 1.0) * w) /
                             ((cfg.beta + 1.0) * w);
      }
    }
    model.mixing[m] = total_mass > 0.0 ? mass[m] / total_mass : 1.0 / k;
  }
  return model;
}

Responsibilities random_responsibilities(
    std::span<const SleepCountVector> data, int components, std::uint64_t seed,
    int restart) {
  Responsibilities resp{Matrix(data.size(), components)};
  const std::uint64_t restart_seed = derive_seed(seed, restart);
  std::exponential_distribution<double> exp1(1.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    Rng rng{derive_seed(restart_seed, hash_string(data[i].student_id))};
    auto row = resp.weights.row(i);
    double sum = 0.0;
    for (double& w : row) {
      w = exp1(rng);
      sum += w;
    }
    for (double& w : row) w /= sum;
  }
  return resp;
}

FitResult run_em(std::span<const SleepCountVector> data, Responsibilities init,
                 const MixtureConfig& cfg) {
  cfg.validate();
  FitResult result;
  result.responsibilities = std::move(init);
  result.model = m_step(data, result.responsibilities, cfg);
  double previous = log_joint_posterior(data, result.model, cfg);
  if (!std::isfinite(previous)) {
    throw DomainError("non-finite objective at iteration 0");
  }
  auto& diag = result.diagnostics;
  diag.objective_trace.push_back(previous);

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    result.responsibilities = e_step(data, result.model, cfg);
    result.model = m_step(data, result.responsibilities, cfg);
    const double current = log_joint_posterior(data, result.model, cfg);
    if (!std::isfinite(current)) {
      throw DomainError("non-finite objective at iteration " +
                        std::to_string(iter));
    }
    diag.objective_trace.push_back(current);
    diag.iterations_used = iter;
    const double scale = std::max(std::abs(current), 1e-300);
    if (std::abs(current - previous) / scale < cfg.tolerance) {
      diag.converged = true;
      break;
    }
    previous = current;
  }
  // Leave responsibilities consistent with the returned model.
  result.responsibilities = e_step(data, result.model, cfg);
  return result;
}

FitResult fit(std::span<const SleepCountVector> data, const MixtureConfig& cfg) {
  cfg.validate();
  if (data.size() < static_cast<std::size_t>(cfg.components)) {
    throw DomainError("need at least as many students (" +
                      std::to_string(data.size()) + ") as components (" +
                      std::to_string(cfg.components) + ")");
  }
  if (!data.empty()) check_shape(data, data.front().counts.size());

  FitResult best;
  double best_objective = kNegInf;
  for (int r = 0; r < cfg.restarts; ++r) {
    auto run = run_em(
        data, random_responsibilities(data, cfg.components, cfg.seed, r), cfg);
    const double objective = run.diagnostics.objective_trace.back();
    if (r == 0 || objective > best_objective) {
      best_objective = objective;
      best = std::move(run);
      best.diagnostics.best_restart_index = r;
    }
  }
  return best;
}

std::string_view to_string(SleepLabel l) {
  return l == SleepLabel::stay_up ? "stay_up" : "non_stay_up";
}

int stay_up_component(const PoissonMixtureModel& model) {
  std::vector<double> centre(model.components());
  for (std::size_t m = 0; m < model.components(); ++m) {
    double num = 0.0, den = 0.0;
    auto row = model.lambda.row(m);
    for (std::size_t d = 0; d < row.size(); ++d) {
      num += d * row[d];
      den += row[d];
    }
    centre[m] = num / den;
  }
  const auto best = std::max_element(centre.begin(), centre.end());
  for (std::size_t m = 0; m < centre.size(); ++m) {
    if (static_cast<std::ptrdiff_t>(m) != best - centre.begin() &&
        std::abs(centre[m] - *best) <= 1e-12 * std::max(1.0, *best)) {
      throw DomainError(
          "components share the latest mean bedtime bin; select the stay-up "
          "component manually");
    }
  }
  return static_cast<int>(best - centre.begin());
}

Assignment assign_and_label(const Responsibilities& resp,
                            const PoissonMixtureModel& model,
                            double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw DomainError("threshold must lie strictly between 0 and 1");
  }
  if (resp.weights.cols() != model.components()) {
    throw DomainError("responsibilities do not match the model");
  }
  Assignment out;
  out.stay_up_component = stay_up_component(model);
  const std::size_t n = resp.weights.rows();
  out.stay_up_weight.resize(n);
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = resp.weights(i, out.stay_up_component);
    out.stay_up_weight[i] = w;
    out.labels[i] = w >= threshold ? SleepLabel::stay_up : SleepLabel::non_stay_up;
  }
  return out;
}

}  // namespace sleepnet
