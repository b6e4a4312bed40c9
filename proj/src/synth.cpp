#include "sleepnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "sleepnet/error.hpp"
#include "sleepnet/profile.hpp"
#include "sleepnet/rng.hpp"

namespace sleepnet {

Cpt binary_cpt(const VariableSet& vars, int child, std::vector<int> parents,
               const std::vector<double>& p_one) {
  if (!std::is_sorted(parents.begin(), parents.end())) {
    throw DomainError("binary_cpt parents must be sorted by index");
  }
  Cpt cpt;
  cpt.child = child;
  cpt.arity = 2;
  cpt.parents = std::move(parents);
  std::size_t q = 1;
  for (int p : cpt.parents) {
    cpt.parent_arities.push_back(vars.arity(p));
    q *= vars.arity(p);
  }
  if (p_one.size() != q) throw DomainError("wrong number of CPT rows");
  for (double p : p_one) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("CPT entry outside [0,1]");
    cpt.table.push_back(1.0 - p);
    cpt.table.push_back(p);
  }
  return cpt;
}

std::vector<double> bell_curve(int bins, double peak, double left_width,
                               double right_width, double floor) {
  std::vector<double> out(bins);
  for (int d = 0; d < bins; ++d) {
    const double w = d < peak ? left_width : right_width;
    const double z = (d - peak) / w;
    out[d] = floor + std::exp(-0.5 * z * z);
  }
  return out;
}

GroundTruth default_truth() {
  GroundTruth truth;
  constexpr int kBins = 16;
  const auto early = bell_curve(kBins, 3.0, 1.2, 1.5, 0.1);
  const auto late = bell_curve(kBins, 6.0, 1.5, 3.0, 0.1);
  truth.mixture.lambda = Matrix(2, kBins);
  for (int d = 0; d < kBins; ++d) {
    truth.mixture.lambda(0, d) = early[d];
    truth.mixture.lambda(1, d) = late[d];
  }
  // Overall stay-up share across all cohorts: 2185 of 4249.
  truth.mixture.mixing = {2064.0 / 4249.0, 2185.0 / 4249.0};

  auto& net = truth.profile_net;
  net.variables = VariableSet::binary(kProfileVariables);
  const auto& vars = net.variables;
  const int G = vars.index_of("G"), R = vars.index_of("R"),
            A = vars.index_of("A"), T = vars.index_of("T"),
            Br = vars.index_of("Br"), Ba = vars.index_of("Ba"),
            F = vars.index_of("F"), Ac = vars.index_of("Ac"),
            S = vars.index_of("S");
  const std::vector<std::pair<int, int>> edges{
      {G, A}, {G, F}, {A, T}, {A, S}, {T, S}, {S, Br}, {S, Ac}, {R, Ac}};
  net.dag = Dag::from_edges(vars.size(), edges);
  net.cpts.resize(vars.size());
  net.cpts[G] = binary_cpt(vars, G, {}, {0.5});
  net.cpts[R] = binary_cpt(vars, R, {}, {0.5});
  net.cpts[A] = binary_cpt(vars, A, {G}, {0.3, 0.6});
  // Long surfing: 0.57 for game fans, 0.25 for video fans.
  net.cpts[T] = binary_cpt(vars, T, {A}, {0.57, 0.25});
  // Rows (A, T); marginal over T gives 0.5 for game fans and 0.75 for video.
  net.cpts[S] = binary_cpt(vars, S, {A, T}, {0.614, 0.414, 0.78, 0.66});
  // Staying up lowers the breakfast probability by 0.2.
  net.cpts[Br] = binary_cpt(vars, Br, {S}, {0.6, 0.4});
  net.cpts[Ba] = binary_cpt(vars, Ba, {}, {0.5});
  net.cpts[F] = binary_cpt(vars, F, {G}, {0.45, 0.55});
  // Rows (R, S): early sleepers and readers do better.
  net.cpts[Ac] = binary_cpt(vars, Ac, {R, S}, {0.55, 0.35, 0.7, 0.5});
  return truth;
}

void GeneratorConfig::validate() const {
  if (n_students < 1) throw DomainError("n_students must be at least 1");
  if (n_nights < 1) throw DomainError("n_nights must be at least 1");
  if (!(observed_fraction > 0.0 && observed_fraction <= 1.0)) {
    throw DomainError("observed_fraction must lie in (0, 1]");
  }
  window.validate();
}

std::string synthetic_student_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "u%05d", index);
  return buf;
}

Matrix effective_rates(const GroundTruth& truth, const GeneratorConfig& cfg) {
  Matrix rates = truth.mixture.lambda;
  const double target = cfg.n_nights * cfg.observed_fraction;
  for (std::size_t m = 0; m < rates.rows(); ++m) {
    auto row = rates.row(m);
    const double sum = std::accumulate(row.begin(), row.end(), 0.0);
    for (double& r : row) r *= target / sum;
  }
  return rates;
}

namespace {

std::vector<int> draw_counts(std::span<const double> rates, int max_total,
                             Rng& rng) {
  std::vector<int> counts(rates.size());
  for (int attempt = 0; attempt < 10000; ++attempt) {
    int total = 0;
    for (std::size_t d = 0; d < rates.size(); ++d) {
      counts[d] = std::poisson_distribution<int>(rates[d])(rng);
      total += counts[d];
    }
    if (total <= max_total) return counts;
  }
  throw DomainError("could not draw a count vector within the night budget");
}

int draw_component(std::span<const double> mixing, Rng& rng) {
  std::discrete_distribution<int> pick(mixing.begin(), mixing.end());
  return pick(rng);
}

// Component consistent with a binary sleep variable.
int component_for_sleep(int s, int stay_up, std::span<const double> mixing,
                        Rng& rng) {
  if (s == 1) return stay_up;
  std::vector<double> others(mixing.begin(), mixing.end());
  others[stay_up] = 0.0;
  if (std::accumulate(others.begin(), others.end(), 0.0) <= 0.0) {
    throw DomainError("mixture has no non-stay-up component");
  }
  return draw_component(others, rng);
}

double draw_log_normal(const ClassConditional& c, int cls, Rng& rng) {
  const double median = cls ? c.median_high : c.median_low;
  std::normal_distribution<double> z(0.0, 1.0);
  return median * std::exp(c.log_sigma * z(rng));
}

// Splits `total` into `parts` non-negative integers summing to it.
std::vector<long> split_total(long total, int parts) {
  std::vector<long> out(parts, total / parts);
  for (long i = 0; i < total % parts; ++i) ++out[i];
  return out;
}

Timestamp at(std::int64_t start_day, std::int64_t day, int minute_of_day) {
  const std::int64_t minutes = (start_day + day) * kMinutesPerDay + minute_of_day;
  return Timestamp{minutes / kMinutesPerDay,
                   static_cast<int>(minutes % kMinutesPerDay)};
}

}  // namespace

double ClassConditional::midpoint() const {
  return std::sqrt(median_low * median_high);
}

const FeatureDesign& default_feature_design() {
  static const FeatureDesign design;
  return design;
}

SleepSample generate_sleep_data(const GroundTruth& truth,
                                const GeneratorConfig& cfg) {
  cfg.validate();
  truth.mixture.validate();
  const Matrix rates = effective_rates(truth, cfg);
  SleepSample out;
  out.counts.reserve(cfg.n_students);
  for (int i = 0; i < cfg.n_students; ++i) {
    Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(i));
    const int m = draw_component(truth.mixture.mixing, rng);
    out.components.push_back(m);
    out.counts.push_back(
        {synthetic_student_id(i), draw_counts(rates.row(m), cfg.n_nights, rng)});
  }
  return out;
}

DatasetTable sample_network(const BayesNet& net, std::size_t rows,
                            std::uint64_t seed) {
  const auto order = net.dag.topological_order();
  DatasetTable table(net.variables, rows);
  std::vector<int> assignment(net.variables.size(), 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t r = 0; r < rows; ++r) {
    Rng rng = make_rng(seed, r);
    for (int v : order) {
      const Cpt& cpt = net.cpts[v];
      const int j = cpt.config_of(assignment);
      double u = unit(rng);
      int value = cpt.arity - 1;
      for (int k = 0; k < cpt.arity; ++k) {
        u -= cpt.prob(j, k);
        if (u < 0.0) {
          value = k;
          break;
        }
      }
      assignment[v] = value;
      table.set(r, v, value);
    }
  }
  return table;
}

DatasetTable generate_profiles(const GroundTruth& truth,
                               const GeneratorConfig& cfg) {
  cfg.validate();
  return sample_network(truth.profile_net, cfg.n_students, cfg.seed);
}

SyntheticLogs generate_full_logs(const GroundTruth& truth,
                                 const GeneratorConfig& cfg) {
  cfg.validate();
  truth.mixture.validate();
  const auto& design = default_feature_design();
  const auto& vars = truth.profile_net.variables;
  const int G = vars.index_of("G"), R = vars.index_of("R"),
            A = vars.index_of("A"), T = vars.index_of("T"),
            Br = vars.index_of("Br"), Ba = vars.index_of("Ba"),
            F = vars.index_of("F"), Ac = vars.index_of("Ac"),
            S = vars.index_of("S");
  const Matrix rates = effective_rates(truth, cfg);
  const int stay_up = stay_up_component(truth.mixture);
  const int n = cfg.n_nights;
  const auto& win = cfg.window;

  SyntheticLogs out;
  out.profiles = sample_network(truth.profile_net, cfg.n_students,
                                derive_seed(cfg.seed, 0));
  auto& store = out.store;

  for (int i = 0; i < cfg.n_students; ++i) {
    const std::string id = synthetic_student_id(i);
    out.student_ids.push_back(id);
    Rng rng = make_rng(derive_seed(cfg.seed, 1), static_cast<std::uint64_t>(i));
    auto value = [&](int var) { return out.profiles(i, var); };
    auto uniform_int = [&](int lo, int hi) {
      return std::uniform_int_distribution<int>(lo, hi)(rng);
    };

    Cohort cohort = cfg.cohort ? *cfg.cohort
                               : static_cast<Cohort>(uniform_int(0, 2));
    store.demographics.push_back(
        {id, value(G) ? Gender::female : Gender::male, cohort});

    // Bedtimes: one last in-window signal per observed night.
    const int component =
        component_for_sleep(value(S), stay_up, truth.mixture.mixing, rng);
    auto counts = draw_counts(rates.row(component), n, rng);
    out.sleep.components.push_back(component);
    out.sleep.counts.push_back({id, counts});

    std::vector<int> nights(n);
    std::iota(nights.begin(), nights.end(), 0);
    std::shuffle(nights.begin(), nights.end(), rng);
    std::size_t next_night = 0;
    for (int d = 0; d < win.bin_count; ++d) {
      for (int c = 0; c < counts[d]; ++c) {
        const int night = nights[next_night++];
        const int offset = win.window_start.minutes + d * win.bin_minutes +
                           uniform_int(0, win.bin_minutes - 1);
        if (uniform_int(0, 1)) {
          // An earlier signal the same evening that must not count.
          store.net_sessions.push_back(
              {id, at(cfg.start_day, night, offset - uniform_int(31, 150)),
               AppCategory::other, uniform_int(1, 20)});
        }
        store.net_sessions.push_back({id, at(cfg.start_day, night, offset),
                                      AppCategory::other, uniform_int(1, 10)});
      }
    }

    // Daytime game/video use realising T and A.
    const long surf_total = std::lround(
        draw_log_normal(design.surf_minutes, value(T), rng) * n);
    const double video_share = value(A)
        ? std::uniform_real_distribution<double>(0.6, 0.9)(rng)
        : std::uniform_real_distribution<double>(0.1, 0.4)(rng);
    long video = std::lround(surf_total * video_share);
    long game = surf_total - video;
    if (value(A) && video <= game) video = game + 1;
    if (!value(A) && video > game) std::swap(video, game);
    constexpr int kDaytimeSessions = 8;
    for (auto [category, total] :
         {std::pair{AppCategory::game, game}, std::pair{AppCategory::video, video}}) {
      for (long minutes : split_total(total, kDaytimeSessions)) {
        if (minutes == 0) continue;
        store.net_sessions.push_back(
            {id, at(cfg.start_day, uniform_int(0, n - 1), uniform_int(13 * 60, 19 * 60 - 1)),
             category, static_cast<int>(minutes)});
      }
    }

    // Breakfasts realising Br.
    const int breakfasts = std::clamp<int>(
        std::lround(draw_log_normal(design.breakfast_fraction, value(Br), rng) * n),
        0, n);
    std::shuffle(nights.begin(), nights.end(), rng);
    constexpr long kBreakfastCents = 500, kBathCents = 300;
    long spent_cents = 0;
    for (int b = 0; b < breakfasts; ++b) {
      store.transactions.push_back(
          {id, at(cfg.start_day, nights[b], uniform_int(6 * 60, 9 * 60 + 29)),
           Venue::canteen, kBreakfastCents / 100.0});
      spent_cents += kBreakfastCents;
    }

    // Baths realising Ba: regular gaps around three days, jittered.
    const double jitter = draw_log_normal(design.bath_jitter, value(Ba), rng);
    std::normal_distribution<double> gap_noise(0.0, 1.0);
    for (int day = uniform_int(0, 2); day < n;) {
      store.transactions.push_back(
          {id, at(cfg.start_day, day, uniform_int(19 * 60, 20 * 60 + 59)),
           Venue::bath, kBathCents / 100.0});
      spent_cents += kBathCents;
      day += std::max(1, static_cast<int>(std::lround(3.0 + jitter * gap_noise(rng))));
    }

    // Remaining spend realising F, as lunches outside the breakfast window.
    const long spend_total =
        std::lround(draw_log_normal(design.daily_spend, value(F), rng) * n * 100.0);
    const long remainder = spend_total - spent_cents;
    if (remainder > 0) {
      const int lunches = std::clamp(n, 1, 30);
      for (long cents : split_total(remainder, lunches)) {
        if (cents == 0) continue;
        store.transactions.push_back(
            {id, at(cfg.start_day, uniform_int(0, n - 1), uniform_int(12 * 60, 12 * 60 + 59)),
             Venue::canteen, cents / 100.0});
      }
    }

    // Library loans realising R.
    const int books = std::max(0, static_cast<int>(std::lround(
                                      draw_log_normal(design.books, value(R), rng))));
    for (int b = 0; b < books; ++b) {
      store.borrows.push_back(
          {id, at(cfg.start_day, uniform_int(0, n - 1), uniform_int(10 * 60, 17 * 60))});
    }

    // GPA realising Ac.
    const double gpa = std::clamp(draw_log_normal(design.gpa, value(Ac), rng), 0.0, 4.0);
    store.grades.push_back({id, std::round(gpa * 100.0) / 100.0});
  }
  return out;
}

}  // namespace sleepnet
