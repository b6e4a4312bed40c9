#include "sleepnet/profile.hpp"

#include <algorithm>
#include <set>

#include "sleepnet/bayesnet.hpp"
#include "sleepnet/csv.hpp"
#include "sleepnet/error.hpp"

namespace sleepnet {

std::size_t profile_variable_index(std::string_view name) {
  for (std::size_t i = 0; i < kProfileVariables.size(); ++i) {
    if (kProfileVariables[i] == name) return i;
  }
  throw DomainError("unknown profile variable '" + std::string(name) + "'");
}

double median_of(std::vector<double> values) {
  if (values.empty()) throw DomainError("median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

std::map<std::string, int> median_split(
    const std::map<std::string, double>& values, TieRule) {
  if (values.empty()) throw DomainError("median_split of an empty set");
  if (values.size() < 2) throw DomainError("median_split needs two students");
  std::vector<double> raw;
  raw.reserve(values.size());
  for (const auto& [id, v] : values) raw.push_back(v);
  const double median = median_of(std::move(raw));
  std::map<std::string, int> out;
  for (const auto& [id, v] : values) out[id] = v > median ? 1 : 0;
  return out;
}

std::string_view to_string(RawField f) {
  switch (f) {
    case RawField::books_borrowed: return "books_borrowed";
    case RawField::mean_daily_surf_minutes: return "mean_daily_surf_minutes";
    case RawField::breakfast_count: return "breakfast_count";
    case RawField::bath_interval_variance: return "bath_interval_variance";
    case RawField::mean_daily_spend: return "mean_daily_spend";
    case RawField::gpa: return "gpa";
  }
  return "";
}

std::string_view to_string(Direction d) {
  return d == Direction::high_is_one ? "high_is_one" : "low_is_one";
}

DiscretizationSpec DiscretizationSpec::defaults() {
  return DiscretizationSpec{
      {{"R", RawField::books_borrowed, Direction::high_is_one},
       {"T", RawField::mean_daily_surf_minutes, Direction::high_is_one},
       {"Br", RawField::breakfast_count, Direction::high_is_one},
       {"Ba", RawField::bath_interval_variance, Direction::low_is_one},
       {"F", RawField::mean_daily_spend, Direction::high_is_one},
       {"Ac", RawField::gpa, Direction::high_is_one}},
      TieRule::at_median_low};
}

void DiscretizationSpec::validate() const {
  const std::set<std::string> required{"R", "T", "Br", "Ba", "F", "Ac"};
  std::set<std::string> seen;
  for (const auto& r : rules) {
    if (!required.contains(r.variable)) {
      throw DomainError("discretization rule for unexpected variable " + r.variable);
    }
    if (!seen.insert(r.variable).second) {
      throw DomainError("duplicate discretization rule for " + r.variable);
    }
  }
  if (seen != required) {
    throw DomainError("discretization rules must cover R, T, Br, Ba, F and Ac");
  }
}

namespace {

std::optional<double> field_value(const RawFeatureRecord& r, RawField f) {
  switch (f) {
    case RawField::books_borrowed: return r.books_borrowed;
    case RawField::mean_daily_surf_minutes: return r.mean_daily_surf_minutes;
    case RawField::breakfast_count: return r.breakfast_count;
    case RawField::bath_interval_variance: return r.bath_interval_variance;
    case RawField::mean_daily_spend: return r.mean_daily_spend;
    case RawField::gpa: return r.gpa;
  }
  return std::nullopt;
}

}  // namespace

ProfileResult build_profiles(const FeatureMap& features,
                             const std::map<std::string, SleepLabel>& sleep_labels,
                             const DiscretizationSpec& spec) {
  spec.validate();
  ProfileResult result;
  auto& excluded = result.metadata.excluded;

  // Students usable by every rule.
  std::vector<const RawFeatureRecord*> usable;
  for (const auto& [id, rec] : features) {
    if (!sleep_labels.contains(id)) {
      excluded[id] = "no sleep label";
      continue;
    }
    std::string missing;
    for (const auto& rule : spec.rules) {
      if (!field_value(rec, rule.source)) {
        missing = std::string(to_string(rule.source)) + " undefined";
        break;
      }
    }
    if (!missing.empty()) {
      excluded[id] = missing;
      continue;
    }
    usable.push_back(&rec);
  }
  for (const auto& [id, label] : sleep_labels) {
    if (!features.contains(id)) excluded[id] = "no feature record";
  }
  if (usable.size() < 2) {
    throw DomainError("fewer than two students have complete profiles");
  }

  result.profiles.resize(usable.size());
  for (std::size_t i = 0; i < usable.size(); ++i) {
    const auto& rec = *usable[i];
    auto& p = result.profiles[i];
    p.student_id = rec.student_id;
    p["G"] = rec.gender == Gender::female ? 1 : 0;
    p["A"] = rec.video_minutes > rec.game_minutes ? 1 : 0;
    p["S"] = sleep_labels.at(rec.student_id) == SleepLabel::stay_up ? 1 : 0;
  }

  for (const auto& rule : spec.rules) {
    std::map<std::string, double> values;
    for (const auto* rec : usable) {
      values[rec->student_id] = *field_value(*rec, rule.source);
    }
    const auto labels = median_split(values, spec.tie_rule);
    std::vector<double> raw;
    for (const auto& [id, v] : values) raw.push_back(v);
    result.metadata.variables.push_back({rule.variable,
                                         std::string(to_string(rule.source)),
                                         std::string(to_string(rule.direction)),
                                         median_of(std::move(raw))});
    for (auto& p : result.profiles) {
      const int above = labels.at(p.student_id);
      p[rule.variable] = rule.direction == Direction::high_is_one ? above : 1 - above;
    }
  }
  result.metadata.variables.push_back(
      {"A", "video_minutes vs game_minutes", "video_is_one", 0.0});
  result.metadata.variables.push_back({"G", "gender", "female_is_one", 0.0});
  result.metadata.variables.push_back({"S", "sleep label", "stay_up_is_one", 0.0});
  return result;
}

DatasetTable to_dataset(std::span<const StudentProfile> profiles) {
  DatasetTable table(VariableSet::binary(kProfileVariables), profiles.size());
  for (std::size_t row = 0; row < profiles.size(); ++row) {
    for (std::size_t c = 0; c < kProfileVariableCount; ++c) {
      table.set(row, static_cast<int>(c), profiles[row].values[c]);
    }
  }
  return table;
}

void write_profiles_csv(std::ostream& out,
                        std::span<const StudentProfile> profiles) {
  out << "student_id";
  for (auto v : kProfileVariables) out << ',' << v;
  out << '\n';
  for (const auto& p : profiles) {
    out << p.student_id;
    for (int v : p.values) out << ',' << v;
    out << '\n';
  }
}

std::vector<StudentProfile> read_profiles_csv(const std::filesystem::path& path) {
  std::vector<std::string> header{"student_id"};
  for (auto v : kProfileVariables) header.emplace_back(v);
  csv::Reader reader(path, header);
  std::vector<StudentProfile> out;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    if (f.size() != header.size()) {
      throw ParseError(reader.file(), reader.line_number(), "wrong field count");
    }
    StudentProfile p;
    p.student_id = std::string(f[0]);
    for (std::size_t c = 0; c < kProfileVariableCount; ++c) {
      if (f[c + 1] != "0" && f[c + 1] != "1") {
        throw ParseError(reader.file(), reader.line_number(),
                         "profile cells must be 0 or 1");
      }
      p.values[c] = f[c + 1] == "1" ? 1 : 0;
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace sleepnet
