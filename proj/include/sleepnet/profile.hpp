#pragma once

// Binarisation of raw features and sleep labels into the nine profile
// variables G, R, A, T, Br, Ba, F, Ac, S.

#include <array>
#include <filesystem>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sleepnet/ingest.hpp"
#include "sleepnet/sleepmix.hpp"

namespace sleepnet {

class DatasetTable;

inline constexpr std::size_t kProfileVariableCount = 9;
inline constexpr std::array<std::string_view, kProfileVariableCount>
    kProfileVariables{"G", "R", "A", "T", "Br", "Ba", "F", "Ac", "S"};

// Index of a profile variable name; throws for unknown names.
std::size_t profile_variable_index(std::string_view name);

enum class TieRule { at_median_low };

// Mean of the two middle elements for even sizes.
double median_of(std::vector<double> values);

// 1 iff value > median. Requires at least two students.
std::map<std::string, int> median_split(
    const std::map<std::string, double>& values,
    TieRule tie_rule = TieRule::at_median_low);

enum class RawField {
  books_borrowed,
  mean_daily_surf_minutes,
  breakfast_count,
  bath_interval_variance,
  mean_daily_spend,
  gpa
};
std::string_view to_string(RawField f);

enum class Direction {
  high_is_one,  // value > median -> 1
  low_is_one    // value <= median -> 1
};
std::string_view to_string(Direction d);

struct DiscretizationRule {
  std::string variable;
  RawField source;
  Direction direction;
};

struct DiscretizationSpec {
  std::vector<DiscretizationRule> rules;
  TieRule tie_rule = TieRule::at_median_low;

  // R, T, Br, F, Ac high-is-one; Ba low-is-one (low variance = orderly).
  static DiscretizationSpec defaults();
  // Rules must cover exactly R, T, Br, Ba, F, Ac.
  void validate() const;
};

struct StudentProfile {
  std::string student_id;
  std::array<int, kProfileVariableCount> values{};  // order of kProfileVariables

  int& operator[](std::string_view variable) {
    return values[profile_variable_index(variable)];
  }
  int operator[](std::string_view variable) const {
    return values[profile_variable_index(variable)];
  }
  bool operator==(const StudentProfile&) const = default;
};

struct ProfileMetadata {
  struct VariableInfo {
    std::string variable;
    std::string source;
    std::string direction;
    double median = 0.0;
  };
  std::vector<VariableInfo> variables;
  std::map<std::string, std::string> excluded;  // student_id -> reason
};

struct ProfileResult {
  std::vector<StudentProfile> profiles;  // sorted by student_id
  ProfileMetadata metadata;
};

ProfileResult build_profiles(const FeatureMap& features,
                             const std::map<std::string, SleepLabel>& sleep_labels,
                             const DiscretizationSpec& spec =
                                 DiscretizationSpec::defaults());

DatasetTable to_dataset(std::span<const StudentProfile> profiles);

void write_profiles_csv(std::ostream& out,
                        std::span<const StudentProfile> profiles);
std::vector<StudentProfile> read_profiles_csv(const std::filesystem::path& path);

}  // namespace sleepnet
