#pragma once

// Event-log ingestion: CSV parsing, nightly bedtime extraction, aggregated
// sleep counts and the raw behavioural features behind each profile variable.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sleepnet/timeutil.hpp"

namespace sleepnet {

enum class AppCategory { game, video, other };
enum class Venue { canteen, bath, other };
enum class Gender { male, female };
enum class Cohort { freshman, sophomore, junior };

std::string_view to_string(AppCategory c);
std::string_view to_string(Venue v);
std::string_view to_string(Gender g);
std::string_view to_string(Cohort c);
std::optional<AppCategory> parse_app_category(std::string_view s);
std::optional<Venue> parse_venue(std::string_view s);
std::optional<Gender> parse_gender(std::string_view s);
std::optional<Cohort> parse_cohort(std::string_view s);

struct NetSessionRecord {
  std::string student_id;
  Timestamp end_time;
  AppCategory app_category = AppCategory::other;
  int duration_minutes = 0;
};

struct TransactionRecord {
  std::string student_id;
  Timestamp time;
  Venue venue = Venue::other;
  double amount = 0.0;
};

struct BorrowRecord {
  std::string student_id;
  Timestamp time;
};

struct GradeRecord {
  std::string student_id;
  double gpa = 0.0;
};

struct DemographicRecord {
  std::string student_id;
  Gender gender = Gender::male;
  Cohort cohort = Cohort::freshman;
};

struct EventStore {
  std::vector<NetSessionRecord> net_sessions;
  std::vector<TransactionRecord> transactions;
  std::vector<BorrowRecord> borrows;
  std::vector<GradeRecord> grades;
  std::vector<DemographicRecord> demographics;

  bool operator==(const EventStore&) const;
};

struct KindReport {
  std::size_t loaded = 0;
  std::size_t skipped = 0;
};

struct ParseReport {
  KindReport net_sessions;
  KindReport transactions;
  KindReport borrows;
  KindReport grades;
  KindReport demographics;

  std::size_t total_skipped() const {
    return net_sessions.skipped + transactions.skipped + borrows.skipped +
           grades.skipped + demographics.skipped;
  }
};

// File locations per record kind. An empty path means "no file of that kind".
struct LogPaths {
  std::filesystem::path net_sessions;
  std::filesystem::path transactions;
  std::filesystem::path borrows;
  std::filesystem::path grades;
  std::filesystem::path demographics;

  // The five conventional file names inside `dir`.
  static LogPaths in_directory(const std::filesystem::path& dir);
};

struct ParseOptions {
  // Strict: the first malformed row raises ParseError. Lenient: it is skipped
  // and counted. Rows naming a student absent from demographics follow the
  // same policy.
  bool strict = true;
  double gpa_max = 4.0;
};

struct ParseResult {
  EventStore store;
  ParseReport report;
};

ParseResult parse_logs(const LogPaths& paths, const ParseOptions& options);

void write_logs(const EventStore& store, const LogPaths& paths);

struct NightWindowConfig {
  ClockTime window_start = ClockTime::hm(21, 0);
  int bin_minutes = 30;
  int bin_count = 16;
  ClockTime night_boundary = ClockTime::hm(12, 0);

  void validate() const;

  // Minutes after the boundary of the night a timestamp belongs to, plus the
  // night's calendar day. Signals before the boundary belong to the previous
  // evening.
  std::int64_t night_of(const Timestamp& t) const;
  // Bin index of the timestamp inside its night window, or nullopt.
  std::optional<int> bin_of(const Timestamp& t) const;
  // First minute (relative to window_start) of each bin, as a clock time.
  ClockTime bin_start(int bin) const;
};

struct BedtimeObservation {
  std::string student_id;
  std::int64_t night_index = 0;  // nights since the earliest night seen
  int bin_index = 0;

  auto operator<=>(const BedtimeObservation&) const = default;
};

// Latest in-window signal per student and night, sorted by (student, night).
std::vector<BedtimeObservation> extract_bedtimes(
    std::span<const NetSessionRecord> sessions, const NightWindowConfig& cfg);

struct SleepCountVector {
  std::string student_id;
  std::vector<int> counts;

  int total() const;
  bool operator==(const SleepCountVector&) const = default;
};

using SleepCountMap = std::map<std::string, SleepCountVector>;

SleepCountMap aggregate_sleep_counts(
    std::span<const BedtimeObservation> observations,
    const NightWindowConfig& cfg, int min_nights = 20);

struct RawFeatureRecord {
  std::string student_id;
  int books_borrowed = 0;
  double mean_daily_surf_minutes = 0.0;
  double game_minutes = 0.0;
  double video_minutes = 0.0;
  int breakfast_count = 0;
  // Undefined (nullopt) for students with fewer than two bath days.
  std::optional<double> bath_interval_variance;
  double mean_daily_spend = 0.0;
  std::optional<double> gpa;  // nullopt when no grade row exists
  Gender gender = Gender::male;
  Cohort cohort = Cohort::freshman;

  bool operator==(const RawFeatureRecord&) const = default;
};

using FeatureMap = std::map<std::string, RawFeatureRecord>;

inline constexpr ClockInterval kDefaultBreakfastWindow{ClockTime::hm(5, 0),
                                                       ClockTime::hm(9, 30)};

// One record per student in demographics.
FeatureMap compute_raw_features(
    const EventStore& store, int study_days,
    ClockInterval breakfast_window = kDefaultBreakfastWindow);

// Number of nights spanned by the net-session log (at least 1).
int infer_study_days(const EventStore& store, const NightWindowConfig& cfg);

void write_sleep_counts_csv(std::ostream& out, const SleepCountMap& counts,
                            int bin_count);
SleepCountMap read_sleep_counts_csv(const std::filesystem::path& path,
                                    int bin_count);

void write_features_csv(std::ostream& out, const FeatureMap& features);
FeatureMap read_features_csv(const std::filesystem::path& path);

}  // namespace sleepnet
