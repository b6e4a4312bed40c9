#include "sleepnet/ingest.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "sleepnet/csv.hpp"
#include "sleepnet/error.hpp"

namespace sleepnet {

std::string_view to_string(AppCategory c) {
  switch (c) {
    case AppCategory::game: return "game";
    case AppCategory::video: return "video";
    case AppCategory::other: return "other";
  }
  return "other";
}

std::string_view to_string(Venue v) {
  switch (v) {
    case Venue::canteen: return "canteen";
    case Venue::bath: return "bath";
    case Venue::other: return "other";
  }
  return "other";
}

std::string_view to_string(Gender g) {
  return g == Gender::female ? "female" : "male";
}

std::string_view to_string(Cohort c) {
  switch (c) {
    case Cohort::freshman: return "freshman";
    case Cohort::sophomore: return "sophomore";
    case Cohort::junior: return "junior";
  }
  return "freshman";
}

std::optional<AppCategory> parse_app_category(std::string_view s) {
  if (s == "game") return AppCategory::game;
  if (s == "video") return AppCategory::video;
  if (s == "other") return AppCategory::other;
  return std::nullopt;
}

std::optional<Venue> parse_venue(std::string_view s) {
  if (s == "canteen") return Venue::canteen;
  if (s == "bath") return Venue::bath;
  if (s == "other") return Venue::other;
  return std::nullopt;
}

std::optional<Gender> parse_gender(std::string_view s) {
  if (s == "male") return Gender::male;
  if (s == "female") return Gender::female;
  return std::nullopt;
}

std::optional<Cohort> parse_cohort(std::string_view s) {
  if (s == "freshman") return Cohort::freshman;
  if (s == "sophomore") return Cohort::sophomore;
  if (s == "junior") return Cohort::junior;
  return std::nullopt;
}

bool EventStore::operator==(const EventStore& o) const {
  auto same_sessions = std::equal(
      net_sessions.begin(), net_sessions.end(), o.net_sessions.begin(),
      o.net_sessions.end(), [](const auto& a, const auto& b) {
        return a.student_id == b.student_id && a.end_time == b.end_time &&
               a.app_category == b.app_category &&
               a.duration_minutes == b.duration_minutes;
      });
  auto same_tx = std::equal(
      transactions.begin(), transactions.end(), o.transactions.begin(),
      o.transactions.end(), [](const auto& a, const auto& b) {
        return a.student_id == b.student_id && a.time == b.time &&
               a.venue == b.venue && a.amount == b.amount;
      });
  auto same_borrows = std::equal(
      borrows.begin(), borrows.end(), o.borrows.begin(), o.borrows.end(),
      [](const auto& a, const auto& b) {
        return a.student_id == b.student_id && a.time == b.time;
      });
  auto same_grades = std::equal(
      grades.begin(), grades.end(), o.grades.begin(), o.grades.end(),
      [](const auto& a, const auto& b) {
        return a.student_id == b.student_id && a.gpa == b.gpa;
      });
  auto same_demo = std::equal(
      demographics.begin(), demographics.end(), o.demographics.begin(),
      o.demographics.end(), [](const auto& a, const auto& b) {
        return a.student_id == b.student_id && a.gender == b.gender &&
               a.cohort == b.cohort;
      });
  return same_sessions && same_tx && same_borrows && same_grades && same_demo;
}

LogPaths LogPaths::in_directory(const std::filesystem::path& dir) {
  return LogPaths{dir / "net_sessions.csv", dir / "transactions.csv",
                  dir / "borrows.csv", dir / "grades.csv",
                  dir / "demographics.csv"};
}

namespace {

const std::vector<std::string> kSessionHeader{"student_id", "end_time",
                                              "app_category",
                                              "duration_minutes"};
const std::vector<std::string> kTransactionHeader{"student_id", "time",
                                                  "venue", "amount"};
const std::vector<std::string> kBorrowHeader{"student_id", "time"};
const std::vector<std::string> kGradeHeader{"student_id", "gpa"};
const std::vector<std::string> kDemographicHeader{"student_id", "gender",
                                                  "cohort"};

using Fields = std::vector<std::string_view>;

// Reads one file, handing each row to `convert`, which returns an error
// message for a malformed row or an empty string on success.
void load_file(const std::filesystem::path& path,
               const std::vector<std::string>& header, bool strict,
               KindReport& report,
               const std::function<std::string(const Fields&)>& convert) {
  if (path.empty()) return;
  if (!std::filesystem::exists(path)) {
    throw IoError("input file not found: " + path.string());
  }
  csv::Reader reader(path, header);
  Fields fields;
  while (reader.next(fields)) {
    std::string problem;
    if (fields.size() != header.size()) {
      problem = "expected " + std::to_string(header.size()) + " fields, got " +
                std::to_string(fields.size());
    } else {
      problem = convert(fields);
    }
    if (problem.empty()) {
      ++report.loaded;
    } else if (strict) {
      throw ParseError(reader.file(), reader.line_number(), problem);
    } else {
      ++report.skipped;
    }
  }
}

std::string check_student(std::string_view id,
                          const std::unordered_set<std::string>& known,
                          bool have_demographics) {
  if (id.empty()) return "empty student_id";
  if (have_demographics && !known.contains(std::string(id))) {
    return "unknown student_id '" + std::string(id) + "'";
  }
  return {};
}

}  // namespace

ParseResult parse_logs(const LogPaths& paths, const ParseOptions& options) {
  ParseResult result;
  auto& store = result.store;
  auto& report = result.report;
  const bool strict = options.strict;

  std::unordered_set<std::string> known;
  load_file(paths.demographics, kDemographicHeader, strict,
            report.demographics, [&](const Fields& f) -> std::string {
              if (f[0].empty()) return "empty student_id";
              auto g = parse_gender(f[1]);
              if (!g) return "invalid gender '" + std::string(f[1]) + "'";
              auto c = parse_cohort(f[2]);
              if (!c) return "invalid cohort '" + std::string(f[2]) + "'";
              if (!known.insert(std::string(f[0])).second) {
                return "duplicate student_id '" + std::string(f[0]) + "'";
              }
              store.demographics.push_back({std::string(f[0]), *g, *c});
              return {};
            });
  const bool have_demo = !paths.demographics.empty();

  load_file(paths.net_sessions, kSessionHeader, strict, report.net_sessions,
            [&](const Fields& f) -> std::string {
              if (auto p = check_student(f[0], known, have_demo); !p.empty()) {
                return p;
              }
              auto t = Timestamp::parse(f[1]);
              if (!t) return "invalid timestamp '" + std::string(f[1]) + "'";
              auto cat = parse_app_category(f[2]);
              if (!cat) {
                return "invalid app_category '" + std::string(f[2]) + "'";
              }
              long long minutes = 0;
              if (!csv::parse_int(f[3], minutes) || minutes < 0) {
                return "invalid duration_minutes '" + std::string(f[3]) + "'";
              }
              store.net_sessions.push_back({std::string(f[0]), *t, *cat,
                                            static_cast<int>(minutes)});
              return {};
            });

  load_file(paths.transactions, kTransactionHeader, strict,
            report.transactions, [&](const Fields& f) -> std::string {
              if (auto p = check_student(f[0], known, have_demo); !p.empty()) {
                return p;
              }
              auto t = Timestamp::parse(f[1]);
              if (!t) return "invalid timestamp '" + std::string(f[1]) + "'";
              auto venue = parse_venue(f[2]);
              if (!venue) return "invalid venue '" + std::string(f[2]) + "'";
              double amount = 0.0;
              if (!csv::parse_double(f[3], amount) || amount < 0.0) {
                return "invalid amount '" + std::string(f[3]) + "'";
              }
              store.transactions.push_back(
                  {std::string(f[0]), *t, *venue, amount});
              return {};
            });

  load_file(paths.borrows, kBorrowHeader, strict, report.borrows,
            [&](const Fields& f) -> std::string {
              if (auto p = check_student(f[0], known, have_demo); !p.empty()) {
                return p;
              }
              auto t = Timestamp::parse(f[1]);
              if (!t) return "invalid timestamp '" + std::string(f[1]) + "'";
              store.borrows.push_back({std::string(f[0]), *t});
              return {};
            });

  load_file(paths.grades, kGradeHeader, strict, report.grades,
            [&](const Fields& f) -> std::string {
              if (auto p = check_student(f[0], known, have_demo); !p.empty()) {
                return p;
              }
              double gpa = 0.0;
              if (!csv::parse_double(f[1], gpa) || gpa < 0.0 ||
                  gpa > options.gpa_max) {
                return "invalid gpa '" + std::string(f[1]) + "'";
              }
              store.grades.push_back({std::string(f[0]), gpa});
              return {};
            });

  return result;
}

void write_logs(const EventStore& store, const LogPaths& paths) {
  auto header = [](std::ostream& out, const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      out << (i ? "," : "") << cols[i];
    }
    out << '\n';
  };
  {
    auto out = csv::open_output(paths.net_sessions);
    header(out, kSessionHeader);
    for (const auto& r : store.net_sessions) {
      out << r.student_id << ',' << r.end_time.str() << ','
          << to_string(r.app_category) << ',' << r.duration_minutes << '\n';
    }
  }
  {
    auto out = csv::open_output(paths.transactions);
    header(out, kTransactionHeader);
    for (const auto& r : store.transactions) {
      out << r.student_id << ',' << r.time.str() << ',' << to_string(r.venue)
          << ',' << csv::format_double(r.amount) << '\n';
    }
  }
  {
    auto out = csv::open_output(paths.borrows);
    header(out, kBorrowHeader);
    for (const auto& r : store.borrows) {
      out << r.student_id << ',' << r.time.str() << '\n';
    }
  }
  {
    auto out = csv::open_output(paths.grades);
    header(out, kGradeHeader);
    for (const auto& r : store.grades) {
      out << r.student_id << ',' << csv::format_double(r.gpa) << '\n';
    }
  }
  {
    auto out = csv::open_output(paths.demographics);
    header(out, kDemographicHeader);
    for (const auto& r : store.demographics) {
      out << r.student_id << ',' << to_string(r.gender) << ','
          << to_string(r.cohort) << '\n';
    }
  }
}

void NightWindowConfig::validate() const {
  if (bin_minutes <= 0) throw DomainError("bin_minutes must be positive");
  if (bin_count <= 0) throw DomainError("bin_count must be positive");
  if (window_start < night_boundary) {
    throw DomainError("window_start must not precede night_boundary");
  }
  const int span_end = window_start.minutes + bin_count * bin_minutes;
  if (span_end > night_boundary.minutes + kMinutesPerDay) {
    throw DomainError("night window extends past the next night boundary");
  }
}

std::int64_t NightWindowConfig::night_of(const Timestamp& t) const {
  return t.minute >= night_boundary.minutes ? t.day : t.day - 1;
}

std::optional<int> NightWindowConfig::bin_of(const Timestamp& t) const {
  const std::int64_t night = night_of(t);
  const std::int64_t since_midnight = (t.day - night) * kMinutesPerDay + t.minute;
  const std::int64_t rel = since_midnight - window_start.minutes;
  if (rel < 0 || rel >= static_cast<std::int64_t>(bin_count) * bin_minutes) {
    return std::nullopt;
  }
  return static_cast<int>(rel / bin_minutes);
}

ClockTime NightWindowConfig::bin_start(int bin) const {
  return ClockTime{(window_start.minutes + bin * bin_minutes) % kMinutesPerDay};
}

std::vector<BedtimeObservation> extract_bedtimes(
    std::span<const NetSessionRecord> sessions, const NightWindowConfig& cfg) {
  cfg.validate();
  if (sessions.empty()) return {};

  std::int64_t first_night = cfg.night_of(sessions.front().end_time);
  for (const auto& s : sessions) {
    first_night = std::min(first_night, cfg.night_of(s.end_time));
  }

  // (student, night) -> latest in-window timestamp
  std::map<std::pair<std::string, std::int64_t>, Timestamp> latest;
  for (const auto& s : sessions) {
    if (!cfg.bin_of(s.end_time)) continue;
    auto key = std::make_pair(s.student_id, cfg.night_of(s.end_time));
    auto [it, inserted] = latest.try_emplace(key, s.end_time);
    if (!inserted && it->second < s.end_time) it->second = s.end_time;
  }

  std::vector<BedtimeObservation> out;
  out.reserve(latest.size());
  for (const auto& [key, t] : latest) {
    out.push_back({key.first, key.second - first_night, *cfg.bin_of(t)});
  }
  return out;
}

int SleepCountVector::total() const {
  int sum = 0;
  for (int c : counts) sum += c;
  return sum;
}

SleepCountMap aggregate_sleep_counts(
    std::span<const BedtimeObservation> observations,
    const NightWindowConfig& cfg, int min_nights) {
  cfg.validate();
  if (min_nights < 1) throw DomainError("min_nights must be at least 1");
  SleepCountMap all;
  for (const auto& o : observations) {
    if (o.bin_index < 0 || o.bin_index >= cfg.bin_count) {
      throw DomainError("bin_index out of range for student " + o.student_id);
    }
    auto [it, inserted] = all.try_emplace(o.student_id);
    if (inserted) {
      it->second.student_id = o.student_id;
      it->second.counts.assign(cfg.bin_count, 0);
    }
    ++it->second.counts[o.bin_index];
  }
  std::erase_if(all, [&](const auto& kv) {
    return kv.second.total() < min_nights;
  });
  return all;
}

FeatureMap compute_raw_features(const EventStore& store, int study_days,
                                ClockInterval breakfast_window) {
  if (study_days < 1) throw DomainError("study_days must be at least 1");
  FeatureMap out;
  for (const auto& d : store.demographics) {
    auto& rec = out[d.student_id];
    rec.student_id = d.student_id;
    rec.gender = d.gender;
    rec.cohort = d.cohort;
  }
  auto find = [&](const std::string& id) -> RawFeatureRecord* {
    auto it = out.find(id);
    return it == out.end() ? nullptr : &it->second;
  };

  for (const auto& b : store.borrows) {
    if (auto* r = find(b.student_id)) ++r->books_borrowed;
  }

  std::unordered_map<std::string, double> surf_total;
  for (const auto& s : store.net_sessions) {
    auto* r = find(s.student_id);
    if (!r) continue;
    surf_total[s.student_id] += s.duration_minutes;
    if (s.app_category == AppCategory::game) r->game_minutes += s.duration_minutes;
    if (s.app_category == AppCategory::video) r->video_minutes += s.duration_minutes;
  }

  std::unordered_map<std::string, std::set<std::int64_t>> breakfast_days;
  std::unordered_map<std::string, std::set<std::int64_t>> bath_days;
  std::unordered_map<std::string, double> spend_total;
  for (const auto& t : store.transactions) {
    if (!find(t.student_id)) continue;
    spend_total[t.student_id] += t.amount;
    if (t.venue == Venue::canteen && breakfast_window.contains(t.time.minute)) {
      breakfast_days[t.student_id].insert(t.time.day);
    }
    if (t.venue == Venue::bath) bath_days[t.student_id].insert(t.time.day);
  }

  for (const auto& g : store.grades) {
    if (auto* r = find(g.student_id)) r->gpa = g.gpa;
  }

  for (auto& [id, rec] : out) {
    rec.mean_daily_surf_minutes = surf_total[id] / study_days;
    rec.mean_daily_spend = spend_total[id] / study_days;
    rec.breakfast_count = static_cast<int>(breakfast_days[id].size());

    const auto& days = bath_days[id];
    if (days.size() >= 2) {
      std::vector<double> gaps;
      for (auto it = std::next(days.begin()); it != days.end(); ++it) {
        gaps.push_back(static_cast<double>(*it - *std::prev(it)));
      }
      double mean = 0.0;
      for (double g : gaps) mean += g;
      mean /= gaps.size();
      double var = 0.0;
      for (double g : gaps) var += (g - mean) * (g - mean);
      rec.bath_interval_variance = var / gaps.size();
    }
  }
  return out;
}

int infer_study_days(const EventStore& store, const NightWindowConfig& cfg) {
  if (store.net_sessions.empty()) return 1;
  std::int64_t lo = cfg.night_of(store.net_sessions.front().end_time);
  std::int64_t hi = lo;
  for (const auto& s : store.net_sessions) {
    lo = std::min(lo, cfg.night_of(s.end_time));
    hi = std::max(hi, cfg.night_of(s.end_time));
  }
  return static_cast<int>(hi - lo + 1);
}

void write_sleep_counts_csv(std::ostream& out, const SleepCountMap& counts,
                            int bin_count) {
  out << "student_id";
  for (int d = 0; d < bin_count; ++d) out << ",c" << d;
  out << '\n';
  for (const auto& [id, v] : counts) {
    out << id;
    for (int c : v.counts) out << ',' << c;
    out << '\n';
  }
}

SleepCountMap read_sleep_counts_csv(const std::filesystem::path& path,
                                    int bin_count) {
  std::vector<std::string> header{"student_id"};
  for (int d = 0; d < bin_count; ++d) header.push_back("c" + std::to_string(d));
  csv::Reader reader(path, header);
  SleepCountMap out;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    if (f.size() != header.size()) {
      throw ParseError(reader.file(), reader.line_number(), "wrong field count");
    }
    SleepCountVector v{std::string(f[0]), {}};
    for (int d = 0; d < bin_count; ++d) {
      long long c = 0;
      if (!csv::parse_int(f[d + 1], c) || c < 0) {
        throw ParseError(reader.file(), reader.line_number(), "invalid count");
      }
      v.counts.push_back(static_cast<int>(c));
    }
    out.emplace(v.student_id, std::move(v));
  }
  return out;
}

namespace {
const std::vector<std::string> kFeatureHeader{
    "student_id",       "books_borrowed",         "mean_daily_surf_minutes",
    "game_minutes",     "video_minutes",          "breakfast_count",
    "bath_interval_variance", "mean_daily_spend", "gpa",
    "gender",           "cohort"};

std::string optional_cell(const std::optional<double>& v) {
  return v ? csv::format_double(*v) : "NA";
}
}  // namespace

void write_features_csv(std::ostream& out, const FeatureMap& features) {
  for (std::size_t i = 0; i < kFeatureHeader.size(); ++i) {
    out << (i ? "," : "") << kFeatureHeader[i];
  }
  out << '\n';
  for (const auto& [id, r] : features) {
    out << id << ',' << r.books_borrowed << ','
        << csv::format_double(r.mean_daily_surf_minutes) << ','
        << csv::format_double(r.game_minutes) << ','
        << csv::format_double(r.video_minutes) << ',' << r.breakfast_count
        << ',' << optional_cell(r.bath_interval_variance) << ','
        << csv::format_double(r.mean_daily_spend) << ',' << optional_cell(r.gpa)
        << ',' << to_string(r.gender) << ',' << to_string(r.cohort) << '\n';
  }
}

FeatureMap read_features_csv(const std::filesystem::path& path) {
  csv::Reader reader(path, kFeatureHeader);
  FeatureMap out;
  std::vector<std::string_view> f;
  auto fail = [&](const std::string& what) {
    throw ParseError(reader.file(), reader.line_number(), what);
  };
  auto real = [&](std::string_view s) {
    double v = 0.0;
    if (!csv::parse_double(s, v)) fail("invalid number '" + std::string(s) + "'");
    return v;
  };
  auto count = [&](std::string_view s) {
    long long v = 0;
    if (!csv::parse_int(s, v) || v < 0) fail("invalid count '" + std::string(s) + "'");
    return static_cast<int>(v);
  };
  auto maybe = [&](std::string_view s) -> std::optional<double> {
    if (s == "NA") return std::nullopt;
    return real(s);
  };
  while (reader.next(f)) {
    if (f.size() != kFeatureHeader.size()) fail("wrong field count");
    RawFeatureRecord r;
    r.student_id = std::string(f[0]);
    r.books_borrowed = count(f[1]);
    r.mean_daily_surf_minutes = real(f[2]);
    r.game_minutes = real(f[3]);
    r.video_minutes = real(f[4]);
    r.breakfast_count = count(f[5]);
    r.bath_interval_variance = maybe(f[6]);
    r.mean_daily_spend = real(f[7]);
    r.gpa = maybe(f[8]);
    auto g = parse_gender(f[9]);
    if (!g) fail("invalid gender");
    auto c = parse_cohort(f[10]);
    if (!c) fail("invalid cohort");
    r.gender = *g;
    r.cohort = *c;
    out.emplace(r.student_id, std::move(r));
  }
  return out;
}

}  // namespace sleepnet
