#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "sleepnet/bayesnet.hpp"
#include "sleepnet/csv.hpp"
#include "sleepnet/error.hpp"
#include "sleepnet/profile.hpp"
#include "support.hpp"

using namespace sleepnet;

namespace {

std::map<std::string, double> values_of(std::initializer_list<double> v) {
  std::map<std::string, double> out;
  int i = 0;
  for (double x : v) out["s" + std::to_string(i++)] = x;
  return out;
}

std::vector<int> labels_in_order(const std::map<std::string, int>& labels) {
  std::vector<int> out;
  for (const auto& [id, l] : labels) out.push_back(l);
  return out;
}

RawFeatureRecord record(const std::string& id, double x) {
  RawFeatureRecord r;
  r.student_id = id;
  r.books_borrowed = static_cast<int>(x);
  r.mean_daily_surf_minutes = 10 * x;
  r.game_minutes = 100;
  r.video_minutes = 50 + 10 * x;
  r.breakfast_count = static_cast<int>(2 * x);
  r.bath_interval_variance = x;
  r.mean_daily_spend = 5 + x;
  r.gpa = 2 + x / 10;
  r.gender = static_cast<int>(x) % 2 ? Gender::female : Gender::male;
  return r;
}

}  // namespace

TEST_SUITE("profile.median") {
  TEST_CASE("a clean even median splits two and two") {
    CHECK(labels_in_order(median_split(values_of({1, 2, 3, 4}))) ==
          std::vector<int>{0, 0, 1, 1});
    CHECK(median_of({1, 2, 3, 4}) == 2.5);
  }

  TEST_CASE("values at the median go low") {
    CHECK(labels_in_order(median_split(values_of({1, 2, 2, 3}))) ==
          std::vector<int>{0, 0, 0, 1});
  }

  TEST_CASE("all-equal values are all zero") {
    CHECK(labels_in_order(median_split(values_of({5, 5, 5}))) == std::vector<int>{0, 0, 0});
  }

  TEST_CASE("empty or single inputs are errors") {
    CHECK_THROWS_AS(median_split({}), DomainError);
    CHECK_THROWS_AS(median_split(values_of({1})), DomainError);
  }

  TEST_CASE("property: at most half exceed the median, within one when distinct") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      std::map<std::string, double> v;
      const int n = 2 + static_cast<int>(rng() % 60);
      for (int i = 0; i < n; ++i) {
        v["s" + std::to_string(i)] = std::uniform_real_distribution<double>(0, 1)(rng);
      }
      int ones = 0;
      for (const auto& [id, l] : median_split(v)) ones += l;
      CHECK(2 * ones <= n);
      CHECK(std::abs(2 * ones - n) <= 1);
    }
  }

  TEST_CASE("property: increasing transforms leave labels unchanged") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
      std::map<std::string, double> v, w;
      for (int i = 0; i < 25; ++i) {
        const double x = static_cast<double>(rng() % 10);  // ties on purpose
        v["s" + std::to_string(i)] = x;
        w["s" + std::to_string(i)] = std::exp(x) + 3;
      }
      CHECK(median_split(v) == median_split(w));
    }
  }
}

TEST_SUITE("profile.build") {
  TEST_CASE("video over game sets A, equality favours games") {
    FeatureMap f;
    f["a"] = record("a", 1);
    f["b"] = record("b", 2);
    f["a"].video_minutes = 300;
    f["a"].game_minutes = 100;
    f["b"].video_minutes = 100;
    f["b"].game_minutes = 100;
    const auto r = build_profiles(
        f, {{"a", SleepLabel::stay_up}, {"b", SleepLabel::non_stay_up}});
    REQUIRE(r.profiles.size() == 2);
    CHECK(r.profiles[0]["A"] == 1);
    CHECK(r.profiles[1]["A"] == 0);
    CHECK(r.profiles[0]["S"] == 1);
    CHECK(r.profiles[1]["S"] == 0);
  }

  TEST_CASE("directions: more is one, except orderly baths") {
    FeatureMap f;
    for (int i = 0; i < 4; ++i) {
      const std::string id = "s" + std::to_string(i);
      f[id] = record(id, i);
    }
    std::map<std::string, SleepLabel> labels;
    for (const auto& [id, r] : f) labels[id] = SleepLabel::stay_up;
    const auto r = build_profiles(f, labels);
    // s3 has the largest raw values everywhere.
    const auto& top = r.profiles[3];
    for (const char* v : {"R", "T", "Br", "F", "Ac"}) CHECK(top[v] == 1);
    CHECK(top["Ba"] == 0);
    CHECK(r.profiles[0]["Ba"] == 1);
    CHECK(top["G"] == 1);
    CHECK(r.profiles[0]["G"] == 0);
    int median_rules = 0;
    for (const auto& info : r.metadata.variables) {
      if (info.variable == "G" || info.variable == "A" || info.variable == "S") continue;
      ++median_rules;
      CHECK(info.median == doctest::Approx(info.variable == "R"    ? 1.5
                                           : info.variable == "T"  ? 15.0
                                           : info.variable == "Br" ? 3.0
                                           : info.variable == "Ba" ? 1.5
                                           : info.variable == "F"  ? 6.5
                                                                   : 2.15));
      CHECK(info.direction == (info.variable == "Ba" ? "low_is_one" : "high_is_one"));
    }
    CHECK(median_rules == 6);
  }

  TEST_CASE("fewer than two complete students cannot be profiled") {
    FeatureMap f;
    for (int i = 0; i < 4; ++i) {
      const std::string id = "s" + std::to_string(i);
      f[id] = record(id, i);
    }
    f["s1"].gpa.reset();
    f["s2"].bath_interval_variance.reset();
    std::map<std::string, SleepLabel> labels{{"s0", SleepLabel::stay_up},
                                             {"s1", SleepLabel::stay_up},
                                             {"s2", SleepLabel::stay_up},
                                             {"ghost", SleepLabel::stay_up}};
    // Only s0 is complete and labelled; one student cannot be split.
    CHECK_THROWS_AS(build_profiles(f, labels), DomainError);
  }

  TEST_CASE("exclusion reasons are recorded") {
    FeatureMap f;
    for (int i = 0; i < 5; ++i) {
      const std::string id = "s" + std::to_string(i);
      f[id] = record(id, i);
    }
    f["s1"].gpa.reset();
    std::map<std::string, SleepLabel> labels;
    for (const auto& [id, r] : f) labels[id] = SleepLabel::non_stay_up;
    labels.erase("s4");
    labels["ghost"] = SleepLabel::stay_up;
    const auto r = build_profiles(f, labels);
    CHECK(r.profiles.size() == 3);
    CHECK(r.metadata.excluded.at("s1") == "gpa undefined");
    CHECK(r.metadata.excluded.at("s4") == "no sleep label");
    CHECK(r.metadata.excluded.at("ghost") == "no feature record");
  }

  TEST_CASE("a spec must cover exactly the six median-split variables") {
    auto spec = DiscretizationSpec::defaults();
    CHECK_NOTHROW(spec.validate());
    spec.rules.pop_back();
    CHECK_THROWS_AS(spec.validate(), DomainError);
    spec = DiscretizationSpec::defaults();
    spec.rules.push_back(spec.rules.front());
    CHECK_THROWS_AS(spec.validate(), DomainError);
  }

  TEST_CASE("profiles are deterministic and round trip through CSV") {
    testing::TempDir dir;
    FeatureMap f;
    std::map<std::string, SleepLabel> labels;
    for (int i = 0; i < 30; ++i) {
      const std::string id = "s" + std::to_string(i);
      f[id] = record(id, (i * 7) % 11);
      labels[id] = i % 3 ? SleepLabel::stay_up : SleepLabel::non_stay_up;
    }
    const auto a = build_profiles(f, labels);
    const auto b = build_profiles(f, labels);
    CHECK(a.profiles == b.profiles);
    {
      auto out = csv::open_output(dir / "p.csv");
      write_profiles_csv(out, a.profiles);
    }
    CHECK(read_profiles_csv(dir / "p.csv") == a.profiles);
    CHECK(testing::read_file(dir / "p.csv").rfind("student_id,G,R,A,T,Br,Ba,F,Ac,S\n", 0) == 0);

    const auto table = to_dataset(a.profiles);
    CHECK(table.rows() == 30);
    CHECK(table.variables().name(8) == "S");
    for (std::size_t r = 0; r < table.rows(); ++r) {
      CHECK(table(r, 8) == a.profiles[r]["S"]);
    }
  }

  TEST_CASE("non-binary cells in a profile file are rejected") {
    testing::TempDir dir;
    testing::write_file(dir / "p.csv",
                        "student_id,G,R,A,T,Br,Ba,F,Ac,S\nx,0,1,0,1,0,1,0,2,1\n");
    CHECK_THROWS_AS(read_profiles_csv(dir / "p.csv"), ParseError);
  }
}
