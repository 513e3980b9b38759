#include <gtest/gtest.h>

#include "orchvis/normalize.hpp"

using namespace orchvis;

namespace {

// Independent calendar oracle: day numbers since 1970-01-01 (a Thursday) and
// plain modular weekday arithmetic.
constexpr std::int64_t kDay = 86400;

int oracle_weekday(std::int64_t day) {  // 0 = Sunday
  return static_cast<int>(((day % 7) + 7 + 4) % 7);
}

std::int64_t oracle_on_or_after(std::int64_t today, int weekday) {
  std::int64_t d = today;
  while (oracle_weekday(d) != weekday) ++d;
  return d;
}

std::int64_t oracle_strictly_after(std::int64_t today, int weekday) {
  std::int64_t d = today + 1;
  while (oracle_weekday(d) != weekday) ++d;
  return d;
}

constexpr int kSun = 0, kMon = 1, kTue = 2, kWed = 3, kThu = 4, kFri = 5, kSat = 6;

struct Phrase {
  const char* text;
  std::int64_t expected;
};

std::vector<Phrase> oracle_table(Timestamp clock) {
  const std::int64_t t = clock.seconds / kDay;
  auto at = [](std::int64_t day, int h, int m) { return day * kDay + h * 3600 + m * 60; };
  return {
      {"next Friday 7pm", at(oracle_strictly_after(t, kFri), 19, 0)},
      {"next friday at 7:30 pm", at(oracle_strictly_after(t, kFri), 19, 30)},
      {"this Friday 9am", at(oracle_on_or_after(t, kFri), 9, 0)},
      {"Friday 19:00", at(oracle_on_or_after(t, kFri), 19, 0)},
      {"next Monday 08:15", at(oracle_strictly_after(t, kMon), 8, 15)},
      {"this monday noon", at(oracle_on_or_after(t, kMon), 12, 0)},
      {"next Sunday midnight", at(oracle_strictly_after(t, kSun), 0, 0)},
      {"saturday 10:30am", at(oracle_on_or_after(t, kSat), 10, 30)},
      {"next Tuesday", at(oracle_strictly_after(t, kTue), 0, 0)},
      {"Wednesday 6pm", at(oracle_on_or_after(t, kWed), 18, 0)},
      {"next thursday 11pm", at(oracle_strictly_after(t, kThu), 23, 0)},
      {"tomorrow at noon", at(t + 1, 12, 0)},
      {"tomorrow 7am", at(t + 1, 7, 0)},
      {"today 5pm", at(t, 17, 0)},
      {"tonight 9pm", at(t, 21, 0)},
      {"yesterday 3pm", at(t - 1, 15, 0)},
      {"day after tomorrow 10am", at(t + 2, 10, 0)},
      {"in 3 days", at(t + 3, 0, 0)},
      {"in 2 weeks 14:45", at(t + 14, 14, 45)},
      {"next week", at(t + 7, 0, 0)},
      {"12am", at(t, 0, 0)},
      {"12pm", at(t, 12, 0)},
  };
}

}  // namespace

class RelativeDates : public ::testing::TestWithParam<const char*> {};

TEST_P(RelativeDates, MatchesCalendarOracle) {
  Timestamp clock{*parse_rfc3339(GetParam())};
  auto table = oracle_table(clock);
  ASSERT_GE(table.size(), 20u);
  for (const auto& p : table) {
    auto got = parse_timestamp_text(p.text, clock);
    ASSERT_TRUE(got) << p.text;
    EXPECT_EQ(format_rfc3339(*got), format_rfc3339(Timestamp{p.expected})) << p.text;
  }
}

INSTANTIATE_TEST_SUITE_P(Clocks, RelativeDates,
                         ::testing::Values("2025-01-06T00:00:00Z", "2025-01-09T15:30:00Z",
                                           "2025-01-12T23:59:00Z", "2024-02-28T08:00:00Z"));

TEST(RelativeDates, ScenarioClockExample) {
  Timestamp clock{*parse_rfc3339("2025-01-06T00:00:00Z")};
  EXPECT_EQ(format_rfc3339(*parse_timestamp_text("next Friday 7pm", clock)), "2025-01-10T19:00:00Z");
}

TEST(RelativeDates, AbsoluteForms) {
  Timestamp clock{0};
  EXPECT_EQ(format_rfc3339(*parse_timestamp_text("2025-01-10 19:00", clock)), "2025-01-10T19:00:00Z");
  EXPECT_EQ(format_rfc3339(*parse_timestamp_text("2025-01-10T11:00:00-08:00", clock)),
            "2025-01-10T19:00:00Z");
  EXPECT_EQ(format_rfc3339(*parse_timestamp_text("2025-01-10", clock)), "2025-01-10T00:00:00Z");
}

TEST(RelativeDates, Rejects) {
  Timestamp clock{0};
  for (const char* bad : {"", "soon", "next fortnight", "13pm", "25:00", "tomorrow today",
                          "in three days", "7pm 8pm", "friday monday"}) {
    EXPECT_FALSE(parse_timestamp_text(bad, clock)) << bad;
  }
}

TEST(MoneyText, Notations) {
  struct Case {
    const char* text;
    std::int64_t minor;
    const char* currency;
  };
  for (const Case& c : std::initializer_list<Case>{
           {"under $400", 40000, "USD"},
           {"$356.00", 35600, "USD"},
           {"USD 1,200.50", 120050, "USD"},
           {"350 euros", 35000, "EUR"},
           {"\xe2\x82\xac" "90", 9000, "EUR"},
           {"less than 1.5k USD", 150000, "USD"},
           {"\xc2\xa3" "45.5", 4550, "GBP"},
           {"at most 600 dollars", 60000, "USD"},
           {"1500 usd", 150000, "USD"},
           {"JPY 12000", 1200000, "JPY"},
       }) {
    auto m = parse_money_text(c.text);
    ASSERT_TRUE(m) << c.text;
    EXPECT_EQ(m->minor, c.minor) << c.text;
    EXPECT_EQ(m->currency, c.currency) << c.text;
  }
}

TEST(MoneyText, RequiresCurrencyAndAmount) {
  for (const char* bad : {"cheap", "400", "$", "under budget", "$4.005", "1,2,3 USD x"}) {
    EXPECT_FALSE(parse_money_text(bad)) << bad;
  }
}

TEST(DurationText, Forms) {
  EXPECT_EQ(parse_duration_text("90 minutes")->minutes, 90);
  EXPECT_EQ(parse_duration_text("1.5 hours")->minutes, 90);
  EXPECT_EQ(parse_duration_text("1h30m")->minutes, 90);
  EXPECT_EQ(parse_duration_text("2 days")->minutes, 2880);
  EXPECT_EQ(parse_duration_text("PT45M")->minutes, 45);
  EXPECT_EQ(parse_duration_text("P1DT2H")->minutes, 1560);
  EXPECT_FALSE(parse_duration_text("a while"));
  EXPECT_FALSE(parse_duration_text("-5 minutes"));
}

TEST(NormalizeValue, RawToTypedAndIdempotent) {
  Timestamp clock{*parse_rfc3339("2025-01-06T00:00:00Z")};
  auto v = normalize_value(TypedValue::raw(ValueKind::money, "under $400"), clock);
  EXPECT_EQ(v, TypedValue::money(40000, "USD"));
  EXPECT_EQ(normalize_value(v, clock), v);
  auto t = normalize_value(TypedValue::raw(ValueKind::timestamp, "next Friday 7pm"), clock);
  EXPECT_EQ(format_rfc3339(t.as_timestamp()), "2025-01-10T19:00:00Z");
  EXPECT_EQ(normalize_value(TypedValue::raw(ValueKind::flag, "yes"), clock), TypedValue::flag(true));
  EXPECT_EQ(normalize_value(TypedValue::raw(ValueKind::number, "3"), clock), TypedValue::number(3));
}

TEST(NormalizeValue, UnparseableCarriesText) {
  try {
    normalize_value(TypedValue::raw(ValueKind::money, "cheap"), Timestamp{0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "unparseable-value");
    EXPECT_EQ(e.detail()["text"], "cheap");
  }
}
