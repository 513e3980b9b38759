#include "orchvis/normalize.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <string>
#include <vector>

namespace orchvis {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(),
                                   [](unsigned char c) { return std::isdigit(c); });
}

std::optional<double> to_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// --- money -----------------------------------------------------------------

struct CurrencyAlias {
  std::string_view token;
  std::string_view code;
};

constexpr std::array<CurrencyAlias, 14> kCurrencyWords = {{
    {"usd", "USD"}, {"dollar", "USD"}, {"dollars", "USD"}, {"bucks", "USD"},
    {"eur", "EUR"}, {"euro", "EUR"}, {"euros", "EUR"},
    {"gbp", "GBP"}, {"pound", "GBP"}, {"pounds", "GBP"},
    {"jpy", "JPY"}, {"yen", "JPY"},
    {"cad", "CAD"}, {"aud", "AUD"},
}};

constexpr std::array<CurrencyAlias, 4> kCurrencySymbols = {{
    {"$", "USD"}, {"\xE2\x82\xAC", "EUR"}, {"\xC2\xA3", "GBP"}, {"\xC2\xA5", "JPY"},
}};

constexpr std::array<std::string_view, 17> kBoundWords = {
    "under", "below", "less", "than", "at", "most", "up", "to", "max", "maximum",
    "no", "more", "around", "about", "approximately", "budget", "of"};

}  // namespace

std::optional<Money> parse_money_text(std::string_view text) {
  std::string s = lower(trim(text));
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == ',' && std::isdigit(static_cast<unsigned char>(s[i - 1])) &&
        std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
      s.erase(i, 1);
    }
  }
  for (std::string_view sym : {"<=", "\xE2\x89\xA4", "<", "~"}) {
    for (auto pos = s.find(sym); pos != std::string::npos; pos = s.find(sym)) {
      s.replace(pos, sym.size(), " ");
    }
  }
  std::optional<std::string> currency;
  for (const auto& alias : kCurrencySymbols) {
    auto pos = s.find(alias.token);
    if (pos != std::string::npos) {
      if (currency && *currency != alias.code) return std::nullopt;
      currency = std::string(alias.code);
      s.replace(pos, alias.token.size(), " ");
    }
  }
  std::optional<std::int64_t> minor;
  for (auto& word : split_words(s)) {
    if (std::find(kBoundWords.begin(), kBoundWords.end(), word) != kBoundWords.end()) continue;
    auto cur = std::find_if(kCurrencyWords.begin(), kCurrencyWords.end(),
                            [&](const CurrencyAlias& a) { return a.token == word; });
    if (cur != kCurrencyWords.end()) {
      if (currency && *currency != cur->code) return std::nullopt;
      currency = std::string(cur->code);
      continue;
    }
    if (minor) return std::nullopt;
    std::int64_t scale = 1;
    if (word.size() > 1 && word.back() == 'k') {
      scale = 1000;
      word.pop_back();
    }
    auto amount = parse_money_amount(word);
    if (!amount) return std::nullopt;
    minor = *amount * scale;
  }
  if (!minor || !currency || *minor < 0) return std::nullopt;
  return Money{*minor, *currency};
}

// --- timestamps ------------------------------------------------------------

namespace {

constexpr std::array<std::string_view, 7> kWeekdays = {
    "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"};

std::optional<int> weekday_index(std::string_view word) {
  for (std::size_t i = 0; i < kWeekdays.size(); ++i) {
    if (word == kWeekdays[i] || word == kWeekdays[i].substr(0, 3)) return static_cast<int>(i);
  }
  return std::nullopt;
}

// Monday = 0. 1970-01-01 was a Thursday.
int weekday_of(std::int64_t days) {
  return static_cast<int>(((days % 7) + 7 + 3) % 7);
}

// "7pm", "7:30pm", "19:00", "noon", "midnight", optionally split as "7 pm".
std::optional<std::int64_t> parse_time_of_day(const std::string& word,
                                              const std::string* next, bool& used_next) {
  used_next = false;
  if (word == "noon") return 12 * 3600;
  if (word == "midnight") return 0;
  std::string w = word;
  std::string suffix;
  if (w.size() > 2 && (w.ends_with("am") || w.ends_with("pm"))) {
    suffix = w.substr(w.size() - 2);
    w.resize(w.size() - 2);
  } else if (next && (*next == "am" || *next == "pm")) {
    suffix = *next;
    used_next = true;
  }
  int hour = 0, minute = 0;
  auto colon = w.find(':');
  std::string hs = w.substr(0, colon);
  if (!all_digits(hs) || hs.size() > 2) return std::nullopt;
  hour = std::stoi(hs);
  if (colon != std::string::npos) {
    std::string ms = w.substr(colon + 1);
    if (!all_digits(ms) || ms.size() != 2) return std::nullopt;
    minute = std::stoi(ms);
  } else if (suffix.empty()) {
    return std::nullopt;  // a bare number is not a time of day
  }
  if (!suffix.empty()) {
    if (hour < 1 || hour > 12) return std::nullopt;
    hour %= 12;
    if (suffix == "pm") hour += 12;
  }
  if (hour > 23 || minute > 59) return std::nullopt;
  return hour * 3600 + minute * 60;
}

std::optional<std::int64_t> parse_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto y = s.substr(0, 4), m = s.substr(5, 2), d = s.substr(8, 2);
  if (!all_digits(y) || !all_digits(m) || !all_digits(d)) return std::nullopt;
  int year = std::stoi(std::string(y));
  unsigned month = static_cast<unsigned>(std::stoi(std::string(m)));
  unsigned day = static_cast<unsigned>(std::stoi(std::string(d)));
  if (month < 1 || month > 12 || day < 1 || day > 31) return std::nullopt;
  auto check = parse_rfc3339(std::string(s) + "T00:00:00Z");
  if (!check) return std::nullopt;
  return days_from_civil(year, month, day);
}

}  // namespace

std::optional<Timestamp> parse_timestamp_text(std::string_view text, Timestamp clock) {
  std::string_view trimmed = trim(text);
  if (auto exact = parse_rfc3339(trimmed)) return exact;

  const std::int64_t today = (clock.seconds >= 0 ? clock.seconds : clock.seconds - 86399) / 86400;
  std::optional<std::int64_t> day;
  std::optional<std::int64_t> time;
  auto words = split_words(lower(trimmed));
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::string& w = words[i];
    const std::string* next = i + 1 < words.size() ? &words[i + 1] : nullptr;
    auto set_day = [&](std::int64_t d) {
      if (day) return false;
      day = d;
      return true;
    };
    if (w == "at" || w == "on") continue;
    if (auto iso = parse_iso_date(w)) {
      if (!set_day(*iso)) return std::nullopt;
      continue;
    }
    if (w == "today" || w == "tonight") {
      if (!set_day(today)) return std::nullopt;
      continue;
    }
    if (w == "tomorrow") {
      if (!set_day(today + 1)) return std::nullopt;
      continue;
    }
    if (w == "yesterday") {
      if (!set_day(today - 1)) return std::nullopt;
      continue;
    }
    if (w == "day" && next && *next == "after" && i + 2 < words.size() &&
        words[i + 2] == "tomorrow") {
      if (!set_day(today + 2)) return std::nullopt;
      i += 2;
      continue;
    }
    if ((w == "next" || w == "this") && next) {
      if (*next == "week") {
        if (w != "next" || !set_day(today + 7)) return std::nullopt;
        ++i;
        continue;
      }
      auto wd = weekday_index(*next);
      if (!wd) return std::nullopt;
      int delta = (*wd - weekday_of(today) + 7) % 7;
      if (w == "next" && delta == 0) delta = 7;
      if (!set_day(today + delta)) return std::nullopt;
      ++i;
      continue;
    }
    if (auto wd = weekday_index(w)) {
      if (!set_day(today + (*wd - weekday_of(today) + 7) % 7)) return std::nullopt;
      continue;
    }
    if (w == "in" && next && all_digits(*next) && i + 2 < words.size()) {
      std::int64_t n = std::stoll(*next);
      const std::string& unit = words[i + 2];
      std::int64_t per = 0;
      if (unit == "day" || unit == "days") per = 1;
      if (unit == "week" || unit == "weeks") per = 7;
      if (per == 0 || !set_day(today + n * per)) return std::nullopt;
      i += 2;
      continue;
    }
    bool used_next = false;
    if (auto tod = parse_time_of_day(w, next, used_next)) {
      if (time) return std::nullopt;
      time = *tod;
      if (used_next) ++i;
      continue;
    }
    return std::nullopt;
  }
  if (!day && !time) return std::nullopt;
  return Timestamp{day.value_or(today) * 86400 + time.value_or(0)};
}

// --- durations -------------------------------------------------------------

namespace {

std::optional<double> unit_minutes(std::string_view unit) {
  if (unit == "m" || unit == "min" || unit == "mins" || unit == "minute" || unit == "minutes") return 1;
  if (unit == "h" || unit == "hr" || unit == "hrs" || unit == "hour" || unit == "hours") return 60;
  if (unit == "d" || unit == "day" || unit == "days") return 1440;
  if (unit == "w" || unit == "week" || unit == "weeks") return 10080;
  return std::nullopt;
}

std::optional<double> parse_iso8601_duration(std::string_view s) {
  if (s.size() < 3 || s[0] != 'p') return std::nullopt;
  double total = 0;
  bool in_time = false;
  std::string num;
  for (std::size_t i = 1; i < s.size(); ++i) {
    char c = s[i];
    if (c == 't') {
      in_time = true;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      num += c;
      continue;
    }
    auto v = to_double(num);
    if (!v) return std::nullopt;
    num.clear();
    if (c == 'd' && !in_time) total += *v * 1440;
    else if (c == 'w' && !in_time) total += *v * 10080;
    else if (c == 'h' && in_time) total += *v * 60;
    else if (c == 'm' && in_time) total += *v;
    else if (c == 's' && in_time) total += *v / 60;
    else return std::nullopt;
  }
  if (!num.empty()) return std::nullopt;
  return total;
}

}  // namespace

std::optional<Duration> parse_duration_text(std::string_view text) {
  std::string s = lower(trim(text));
  if (s.empty()) return std::nullopt;
  std::optional<double> total = parse_iso8601_duration(s);
  if (!total) {
    // Split into alternating number / unit runs: "1h30m", "1 hour 30 minutes".
    double sum = 0;
    bool any = false;
    std::size_t i = 0;
    while (i < s.size()) {
      while (i < s.size() && (std::isspace(static_cast<unsigned char>(s[i])) || s[i] == ',')) ++i;
      if (i >= s.size()) break;
      std::size_t start = i;
      while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
      auto v = to_double(std::string_view(s).substr(start, i - start));
      if (!v) return std::nullopt;
      while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
      start = i;
      while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) ++i;
      auto per = unit_minutes(std::string_view(s).substr(start, i - start));
      if (!per) return std::nullopt;
      sum += *v * *per;
      any = true;
      std::string_view rest = std::string_view(s).substr(i);
      if (trim(rest).starts_with("and")) i += rest.find("and") + 3;
    }
    if (!any) return std::nullopt;
    total = sum;
  }
  if (*total < 0) return std::nullopt;
  return Duration{static_cast<std::int64_t>(std::llround(*total))};
}

std::optional<double> parse_number_text(std::string_view text) {
  std::string s;
  for (char c : trim(text)) {
    if (c != ',') s += c;
  }
  return to_double(s);
}

std::optional<bool> parse_flag_text(std::string_view text) {
  std::string s = lower(trim(text));
  if (s == "yes" || s == "y" || s == "true" || s == "1" || s == "on") return true;
  if (s == "no" || s == "n" || s == "false" || s == "0" || s == "off") return false;
  return std::nullopt;
}

TypedValue normalize_value(const TypedValue& value, Timestamp clock) {
  if (!value.is_raw()) return value;
  const std::string& text = value.raw_text();
  auto fail = [&]() -> TypedValue {
    throw Error("unparseable-value",
                "cannot parse \"" + text + "\" as " + std::string(to_string(value.kind())),
                Json{{"text", text}, {"kind", std::string(to_string(value.kind()))}});
  };
  switch (value.kind()) {
    case ValueKind::number:
      if (auto v = parse_number_text(text)) return TypedValue::number(*v);
      return fail();
    case ValueKind::money:
      if (auto m = parse_money_text(text)) return TypedValue::money(m->minor, m->currency);
      return fail();
    case ValueKind::timestamp:
      if (auto ts = parse_timestamp_text(text, clock)) return TypedValue::timestamp(ts->seconds);
      return fail();
    case ValueKind::duration:
      if (auto d = parse_duration_text(text)) return TypedValue::duration(d->minutes);
      return fail();
    case ValueKind::text: return TypedValue::text(text);
    case ValueKind::flag:
      if (auto f = parse_flag_text(text)) return TypedValue::flag(*f);
      return fail();
  }
  return fail();
}

}  // namespace orchvis
