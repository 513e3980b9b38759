#include "orchvis/value.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "orchvis/json_util.hpp"

namespace orchvis {

namespace {

constexpr std::array<std::string_view, 6> kKindNames = {
    "number", "money", "timestamp", "duration", "text", "flag"};

constexpr std::array<std::string_view, 9> kOpNames = {
    "eq", "ne", "lt", "le", "gt", "ge", "in_set", "contains", "within_interval"};

bool numeric_kind(ValueKind k) {
  return k == ValueKind::number || k == ValueKind::money ||
         k == ValueKind::timestamp || k == ValueKind::duration;
}

[[noreturn]] void mismatch(const std::string& why) {
  throw Error("type-mismatch", why);
}

void require_same_kind(const TypedValue& observed, const TypedValue& expected) {
  if (observed.is_raw() || expected.is_raw()) mismatch("unnormalized value");
  if (observed.kind() != expected.kind()) {
    mismatch("observed " + std::string(to_string(observed.kind())) +
             " vs expected " + std::string(to_string(expected.kind())));
  }
  if (observed.kind() == ValueKind::money &&
      observed.as_money().currency != expected.as_money().currency) {
    mismatch("cross-currency comparison " + observed.as_money().currency +
             " vs " + expected.as_money().currency);
  }
}

int compare_ordered(const TypedValue& observed, const TypedValue& expected) {
  require_same_kind(observed, expected);
  if (!numeric_kind(observed.kind())) {
    mismatch("ordering on " + std::string(to_string(observed.kind())));
  }
  double a = *observed.numeric();
  double b = *expected.numeric();
  return a < b ? -1 : (a > b ? 1 : 0);
}

bool scalar_equal(const TypedValue& observed, const TypedValue& expected) {
  require_same_kind(observed, expected);
  return observed == expected;
}

}  // namespace

std::string_view to_string(ValueKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

ValueKind value_kind_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == text) return static_cast<ValueKind>(i);
  }
  throw Error("schema-error", "unknown value kind '" + std::string(text) + "'");
}

std::string_view to_string(Op op) { return kOpNames[static_cast<std::size_t>(op)]; }

Op op_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kOpNames.size(); ++i) {
    if (kOpNames[i] == text) return static_cast<Op>(i);
  }
  throw Error("schema-error", "unknown op '" + std::string(text) + "'");
}

bool is_ordering_op(Op op) {
  return op == Op::lt || op == Op::le || op == Op::gt || op == Op::ge;
}

TypedValue TypedValue::number(double v) {
  TypedValue t;
  t.kind_ = ValueKind::number;
  t.payload_ = v;
  return t;
}

TypedValue TypedValue::money(std::int64_t minor, std::string currency) {
  TypedValue t;
  t.kind_ = ValueKind::money;
  t.payload_ = Money{minor, std::move(currency)};
  return t;
}

TypedValue TypedValue::timestamp(std::int64_t seconds) {
  TypedValue t;
  t.kind_ = ValueKind::timestamp;
  t.payload_ = Timestamp{seconds};
  return t;
}

TypedValue TypedValue::duration(std::int64_t minutes) {
  TypedValue t;
  t.kind_ = ValueKind::duration;
  t.payload_ = Duration{minutes};
  return t;
}

TypedValue TypedValue::text(std::string v) {
  TypedValue t;
  t.kind_ = ValueKind::text;
  t.payload_ = std::move(v);
  return t;
}

TypedValue TypedValue::flag(bool v) {
  TypedValue t;
  t.kind_ = ValueKind::flag;
  t.payload_ = v;
  return t;
}

TypedValue TypedValue::raw(ValueKind kind, std::string text) {
  TypedValue t;
  t.kind_ = kind;
  t.raw_ = std::move(text);
  return t;
}

std::string TypedValue::unit_tag() const {
  if (is_raw()) return {};
  switch (kind_) {
    case ValueKind::money: return as_money().currency;
    case ValueKind::duration: return "min";
    case ValueKind::timestamp: return "UTC";
    default: return {};
  }
}

std::optional<double> TypedValue::numeric() const {
  if (is_raw()) return std::nullopt;
  switch (kind_) {
    case ValueKind::number: return as_number();
    case ValueKind::money: return static_cast<double>(as_money().minor);
    case ValueKind::timestamp: return static_cast<double>(as_timestamp().seconds);
    case ValueKind::duration: return static_cast<double>(as_duration().minutes);
    default: return std::nullopt;
  }
}

ValueKind constraint_value_kind(const ConstraintValue& value) {
  if (const auto* v = std::get_if<TypedValue>(&value)) return v->kind();
  if (const auto* iv = std::get_if<TypedInterval>(&value)) return iv->lo.kind();
  const auto& set = std::get<TypedSet>(value);
  return set.items.empty() ? ValueKind::text : set.items.front().kind();
}

std::string constraint_value_unit(const ConstraintValue& value) {
  if (const auto* v = std::get_if<TypedValue>(&value)) return v->unit_tag();
  if (const auto* iv = std::get_if<TypedInterval>(&value)) return iv->lo.unit_tag();
  const auto& set = std::get<TypedSet>(value);
  return set.items.empty() ? std::string{} : set.items.front().unit_tag();
}

std::optional<std::string> check_op_value(Op op, const ConstraintValue& value) {
  auto scalar = std::get_if<TypedValue>(&value);
  auto interval = std::get_if<TypedInterval>(&value);
  auto set = std::get_if<TypedSet>(&value);
  auto raw_in = [&]() {
    if (scalar) return scalar->is_raw();
    if (interval) return interval->lo.is_raw() || interval->hi.is_raw();
    for (const auto& item : set->items) {
      if (item.is_raw()) return true;
    }
    return false;
  };
  if (raw_in()) return "unnormalized-value";
  switch (op) {
    case Op::eq:
    case Op::ne:
      if (!scalar) return "op-value-mismatch";
      return std::nullopt;
    case Op::lt:
    case Op::le:
    case Op::gt:
    case Op::ge:
      if (!scalar || !numeric_kind(scalar->kind())) return "op-value-mismatch";
      return std::nullopt;
    case Op::contains:
      if (!scalar || scalar->kind() != ValueKind::text) return "op-value-mismatch";
      return std::nullopt;
    case Op::within_interval: {
      if (!interval) return "op-value-mismatch";
      if (interval->lo.kind() != interval->hi.kind() ||
          !numeric_kind(interval->lo.kind())) {
        return "op-value-mismatch";
      }
      if (interval->lo.kind() == ValueKind::money &&
          interval->lo.as_money().currency != interval->hi.as_money().currency) {
        return "op-value-mismatch";
      }
      if (*interval->lo.numeric() > *interval->hi.numeric()) {
        return "interval-inverted";
      }
      return std::nullopt;
    }
    case Op::in_set: {
      if (!set || set->items.empty()) return "op-value-mismatch";
      const auto& first = set->items.front();
      for (const auto& item : set->items) {
        if (item.kind() != first.kind() || item.unit_tag() != first.unit_tag()) {
          return "op-value-mismatch";
        }
      }
      return std::nullopt;
    }
  }
  return "op-value-mismatch";
}

bool apply_op(Op op, const TypedValue& observed, const ConstraintValue& expected) {
  if (auto why = check_op_value(op, expected)) mismatch(*why);
  switch (op) {
    case Op::eq: return scalar_equal(observed, std::get<TypedValue>(expected));
    case Op::ne: return !scalar_equal(observed, std::get<TypedValue>(expected));
    case Op::lt: return compare_ordered(observed, std::get<TypedValue>(expected)) < 0;
    case Op::le: return compare_ordered(observed, std::get<TypedValue>(expected)) <= 0;
    case Op::gt: return compare_ordered(observed, std::get<TypedValue>(expected)) > 0;
    case Op::ge: return compare_ordered(observed, std::get<TypedValue>(expected)) >= 0;
    case Op::contains: {
      const auto& needle = std::get<TypedValue>(expected);
      require_same_kind(observed, needle);
      return observed.as_text().find(needle.as_text()) != std::string::npos;
    }
    case Op::within_interval: {
      const auto& iv = std::get<TypedInterval>(expected);
      return compare_ordered(observed, iv.lo) >= 0 &&
             compare_ordered(observed, iv.hi) <= 0;
    }
    case Op::in_set: {
      bool found = false;
      for (const auto& item : std::get<TypedSet>(expected).items) {
        if (scalar_equal(observed, item)) found = true;
      }
      return found;
    }
  }
  return false;
}

// --- time ------------------------------------------------------------------

std::int64_t days_from_civil(int year, unsigned month, unsigned day) {
  year -= month <= 2;
  const std::int64_t era = (year >= 0 ? year : year - 399) / 400;
  const auto yoe = static_cast<unsigned>(year - era * 400);
  const unsigned doy = (153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

namespace {

struct Civil {
  int year;
  unsigned month;
  unsigned day;
};

Civil civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {static_cast<int>(y + (m <= 2)), m, d};
}

bool read_digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  out = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    out = out * 10 + (s[i] - '0');
  }
  return true;
}

unsigned days_in_month(int year, unsigned month) {
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  return month == 2 && leap ? 29 : kDays[month - 1];
}

}  // namespace

std::string format_rfc3339(Timestamp ts) {
  std::int64_t days = ts.seconds / 86400;
  std::int64_t rem = ts.seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  Civil c = civil_from_days(days);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", c.year, c.month,
                c.day, static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                static_cast<int>(rem % 60));
  return buf;
}

std::optional<Timestamp> parse_rfc3339(std::string_view s) {
  int y, mo, d, h, mi, sec;
  if (s.size() < 20) return std::nullopt;
  if (!read_digits(s, 0, 4, y) || s[4] != '-' || !read_digits(s, 5, 2, mo) ||
      s[7] != '-' || !read_digits(s, 8, 2, d) || (s[10] != 'T' && s[10] != 't') ||
      !read_digits(s, 11, 2, h) || s[13] != ':' || !read_digits(s, 14, 2, mi) ||
      s[16] != ':' || !read_digits(s, 17, 2, sec)) {
    return std::nullopt;
  }
  if (mo < 1 || mo > 12 || d < 1 ||
      static_cast<unsigned>(d) > days_in_month(y, static_cast<unsigned>(mo)) ||
      h > 23 || mi > 59 || sec > 59) {
    return std::nullopt;
  }
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    std::size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos == start) return std::nullopt;
  }
  std::int64_t offset = 0;
  if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
    ++pos;
  } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
    int oh, om;
    if (!read_digits(s, pos + 1, 2, oh) || pos + 3 >= s.size() || s[pos + 3] != ':' ||
        !read_digits(s, pos + 4, 2, om) || oh > 23 || om > 59) {
      return std::nullopt;
    }
    offset = (oh * 3600 + om * 60) * (s[pos] == '+' ? 1 : -1);
    pos += 6;
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;
  std::int64_t days = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
  return Timestamp{days * 86400 + h * 3600 + mi * 60 + sec - offset};
}

// --- money -----------------------------------------------------------------

std::string format_money_amount(std::int64_t minor) {
  bool negative = minor < 0;
  std::uint64_t abs = negative ? static_cast<std::uint64_t>(-(minor + 1)) + 1
                               : static_cast<std::uint64_t>(minor);
  std::string out = negative ? "-" : "";
  out += std::to_string(abs / 100);
  out += '.';
  out += static_cast<char>('0' + abs % 100 / 10);
  out += static_cast<char>('0' + abs % 10);
  return out;
}

std::optional<std::int64_t> parse_money_amount(std::string_view s) {
  bool negative = false;
  if (!s.empty() && s.front() == '-') {
    negative = true;
    s.remove_prefix(1);
  }
  auto dot = s.find('.');
  std::string_view whole = s.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
  if (whole.empty() || whole.size() > 15 || frac.size() > 2) return std::nullopt;
  if (dot != std::string_view::npos && frac.empty()) return std::nullopt;
  std::int64_t units = 0;
  for (char c : whole) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    units = units * 10 + (c - '0');
  }
  std::int64_t cents = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    cents *= 10;
    if (i < frac.size()) {
      if (!std::isdigit(static_cast<unsigned char>(frac[i]))) return std::nullopt;
      cents += frac[i] - '0';
    }
  }
  std::int64_t minor = units * 100 + cents;
  return negative ? -minor : minor;
}

bool is_currency_code(std::string_view code) {
  return code.size() == 3 &&
         std::all_of(code.begin(), code.end(),
                     [](char c) { return c >= 'A' && c <= 'Z'; });
}

// --- serialization ---------------------------------------------------------

Json to_json(const TypedValue& value) {
  Json j;
  j["kind"] = std::string(to_string(value.kind()));
  if (value.is_raw()) {
    j["raw"] = value.raw_text();
    return j;
  }
  switch (value.kind()) {
    case ValueKind::number: j["value"] = value.as_number(); break;
    case ValueKind::money:
      j["value"] = format_money_amount(value.as_money().minor);
      j["unit"] = value.as_money().currency;
      break;
    case ValueKind::timestamp:
      j["value"] = format_rfc3339(value.as_timestamp());
      j["unit"] = "UTC";
      break;
    case ValueKind::duration:
      j["value"] = value.as_duration().minutes;
      j["unit"] = "min";
      break;
    case ValueKind::text: j["value"] = value.as_text(); break;
    case ValueKind::flag: j["value"] = value.as_flag(); break;
  }
  return j;
}

TypedValue typed_value_from_json(const Json& j, const std::string& path) {
  using namespace jsonu;
  if (!j.is_object()) schema_error(path, "expected typed value object");
  if (!j.contains("kind") || !j["kind"].is_string()) {
    schema_error(child(path, "kind"), "missing or non-string kind");
  }
  ValueKind kind;
  try {
    kind = value_kind_from_string(j["kind"].get<std::string>());
  } catch (const Error&) {
    schema_error(child(path, "kind"), "unknown kind");
  }
  if (j.contains("raw")) {
    expect_object(j, path, {"kind", "raw"});
    return TypedValue::raw(kind, get_string(j, "raw", path));
  }
  switch (kind) {
    case ValueKind::number: {
      expect_object(j, path, {"kind", "value"});
      double v = get_number(j, "value", path);
      if (!std::isfinite(v)) schema_error(child(path, "value"), "non-finite number");
      return TypedValue::number(v);
    }
    case ValueKind::money: {
      expect_object(j, path, {"kind", "value", "unit"});
      const auto& unit = get_string(j, "unit", path);
      if (!is_currency_code(unit)) schema_error(child(path, "unit"), "bad currency code");
      auto minor = parse_money_amount(get_string(j, "value", path));
      if (!minor) schema_error(child(path, "value"), "bad decimal amount");
      return TypedValue::money(*minor, unit);
    }
    case ValueKind::timestamp: {
      expect_object(j, path, {"kind", "value", "unit"});
      if (get_string(j, "unit", path) != "UTC") schema_error(child(path, "unit"), "expected UTC");
      auto ts = parse_rfc3339(get_string(j, "value", path));
      if (!ts) schema_error(child(path, "value"), "bad RFC 3339 timestamp");
      return TypedValue::timestamp(ts->seconds);
    }
    case ValueKind::duration: {
      expect_object(j, path, {"kind", "value", "unit"});
      if (get_string(j, "unit", path) != "min") schema_error(child(path, "unit"), "expected min");
      auto minutes = get_integer(j, "value", path);
      if (minutes < 0) schema_error(child(path, "value"), "negative duration");
      return TypedValue::duration(minutes);
    }
    case ValueKind::text:
      expect_object(j, path, {"kind", "value"});
      return TypedValue::text(get_string(j, "value", path));
    case ValueKind::flag:
      expect_object(j, path, {"kind", "value"});
      return TypedValue::flag(get_bool(j, "value", path));
  }
  schema_error(path, "unreachable");
}

Json to_json(const ConstraintValue& value) {
  if (const auto* v = std::get_if<TypedValue>(&value)) return to_json(*v);
  if (const auto* iv = std::get_if<TypedInterval>(&value)) {
    return Json{{"lo", to_json(iv->lo)}, {"hi", to_json(iv->hi)}};
  }
  Json items = Json::array();
  for (const auto& item : std::get<TypedSet>(value).items) items.push_back(to_json(item));
  return Json{{"set", items}};
}

ConstraintValue constraint_value_from_json(const Json& j, const std::string& path) {
  using namespace jsonu;
  if (!j.is_object()) schema_error(path, "expected value object");
  if (j.contains("kind")) return typed_value_from_json(j, path);
  if (j.contains("set")) {
    expect_object(j, path, {"set"});
    TypedSet set;
    const auto& items = get_array(j, "set", path);
    for (std::size_t i = 0; i < items.size(); ++i) {
      set.items.push_back(typed_value_from_json(items[i], index(child(path, "set"), i)));
    }
    return set;
  }
  expect_object(j, path, {"lo", "hi"});
  return TypedInterval{typed_value_from_json(j["lo"], child(path, "lo")),
                       typed_value_from_json(j["hi"], child(path, "hi"))};
}

TypedValue typed_value_from_cell(ValueKind kind, const Json& cell,
                                 const std::string& path) {
  using jsonu::schema_error;
  switch (kind) {
    case ValueKind::number:
      if (!cell.is_number()) schema_error(path, "expected number cell");
      return TypedValue::number(cell.get<double>());
    case ValueKind::money: {
      if (!cell.is_string()) schema_error(path, "expected money cell \"<amount> <CUR>\"");
      const auto& s = cell.get_ref<const std::string&>();
      auto space = s.find(' ');
      if (space == std::string::npos) schema_error(path, "expected \"<amount> <CUR>\"");
      auto minor = parse_money_amount(std::string_view(s).substr(0, space));
      auto cur = s.substr(space + 1);
      if (!minor || !is_currency_code(cur)) schema_error(path, "bad money cell");
      return TypedValue::money(*minor, cur);
    }
    case ValueKind::timestamp: {
      if (!cell.is_string()) schema_error(path, "expected timestamp cell");
      auto ts = parse_rfc3339(cell.get_ref<const std::string&>());
      if (!ts) schema_error(path, "bad timestamp cell");
      return TypedValue::timestamp(ts->seconds);
    }
    case ValueKind::duration:
      if (!cell.is_number_integer() || cell.get<std::int64_t>() < 0) {
        schema_error(path, "expected non-negative integer minutes");
      }
      return TypedValue::duration(cell.get<std::int64_t>());
    case ValueKind::text:
      if (!cell.is_string()) schema_error(path, "expected text cell");
      return TypedValue::text(cell.get<std::string>());
    case ValueKind::flag:
      if (!cell.is_boolean()) schema_error(path, "expected flag cell");
      return TypedValue::flag(cell.get<bool>());
  }
  schema_error(path, "unreachable");
}

std::string describe(const TypedValue& value) {
  if (value.is_raw()) return "\"" + value.raw_text() + "\"";
  switch (value.kind()) {
    case ValueKind::number: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%g", value.as_number());
      return buf;
    }
    case ValueKind::money:
      return format_money_amount(value.as_money().minor) + " " + value.as_money().currency;
    case ValueKind::timestamp: return format_rfc3339(value.as_timestamp());
    case ValueKind::duration: return std::to_string(value.as_duration().minutes) + " min";
    case ValueKind::text: return value.as_text();
    case ValueKind::flag: return value.as_flag() ? "true" : "false";
  }
  return {};
}

std::string describe(const ConstraintValue& value) {
  if (const auto* v = std::get_if<TypedValue>(&value)) return describe(*v);
  if (const auto* iv = std::get_if<TypedInterval>(&value)) {
    return "[" + describe(iv->lo) + ", " + describe(iv->hi) + "]";
  }
  std::string out = "{";
  const auto& items = std::get<TypedSet>(value).items;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += describe(items[i]);
  }
  return out + "}";
}

}  // namespace orchvis
