#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "orchvis/error.hpp"

namespace orchvis {

enum class ValueKind { number, money, timestamp, duration, text, flag };

std::string_view to_string(ValueKind kind);
ValueKind value_kind_from_string(std::string_view text);

// Decimal money in minor units (two decimals) with an ISO-4217 code.
struct Money {
  std::int64_t minor = 0;
  std::string currency;

  friend bool operator==(const Money&, const Money&) = default;
};

// Seconds since the Unix epoch, always UTC.
struct Timestamp {
  std::int64_t seconds = 0;

  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

// Whole minutes, never negative once normalized.
struct Duration {
  std::int64_t minutes = 0;

  friend auto operator<=>(const Duration&, const Duration&) = default;
};

// A typed attribute or evidence value. A value may also be "raw": the kind is
// declared but the payload is still the unparsed text a user or model wrote
// ("under $400", "next Friday 7pm"). normalize_value turns raw into typed.
class TypedValue {
 public:
  using Payload = std::variant<std::monostate, double, Money, Timestamp,
                               Duration, std::string, bool>;

  TypedValue() = default;

  static TypedValue number(double v);
  static TypedValue money(std::int64_t minor, std::string currency);
  static TypedValue timestamp(std::int64_t seconds);
  static TypedValue duration(std::int64_t minutes);
  static TypedValue text(std::string v);
  static TypedValue flag(bool v);
  static TypedValue raw(ValueKind kind, std::string text);

  ValueKind kind() const { return kind_; }
  bool is_raw() const { return raw_.has_value(); }
  const std::string& raw_text() const { return *raw_; }

  double as_number() const { return std::get<double>(payload_); }
  const Money& as_money() const { return std::get<Money>(payload_); }
  Timestamp as_timestamp() const { return std::get<Timestamp>(payload_); }
  Duration as_duration() const { return std::get<Duration>(payload_); }
  const std::string& as_text() const { return std::get<std::string>(payload_); }
  bool as_flag() const { return std::get<bool>(payload_); }

  // Canonical unit tag: currency for money, "min" for durations, "UTC" for
  // timestamps, empty otherwise.
  std::string unit_tag() const;

  // Ordering key for numeric-like kinds (number, money, timestamp, duration).
  std::optional<double> numeric() const;

  friend bool operator==(const TypedValue&, const TypedValue&) = default;

 private:
  ValueKind kind_ = ValueKind::text;
  Payload payload_;
  std::optional<std::string> raw_;
};

struct TypedInterval {
  TypedValue lo;
  TypedValue hi;

  friend bool operator==(const TypedInterval&, const TypedInterval&) = default;
};

struct TypedSet {
  std::vector<TypedValue> items;

  friend bool operator==(const TypedSet&, const TypedSet&) = default;
};

using ConstraintValue = std::variant<TypedValue, TypedInterval, TypedSet>;

enum class Op { eq, ne, lt, le, gt, ge, in_set, contains, within_interval };

std::string_view to_string(Op op);
Op op_from_string(std::string_view text);
bool is_ordering_op(Op op);

// Returns empty when op and value shape are compatible, else a reason code.
std::optional<std::string> check_op_value(Op op, const ConstraintValue& value);

// Kind of the scalar(s) carried by a constraint value.
ValueKind constraint_value_kind(const ConstraintValue& value);
std::string constraint_value_unit(const ConstraintValue& value);

// Applies op to an observed value. Throws Error("type-mismatch") when kinds or
// currencies are incompatible.
bool apply_op(Op op, const TypedValue& observed, const ConstraintValue& expected);

// --- time and money text helpers -----------------------------------------

std::string format_rfc3339(Timestamp ts);
// Parses RFC 3339 with Z or numeric offset; result converted to UTC.
std::optional<Timestamp> parse_rfc3339(std::string_view text);
std::int64_t days_from_civil(int year, unsigned month, unsigned day);

std::string format_money_amount(std::int64_t minor);
std::optional<std::int64_t> parse_money_amount(std::string_view text);
bool is_currency_code(std::string_view code);

// --- serialization ---------------------------------------------------------

Json to_json(const TypedValue& value);
TypedValue typed_value_from_json(const Json& j, const std::string& path);
Json to_json(const ConstraintValue& value);
ConstraintValue constraint_value_from_json(const Json& j, const std::string& path);

// Column cell encoding used by fixture tables: scalars typed by a declared kind.
TypedValue typed_value_from_cell(ValueKind kind, const Json& cell,
                                 const std::string& path);

std::string describe(const TypedValue& value);
std::string describe(const ConstraintValue& value);

}  // namespace orchvis
