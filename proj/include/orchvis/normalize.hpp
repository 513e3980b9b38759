#pragma once

#include <optional>
#include <string_view>

#include "orchvis/value.hpp"

namespace orchvis {

// Free-text value parsers used to normalize raw attributes. Each returns
// nullopt when the text does not parse as the requested kind.

// "under $400", "USD 1,200.50", "350 euros", "€90" -> decimal + ISO code.
std::optional<Money> parse_money_text(std::string_view text);

// RFC 3339, "2025-01-10 19:00", "next Friday 7pm", "tomorrow at noon",
// "in 3 days". Relative phrases resolve against clock; results are UTC.
std::optional<Timestamp> parse_timestamp_text(std::string_view text, Timestamp clock);

// "90 minutes", "1.5 hours", "1h30m", "2 days", "PT45M" -> whole minutes.
std::optional<Duration> parse_duration_text(std::string_view text);

std::optional<double> parse_number_text(std::string_view text);
std::optional<bool> parse_flag_text(std::string_view text);

// Typed values pass through; raw values are parsed per their declared kind.
// Throws Error("unparseable-value").
TypedValue normalize_value(const TypedValue& value, Timestamp clock);

}  // namespace orchvis
