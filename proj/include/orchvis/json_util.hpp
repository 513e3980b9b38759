#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include "orchvis/error.hpp"

namespace orchvis::jsonu {

// Closed-grammar object check: every key in `required` present, no key
// outside `required` ∪ `optional`. Throws Error("schema-error") with the path.
void expect_object(const Json& j, const std::string& path,
                   std::initializer_list<std::string_view> required,
                   std::initializer_list<std::string_view> optional = {});

[[noreturn]] void schema_error(const std::string& path, const std::string& reason);

const std::string& get_string(const Json& j, std::string_view key,
                              const std::string& path);
double get_number(const Json& j, std::string_view key, const std::string& path);
std::int64_t get_integer(const Json& j, std::string_view key,
                         const std::string& path);
bool get_bool(const Json& j, std::string_view key, const std::string& path);
const Json& get_array(const Json& j, std::string_view key, const std::string& path);
const Json& get_object(const Json& j, std::string_view key, const std::string& path);

std::string child(const std::string& path, std::string_view key);
std::string index(const std::string& path, std::size_t i);

// Canonical text: sorted keys, 2-space indent, LF, trailing newline.
std::string canonical(const Json& j);
// Single-line canonical text, used for log lines and stream frames.
std::string compact(const Json& j);

Json parse_text(const std::string& text, const std::string& what);
std::string read_text(const std::string& path);
Json read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace orchvis::jsonu
