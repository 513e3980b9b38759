#include "orchvis/json_util.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace orchvis::jsonu {

void schema_error(const std::string& path, const std::string& reason) {
  throw Error("schema-error", path + ": " + reason,
              Json{{"path", path}, {"reason", reason}});
}

void expect_object(const Json& j, const std::string& path,
                   std::initializer_list<std::string_view> required,
                   std::initializer_list<std::string_view> optional) {
  if (!j.is_object()) schema_error(path, "expected object");
  for (auto key : required) {
    if (!j.contains(std::string(key))) {
      schema_error(child(path, key), "missing field");
    }
  }
  for (const auto& [key, _] : j.items()) {
    auto matches = [&](std::string_view k) { return k == key; };
    if (std::none_of(required.begin(), required.end(), matches) &&
        std::none_of(optional.begin(), optional.end(), matches)) {
      schema_error(child(path, key), "unknown field");
    }
  }
}

const std::string& get_string(const Json& j, std::string_view key,
                              const std::string& path) {
  const auto& v = j.at(std::string(key));
  if (!v.is_string()) schema_error(child(path, key), "expected string");
  return v.get_ref<const std::string&>();
}

double get_number(const Json& j, std::string_view key, const std::string& path) {
  const auto& v = j.at(std::string(key));
  if (!v.is_number()) schema_error(child(path, key), "expected number");
  return v.get<double>();
}

std::int64_t get_integer(const Json& j, std::string_view key,
                         const std::string& path) {
  const auto& v = j.at(std::string(key));
  if (!v.is_number_integer()) schema_error(child(path, key), "expected integer");
  return v.get<std::int64_t>();
}

bool get_bool(const Json& j, std::string_view key, const std::string& path) {
  const auto& v = j.at(std::string(key));
  if (!v.is_boolean()) schema_error(child(path, key), "expected boolean");
  return v.get<bool>();
}

const Json& get_array(const Json& j, std::string_view key, const std::string& path) {
  const auto& v = j.at(std::string(key));
  if (!v.is_array()) schema_error(child(path, key), "expected array");
  return v;
}

const Json& get_object(const Json& j, std::string_view key, const std::string& path) {
  const auto& v = j.at(std::string(key));
  if (!v.is_object()) schema_error(child(path, key), "expected object");
  return v;
}

std::string child(const std::string& path, std::string_view key) {
  return path + "." + std::string(key);
}

std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

std::string canonical(const Json& j) {
  return j.dump(2, ' ', false, Json::error_handler_t::strict) + "\n";
}

std::string compact(const Json& j) {
  return j.dump(-1, ' ', false, Json::error_handler_t::strict);
}

Json parse_text(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error("syntax-error", what + ": " + e.what(),
                Json{{"position", e.byte}});
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io-error", "cannot open " + path, Json{{"path", path}});
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Json read_file(const std::string& path) { return parse_text(read_text(path), path); }

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io-error", "cannot write " + path, Json{{"path", path}});
  out << content;
}

}  // namespace orchvis::jsonu
