#pragma once

// Strict field access for the JSON documents the toolkit reads.

#include <cmath>
#include <initializer_list>
#include <limits>
#include <optional>
#include <string>

#include <json.hpp>

#include "scalelaw/error.hpp"

namespace scalelaw::jsonutil {

using ordered_json = nlohmann::ordered_json;

inline ordered_json parse_document(const std::string& text, const std::string& what) {
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(what + " is not valid JSON: " + e.what());
  }
}

inline void require_object(const ordered_json& obj, const std::string& ctx) {
  if (!obj.is_object()) throw ValidationError(ctx + ": expected an object");
}

inline const ordered_json& field(const ordered_json& obj, const char* key, const std::string& ctx) {
  require_object(obj, ctx);
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(ctx + ": missing field '" + key + "'");
  return *it;
}

// Rejects keys outside `allowed`, so a misspelt field cannot fall back silently.
inline void only_fields(const ordered_json& obj, std::initializer_list<const char*> allowed,
                        const std::string& ctx) {
  require_object(obj, ctx);
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* a : allowed) known = known || it.key() == a;
    if (!known) throw ValidationError(ctx + ": unknown field '" + it.key() + "'");
  }
}

inline double number(const ordered_json& obj, const char* key, const std::string& ctx) {
  const auto& v = field(obj, key, ctx);
  if (!v.is_number()) throw ValidationError(ctx + ": field '" + key + "' must be a number");
  return v.get<double>();
}

// null stands for +infinity (open upper ends, absent crossovers).
inline double number_or_inf(const ordered_json& obj, const char* key, const std::string& ctx) {
  const auto& v = field(obj, key, ctx);
  if (v.is_null()) return std::numeric_limits<double>::infinity();
  if (!v.is_number())
    throw ValidationError(ctx + ": field '" + key + "' must be a number or null");
  return v.get<double>();
}

inline std::optional<double> optional_number(const ordered_json& obj, const char* key,
                                             const std::string& ctx) {
  require_object(obj, ctx);
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw ValidationError(ctx + ": field '" + key + "' must be a number");
  return it->get<double>();
}

inline std::int64_t integer(const ordered_json& obj, const char* key, const std::string& ctx) {
  const auto& v = field(obj, key, ctx);
  if (!v.is_number_integer())
    throw ValidationError(ctx + ": field '" + key + "' must be an integer");
  return v.get<std::int64_t>();
}

inline bool boolean(const ordered_json& obj, const char* key, const std::string& ctx) {
  const auto& v = field(obj, key, ctx);
  if (!v.is_boolean()) throw ValidationError(ctx + ": field '" + key + "' must be true or false");
  return v.get<bool>();
}

inline std::string text(const ordered_json& obj, const char* key, const std::string& ctx) {
  const auto& v = field(obj, key, ctx);
  if (!v.is_string()) throw ValidationError(ctx + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

inline ordered_json finite_or_null(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

inline ordered_json optional_value(const std::optional<double>& v) {
  return v ? finite_or_null(*v) : ordered_json(nullptr);
}

inline std::string dump(const ordered_json& doc) { return doc.dump(2) + "\n"; }

}  // namespace scalelaw::jsonutil
