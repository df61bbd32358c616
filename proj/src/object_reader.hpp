#pragma once

// Strict reader for one JSON object of a config document: every key must be
// consumed, every value is range-checked, and a materialized copy (defaults
// filled, declaration order) is produced alongside.

#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qoetrust/errors.hpp"

namespace qoetrust::detail {

class ObjectReader {
 public:
  using Json = nlohmann::ordered_json;

  ObjectReader(const Json& object, std::string path)
      : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) throw ConfigError("must be an object", path_);
  }

  std::string at(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  /// Marks `key` consumed; nullptr when absent.
  const Json* child(const std::string& key) {
    used_.insert(key);
    const auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  const Json& required(const std::string& key) {
    const Json* value = child(key);
    if (value == nullptr) throw ConfigError("missing required field", at(key));
    return *value;
  }

  double number(const std::string& key, std::optional<double> fallback, double lo,
                double hi) {
    const Json* value = fallback ? child(key) : &required(key);
    double x = fallback.value_or(0.0);
    if (value != nullptr) {
      if (!value->is_number()) throw ConfigError("must be a number", at(key));
      x = value->get<double>();
    }
    if (!(x >= lo && x <= hi)) {
      throw ConfigError("must be in [" + fmt(lo) + ", " + fmt(hi) + "]", at(key));
    }
    out_[key] = x;
    return x;
  }

  std::uint64_t integer(const std::string& key, std::optional<std::uint64_t> fallback,
                        std::uint64_t lo = 0,
                        std::uint64_t hi = std::numeric_limits<std::uint32_t>::max()) {
    const Json* value = fallback ? child(key) : &required(key);
    std::uint64_t x = fallback.value_or(0);
    if (value != nullptr) {
      // Documents built in code hold positive ints as signed values.
      const bool nonnegative_int =
          value->is_number_unsigned() ||
          (value->is_number_integer() && value->get<std::int64_t>() >= 0);
      if (!nonnegative_int) throw ConfigError("must be a nonnegative integer", at(key));
      x = value->get<std::uint64_t>();
    }
    if (x < lo || x > hi) {
      throw ConfigError("must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]",
                        at(key));
    }
    out_[key] = x;
    return x;
  }

  bool boolean(const std::string& key, bool fallback) {
    const Json* value = child(key);
    bool b = fallback;
    if (value != nullptr) {
      if (!value->is_boolean()) throw ConfigError("must be true or false", at(key));
      b = value->get<bool>();
    }
    out_[key] = b;
    return b;
  }

  std::string string(const std::string& key) {
    const Json& value = required(key);
    if (!value.is_string()) throw ConfigError("must be a string", at(key));
    auto s = value.get<std::string>();
    out_[key] = s;
    return s;
  }

  std::string string_or(const std::string& key, const std::string& fallback) {
    const Json* value = child(key);
    std::string s = fallback;
    if (value != nullptr) {
      if (!value->is_string()) throw ConfigError("must be a string", at(key));
      s = value->get<std::string>();
    }
    out_[key] = s;
    return s;
  }

  std::string reference(const std::string& key, const std::set<std::string>& known,
                        const std::string& what) {
    const Json& value = required(key);
    if (!value.is_string()) throw ConfigError("must be a " + what + " id", at(key));
    auto id = value.get<std::string>();
    if (!known.contains(id)) {
      throw ConfigError("dangling reference to undefined " + what + " '" + id + "'",
                        at(key));
    }
    out_[key] = id;
    return id;
  }

  std::optional<std::string> optional_reference(const std::string& key,
                                                const std::set<std::string>& known,
                                                const std::string& what) {
    const Json* value = child(key);
    if (value == nullptr || value->is_null()) {
      out_[key] = nullptr;
      return std::nullopt;
    }
    return reference(key, known, what);
  }

  std::vector<std::string> reference_list(const std::string& key,
                                          const std::set<std::string>& known,
                                          const std::string& what) {
    const Json* value = child(key);
    std::vector<std::string> ids;
    if (value != nullptr) {
      if (!value->is_array()) throw ConfigError("must be a list", at(key));
      for (std::size_t i = 0; i < value->size(); ++i) {
        const auto& item = (*value)[i];
        const std::string item_path = at(key) + "[" + std::to_string(i) + "]";
        if (!item.is_string()) throw ConfigError("must be a string", item_path);
        auto id = item.get<std::string>();
        if (!known.contains(id)) {
          throw ConfigError("dangling reference to undefined " + what + " '" + id + "'",
                            item_path);
        }
        ids.push_back(std::move(id));
      }
    }
    out_[key] = ids;
    return ids;
  }

  void set(const std::string& key, Json value) { out_[key] = std::move(value); }

  /// Rejects keys that were never consumed and returns the materialized copy.
  Json finish() {
    for (const auto& item : object_.items()) {
      if (!used_.contains(item.key())) {
        throw ConfigError("unknown key '" + item.key() + "'", at(item.key()));
      }
    }
    return std::move(out_);
  }

 private:
  static std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
  }

  const Json& object_;
  std::string path_;
  std::set<std::string> used_;
  Json out_ = Json::object();
};

}  // namespace qoetrust::detail
