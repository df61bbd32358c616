#include "qoetrust/types.hpp"

#include <cmath>

#include "qoetrust/errors.hpp"

namespace qoetrust {

namespace {

constexpr std::array<std::string_view, 7> kWireFields = {
    "recommender_id", "claimed_key", "network_id", "context",
    "rating",         "round",       "hop_count"};

}  // namespace

std::string_view to_string(AppContext context) noexcept {
  switch (context) {
    case AppContext::browsing:
      return "browsing";
    case AppContext::gaming:
      return "gaming";
    case AppContext::streaming:
      return "streaming";
    case AppContext::banking:
      return "banking";
  }
  return "browsing";
}

std::optional<AppContext> parse_context(std::string_view name) noexcept {
  for (AppContext context : kAllContexts) {
    if (to_string(context) == name) return context;
  }
  return std::nullopt;
}

void validate_rating(double rating) {
  if (!(rating >= 0.0 && rating <= 1.0)) {
    throw ValidationError("rating " + std::to_string(rating) +
                          " outside [0,1]");
  }
}

nlohmann::ordered_json to_wire(const Recommendation& rec) {
  nlohmann::ordered_json wire;
  wire["recommender_id"] = rec.recommender;
  wire["claimed_key"] = rec.claimed_key;
  wire["network_id"] = rec.payload.network;
  wire["context"] = std::string(to_string(rec.payload.context));
  wire["rating"] = rec.payload.rating;
  wire["round"] = rec.payload.round;
  wire["hop_count"] = rec.hop_count;
  return wire;
}

Recommendation from_wire(const nlohmann::ordered_json& wire) {
  if (!wire.is_object() || wire.size() != kWireFields.size()) {
    throw ValidationError("wire record must have exactly 7 fields");
  }
  for (std::string_view field : kWireFields) {
    if (!wire.contains(std::string(field))) {
      throw ValidationError("wire record missing " + std::string(field));
    }
  }
  auto context = parse_context(wire.at("context").get<std::string>());
  if (!context) throw ValidationError("wire record has unknown context");

  Recommendation rec;
  rec.recommender = wire.at("recommender_id").get<std::string>();
  rec.claimed_key = wire.at("claimed_key").get<std::string>();
  rec.payload.observer = rec.recommender;
  rec.payload.network = wire.at("network_id").get<std::string>();
  rec.payload.context = *context;
  rec.payload.rating = wire.at("rating").get<double>();
  rec.payload.round = wire.at("round").get<Round>();
  rec.hop_count = wire.at("hop_count").get<std::uint32_t>();
  validate_rating(rec.payload.rating);
  return rec;
}

}  // namespace qoetrust
