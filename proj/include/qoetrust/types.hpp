#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace qoetrust {

using Round = std::uint32_t;
using PseudonymId = std::string;
using NetworkId = std::string;
using KeyId = std::string;

struct Pseudonym {
  PseudonymId id;
  KeyId key_id;

  bool operator==(const Pseudonym&) const = default;
};

struct NetworkIdentity {
  NetworkId authentic_id;
  std::string claimed_name;  // not unique: SSIDs can be imitated
  std::string provider_id;
  double cost = 0.0;         // normalized price in [0,1]

  bool operator==(const NetworkIdentity&) const = default;
};

enum class AppContext : std::uint8_t { browsing, gaming, streaming, banking };

inline constexpr std::array<AppContext, 4> kAllContexts = {
    AppContext::browsing, AppContext::gaming, AppContext::streaming,
    AppContext::banking};

std::string_view to_string(AppContext context) noexcept;
std::optional<AppContext> parse_context(std::string_view name) noexcept;

struct QoEObservation {
  PseudonymId observer;
  NetworkId network;  // as attributed by the observer, possibly wrong
  AppContext context = AppContext::browsing;
  double rating = 0.0;
  Round round = 0;

  bool operator==(const QoEObservation&) const = default;
};

/// Shared observation on the simulated wire. Carries pseudonym ids only.
struct Recommendation {
  QoEObservation payload;
  PseudonymId recommender;
  KeyId claimed_key;
  std::uint32_t hop_count = 0;

  bool operator==(const Recommendation&) const = default;
};

enum class VerificationVerdict : std::uint8_t { Verified, SpoofRejected };

/// Throws ValidationError unless 0 <= rating <= 1 (NaN rejected).
void validate_rating(double rating);

/// Flat wire record with fields in the order
/// recommender_id, claimed_key, network_id, context, rating, round, hop_count.
nlohmann::ordered_json to_wire(const Recommendation& rec);

/// Inverse of to_wire. The observer is the recommender on the wire.
/// Throws ValidationError on missing or extra fields.
Recommendation from_wire(const nlohmann::ordered_json& wire);

}  // namespace qoetrust
