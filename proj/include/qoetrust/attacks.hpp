#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qoetrust/simnet.hpp"
#include "qoetrust/types.hpp"

namespace qoetrust {

enum class AttackKind : std::uint8_t {
  sybil_flood,         // many pseudonyms through normal creation
  badmouth_collusion,  // coalition promoting its own network, demoting rivals
  spoof,               // forged pseudonyms (caught by key verification)
  compromise,          // stolen legitimate keys (not caught by verification)
  evidence_denial,     // destruction of hosted evidence
  ssid_spoof,          // friendly SSID misleading attribution
  whitewash_network,   // build reputation, then betray it
  whitewash_rejoin,    // shed a tainted pseudonym and come back fresh
};

std::string_view to_string(AttackKind kind) noexcept;
std::optional<AttackKind> parse_attack_kind(std::string_view name) noexcept;

/// One entry of the scenario's `attacks` list. `params` always holds the
/// fully materialized (defaults filled) parameter object.
struct AttackSpec {
  AttackKind kind = AttackKind::sybil_flood;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();

  bool operator==(const AttackSpec&) const = default;
};

/// Ids an attack spec may refer to.
struct ReferenceSet {
  std::set<NetworkId> networks;
  std::map<NetworkId, std::string> claimed_names;  // id -> claimed name
  std::set<PseudonymId> honest_peers;
  std::set<PseudonymId> support_peers;
};

/// Validates kind-specific params and fills defaults. Throws ConfigError
/// whose path points below `path` (e.g. "attacks[1].params.target").
AttackSpec normalize_attack(AttackKind kind, const nlohmann::ordered_json& params,
                            const ReferenceSet& refs, const std::string& path);

enum class Direction : std::uint8_t { promote, demote };

struct Coalition {
  std::vector<PseudonymId> members;
  std::vector<std::string> providers;
  NetworkId target;
  Direction direction = Direction::promote;
};

struct WhitewashSchedule {
  double q_build = 0.9;
  double q_betray = 0.1;
  Round switch_round = 0;
};

/// n fresh attacker-controlled pseudonyms with registered keys.
std::vector<Pseudonym> spawn_sybils(World& world, std::size_t n,
                                    const std::string& controller);

/// One recommendation per sybil, all carrying `rating` about `target`.
/// Sybil i reports in contexts[(i + round) % contexts.size()].
std::vector<Recommendation> emit_false_recs(std::span<const Pseudonym> sybils,
                                            const NetworkId& target, double rating,
                                            Round round,
                                            std::span<const AppContext> contexts);

/// A recommendation claiming `victim` but signed with `forged_key`. Throws
/// ValidationError if the key really belongs to the victim (that is a
/// compromise, not a spoof).
Recommendation spoof_as(const PseudonymId& victim, const KeyId& forged_key,
                        const QoEObservation& payload, const KeyRegistry& registry);

/// Marks the victim's key compromised. Idempotent. Throws ValidationError
/// for an unknown victim.
void compromise(World& world, const PseudonymId& victim);

/// Destroys each hosted recommendation independently with probability
/// `fraction`, one uniform draw per record in storage order.
std::uint64_t deny_evidence(PeerState& support_peer, double fraction, Rng& rng);

/// Renames the bad network's beacon. Throws ConfigError unless another
/// network claims `imitated_name`.
void ssid_spoof(World& world, const NetworkId& bad_network,
                const std::string& imitated_name);

double whitewash_schedule(const WhitewashSchedule& schedule, Round round);

/// Retires the attacker's pseudonym and re-enters it under a fresh one with
/// a new key and empty history.
Pseudonym rejoin_fresh(World& world, const PseudonymId& attacker_peer);

/// Builds the strategy for `spec` (spawning its peers) and appends it to the
/// world. `index` is the spec's position in the attacks list.
void install_attack(World& world, const AttackSpec& spec, std::size_t index);

}  // namespace qoetrust
