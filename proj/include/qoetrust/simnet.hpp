#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qoetrust/evidence_store.hpp"
#include "qoetrust/risk.hpp"
#include "qoetrust/rng.hpp"
#include "qoetrust/selection.hpp"
#include "qoetrust/trust_metric.hpp"
#include "qoetrust/types.hpp"

namespace qoetrust {

struct GroundTruthNetwork {
  NetworkIdentity identity;
  double true_quality = 0.0;
  std::string beacon_name;
};

enum class PeerRole : std::uint8_t { honest, attacker, support };

std::string_view to_string(PeerRole role) noexcept;

struct PeerState {
  PeerState(Pseudonym pseudonym, PeerRole role, std::size_t capacity,
            std::uint32_t half_life)
      : pseudonym(std::move(pseudonym)), store(capacity, half_life), role(role) {}

  Pseudonym pseudonym;
  EvidenceStore store;
  FriendMap friends;
  double taste_offset = 0.0;  // fixed for the peer's lifetime
  PeerRole role;
  OutcomeLog outcome_log;
  // Recommendations newly accepted during the previous gossip phase; the
  // candidates for relaying this round.
  std::vector<Recommendation> relay_queue;
};

struct KeyBinding {
  PseudonymId owner;
  bool compromised = false;
};

using KeyRegistry = std::map<KeyId, KeyBinding>;

struct GossipParams {
  std::uint32_t fanout_budget = 1;
  std::uint32_t max_hops = 2;

  bool operator==(const GossipParams&) const = default;
};

/// Relative weights of the session contexts drawn each round.
using ContextMix = std::array<double, 4>;  // indexed by AppContext

struct SimParams {
  MetricParams metric;
  RiskTable risk_table = default_risk_table();
  GossipParams gossip;
  ContextMix context_mix = {1.0, 1.0, 1.0, 1.0};
  double noise_sigma = 0.05;
  double p_mislead = 0.0;
  double lambda = 0.0;
  double prune_min_weight = 1e-3;
};

/// A message in flight during the gossip phase.
struct Envelope {
  Recommendation rec;
  PseudonymId to;
};

struct AttackCounter {
  std::string kind;
  std::uint64_t actions = 0;
};

struct PeerRoundRecord {
  PseudonymId peer;
  AppContext context = AppContext::browsing;
  std::optional<NetworkId> selected;    // authentic network used
  std::optional<NetworkId> attributed;  // network the observation was filed under
  std::optional<double> qoe;
  std::optional<double> expected;
};

struct NetworkSnapshot {
  NetworkId id;
  std::string beacon;
  double true_quality = 0.0;
};

struct RoundReport {
  Round round = 0;
  std::vector<PeerRoundRecord> peers;  // honest peers, id order
  std::vector<NetworkSnapshot> networks;
  std::uint64_t messages_sent = 0;
  std::uint64_t accepted = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t rejected_spoof = 0;
  std::uint64_t hosted = 0;
  std::uint64_t served = 0;
  std::uint64_t destroyed = 0;
  std::uint64_t misattributed = 0;
  std::vector<AttackCounter> attacks;
  double best_network_fraction = 0.0;
  double attacker_selection_fraction = 0.0;
  double misprediction_rate = 0.0;
  double evidence_availability = 1.0;

  nlohmann::ordered_json to_json() const;
};

class World;

/// An adversary plugged into the round loop. Hooks run in config order.
class AttackStrategy {
 public:
  virtual ~AttackStrategy() = default;

  virtual std::string_view kind() const = 0;
  /// Networks this adversary wants honest peers to pick.
  virtual std::vector<NetworkId> promoted_networks() const { return {}; }

  virtual void before_round(World&, AttackCounter&) {}
  virtual void emit(World&, std::vector<Envelope>&, AttackCounter&) {}
  /// Returns the number of hosted records destroyed.
  virtual std::uint64_t before_sync(World&, AttackCounter&) { return 0; }
  virtual void after_round(const World&, const RoundReport&, AttackCounter&) {}
};

/// Simulator state. Peers are keyed (and therefore iterated) by pseudonym id.
class World {
 public:
  World(SimParams params, std::uint64_t seed) : params(std::move(params)), rng(seed) {}

  World(World&&) = default;
  World& operator=(World&&) = default;

  SimParams params;
  std::map<PseudonymId, PeerState> peers;
  std::vector<GroundTruthNetwork> networks;
  KeyRegistry key_registry;
  std::map<PseudonymId, std::vector<PseudonymId>> topology;
  std::vector<std::unique_ptr<AttackStrategy>> attacks;
  std::set<PseudonymId> retired;
  Round round = 0;
  Rng rng;
  std::uint64_t pseudonym_serial = 0;

  // Dedup keys of every message put on the wire; filled only when tracing.
  bool trace_emissions = false;
  std::set<std::string> emitted;

  /// Creates a peer with key "key:<id>" registered to it. Throws
  /// ValidationError if the id is already in use.
  PeerState& add_peer(const PseudonymId& id, PeerRole role,
                      std::size_t capacity);

  PeerState* find_peer(const PseudonymId& id);
  const PeerState* find_peer(const PseudonymId& id) const;
  GroundTruthNetwork* find_network(const NetworkId& id);
  const GroundTruthNetwork* find_network(const NetworkId& id) const;

  std::vector<PseudonymId> ids_with_role(PeerRole role) const;
  std::set<NetworkId> attacker_networks() const;
};

/// Identity of a recommendation for dedup and tracing purposes.
std::string message_key(const Recommendation& rec);

/// clamp(true_quality + taste_offset + noise, 0, 1). Draws one standard
/// normal (two raw draws) iff noise_sigma > 0.
double sample_qoe(double true_quality, double taste_offset, double noise_sigma,
                  Rng& rng);

/// Network an observer files a session under. When the beacon of the used
/// network imitates another network's claimed name, the imitated network is
/// returned with probability p_mislead. One uniform draw is consumed only
/// when an imitation target exists and 0 < p_mislead < 1.
NetworkId attribute_network(const std::string& beacon_name,
                            const NetworkId& used,
                            std::span<const GroundTruthNetwork> visible,
                            double p_mislead, Rng& rng);

/// Verified iff the claimed key is registered to the claimed recommender.
/// Compromised keys still verify.
VerificationVerdict verify_message(const Recommendation& rec,
                                   const KeyRegistry& registry);

/// Messages a peer puts on the wire this round: its latest own observations
/// (hop 0) and relays of last round's arrivals that pass `relay_ok`
/// (hop + 1, never beyond max_hops), each capped at fanout_budget and copied
/// to every neighbor.
std::vector<Envelope> gossip(
    const PeerState& peer, std::span<const PseudonymId> neighbor_ids,
    const GossipParams& params,
    const std::function<bool(const Recommendation&)>& relay_ok);

/// Hosted recommendations about (network, context). Throws ValidationError
/// if `support` is not a support peer.
std::vector<Recommendation> support_peer_serve(const PeerState& support,
                                               const NetworkId& network,
                                               AppContext context);

/// Recommender trust for every recommender in the peer's accuracy history.
std::map<PseudonymId, TrustAssessment> recommender_trusts(
    const EvidenceStore& store, Round now, const MetricParams& params);

struct NetworkAssessment {
  TrustAssessment direct;
  TrustAssessment reputation;
  double combined = 0.5;
};

/// Trust a peer places in a network. Network QoE evidence is pooled over all
/// application contexts; the context only matters to the risk decision.
NetworkAssessment assess_network(
    const PeerState& peer, const NetworkId& network, Round now, const MetricParams& params,
    const std::map<PseudonymId, TrustAssessment>& rec_trusts);

/// assess_network for several networks at once, in one pass over the store.
/// Results are bitwise identical to calling assess_network per network.
std::vector<NetworkAssessment> assess_networks(
    const PeerState& peer, std::span<const NetworkId> networks, Round now,
    const MetricParams& params, const std::map<PseudonymId, TrustAssessment>& rec_trusts);

/// One synchronous round: honest peers (id order) pick, use and rate a
/// network; then gossip, support-peer sync and pruning. Random draws happen
/// in a fixed order: per honest peer context, QoE noise, attribution; then
/// evidence denial.
RoundReport step_round(World& world);

}  // namespace qoetrust
