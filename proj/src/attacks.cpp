#include "qoetrust/attacks.hpp"

#include <algorithm>
#include <cstdio>

#include "qoetrust/errors.hpp"
#include "object_reader.hpp"

namespace qoetrust {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::array<std::string_view, 8> kKindNames = {
    "sybil_flood", "badmouth_collusion", "spoof",      "compromise",
    "evidence_denial", "ssid_spoof",     "whitewash_network", "whitewash_rejoin"};

std::vector<AppContext> active_contexts(const World& world) {
  std::vector<AppContext> out;
  for (std::size_t i = 0; i < kAllContexts.size(); ++i) {
    if (world.params.context_mix[i] > 0.0) out.push_back(kAllContexts[i]);
  }
  if (out.empty()) out.assign(kAllContexts.begin(), kAllContexts.end());
  return out;
}

std::vector<PseudonymId> recipients(const World& world) {
  std::vector<PseudonymId> out;
  for (const auto& [id, peer] : world.peers) {
    if (peer.role != PeerRole::attacker) out.push_back(id);
  }
  return out;
}

void broadcast(const World& world, std::vector<Recommendation> recs,
               std::vector<Envelope>& wire, AttackCounter& counter,
               const std::optional<PseudonymId>& skip = std::nullopt) {
  const auto to = recipients(world);
  for (const auto& rec : recs) {
    for (const auto& id : to) {
      if (skip && id == *skip) continue;
      wire.push_back(Envelope{rec, id});
      ++counter.actions;
    }
  }
}

std::vector<NetworkId> promoted_if(const NetworkId& target, double rating) {
  if (rating >= 0.5) return {target};
  return {};
}

std::string controller_name(std::size_t index) {
  return "atk" + std::to_string(index);
}

class SybilFlood final : public AttackStrategy {
 public:
  SybilFlood(World& world, const Json& params, std::size_t index)
      : target_(params.at("target").get<std::string>()),
        rating_(params.at("rating").get<double>()),
        start_(params.at("start_round").get<Round>()) {
    sybils_ = spawn_sybils(world, params.at("count").get<std::size_t>(),
                           controller_name(index));
  }

  std::string_view kind() const override { return "sybil_flood"; }
  std::vector<NetworkId> promoted_networks() const override {
    return promoted_if(target_, rating_);
  }

  void emit(World& world, std::vector<Envelope>& wire, AttackCounter& counter) override {
    if (world.round < start_) return;
    const auto contexts = active_contexts(world);
    broadcast(world, emit_false_recs(sybils_, target_, rating_, world.round, contexts),
              wire, counter);
  }

 private:
  NetworkId target_;
  double rating_;
  Round start_;
  std::vector<Pseudonym> sybils_;
};

class BadmouthCollusion final : public AttackStrategy {
 public:
  BadmouthCollusion(World& world, const Json& params, std::size_t index)
      : start_(params.at("start_round").get<Round>()) {
    const auto sybils = spawn_sybils(world, params.at("count").get<std::size_t>(),
                                     controller_name(index));
    members_ = sybils;
    if (!params.at("promote").is_null()) {
      promote_ = params.at("promote").get<std::string>();
      targets_.push_back(Coalition{{}, {}, *promote_, Direction::promote});
    }
    for (const auto& id : params.at("demote")) {
      targets_.push_back(Coalition{{}, {}, id.get<std::string>(), Direction::demote});
    }
    const auto provider = params.at("provider").get<std::string>();
    for (auto& coalition : targets_) {
      for (const auto& sybil : sybils) coalition.members.push_back(sybil.id);
      coalition.providers.push_back(provider);
    }
  }

  std::string_view kind() const override { return "badmouth_collusion"; }
  std::vector<NetworkId> promoted_networks() const override {
    if (promote_) return {*promote_};
    return {};
  }

  void emit(World& world, std::vector<Envelope>& wire, AttackCounter& counter) override {
    if (world.round < start_ || targets_.empty()) return;
    const auto contexts = active_contexts(world);
    std::vector<Recommendation> recs;
    for (std::size_t i = 0; i < members_.size(); ++i) {
      const auto& objective = targets_[(i + world.round) % targets_.size()];
      const double rating = objective.direction == Direction::promote ? 1.0 : 0.0;
      const auto& member = members_[i];
      recs.push_back(Recommendation{
          QoEObservation{member.id, objective.target,
                         contexts[(i + world.round) % contexts.size()], rating, world.round},
          member.id, member.key_id, 0});
    }
    broadcast(world, std::move(recs), wire, counter);
  }

 private:
  Round start_;
  std::optional<NetworkId> promote_;
  std::vector<Pseudonym> members_;
  std::vector<Coalition> targets_;
};

class Spoof final : public AttackStrategy {
 public:
  Spoof(const Json& params, std::size_t index)
      : count_(params.at("count").get<std::size_t>()),
        target_(params.at("target").get<std::string>()),
        rating_(params.at("rating").get<double>()),
        start_(params.at("start_round").get<Round>()),
        victims_(params.at("victims").get<std::vector<std::string>>()),
        tag_(controller_name(index)) {}

  std::string_view kind() const override { return "spoof"; }
  std::vector<NetworkId> promoted_networks() const override {
    return promoted_if(target_, rating_);
  }

  void emit(World& world, std::vector<Envelope>& wire, AttackCounter& counter) override {
    if (world.round < start_) return;
    const auto honest = world.ids_with_role(PeerRole::honest);
    const auto victims = victims_.empty() ? honest : victims_;
    if (honest.empty() || victims.empty()) return;
    const auto contexts = active_contexts(world);
    for (std::size_t i = 0; i < count_; ++i) {
      const auto& victim = victims[i % victims.size()];
      const KeyId forged = "forged:" + tag_ + ":" + std::to_string(world.round) + ":" +
                           std::to_string(i);
      QoEObservation payload{victim, target_, contexts[(i + world.round) % contexts.size()],
                             rating_, world.round};
      wire.push_back(Envelope{spoof_as(victim, forged, payload, world.key_registry),
                              honest[i % honest.size()]});
      ++counter.actions;
    }
  }

 private:
  std::size_t count_;
  NetworkId target_;
  double rating_;
  Round start_;
  std::vector<PseudonymId> victims_;
  std::string tag_;
};

class Compromise final : public AttackStrategy {
 public:
  explicit Compromise(const Json& params)
      : victim_(params.at("victim").get<std::string>()),
        target_(params.at("target").get<std::string>()),
        rating_(params.at("rating").get<double>()),
        at_(params.at("at_round").get<Round>()) {}

  std::string_view kind() const override { return "compromise"; }
  std::vector<NetworkId> promoted_networks() const override {
    return promoted_if(target_, rating_);
  }

  void before_round(World& world, AttackCounter& counter) override {
    if (world.round == at_ || (!done_ && world.round > at_)) {
      compromise(world, victim_);
      done_ = true;
      ++counter.actions;
    }
  }

  void emit(World& world, std::vector<Envelope>& wire, AttackCounter& counter) override {
    if (!done_) return;
    const PeerState* victim = world.find_peer(victim_);
    if (victim == nullptr) return;
    const auto contexts = active_contexts(world);
    Recommendation rec{QoEObservation{victim_, target_,
                                      contexts[world.round % contexts.size()], rating_,
                                      world.round},
                       victim_, victim->pseudonym.key_id, 0};
    broadcast(world, {rec}, wire, counter, victim_);
  }

 private:
  PseudonymId victim_;
  NetworkId target_;
  double rating_;
  Round at_;
  bool done_ = false;
};

class EvidenceDenial final : public AttackStrategy {
 public:
  explicit EvidenceDenial(const Json& params)
      : fraction_(params.at("fraction").get<double>()),
        start_(params.at("start_round").get<Round>()),
        supports_(params.at("supports").get<std::vector<std::string>>()) {}

  std::string_view kind() const override { return "evidence_denial"; }

  std::uint64_t before_sync(World& world, AttackCounter& counter) override {
    if (world.round < start_) return 0;
    const auto targets =
        supports_.empty() ? world.ids_with_role(PeerRole::support) : supports_;
    std::uint64_t destroyed = 0;
    for (const auto& id : targets) {
      PeerState* support = world.find_peer(id);
      if (support == nullptr) continue;
      destroyed += deny_evidence(*support, fraction_, world.rng);
    }
    counter.actions += destroyed;
    return destroyed;
  }

 private:
  double fraction_;
  Round start_;
  std::vector<PseudonymId> supports_;
};

class SsidSpoof final : public AttackStrategy {
 public:
  explicit SsidSpoof(const Json& params)
      : bad_(params.at("bad_network").get<std::string>()),
        imitated_(params.at("imitated_name").get<std::string>()),
        at_(params.at("at_round").get<Round>()) {}

  std::string_view kind() const override { return "ssid_spoof"; }
  std::vector<NetworkId> promoted_networks() const override { return {bad_}; }

  void before_round(World& world, AttackCounter& counter) override {
    if (world.round == at_ || (!renamed_ && world.round > at_)) {
      ssid_spoof(world, bad_, imitated_);
      renamed_ = true;
      ++counter.actions;
    }
  }

  void after_round(const World&, const RoundReport& report, AttackCounter& counter) override {
    for (const auto& record : report.peers) {
      if (record.selected && *record.selected == bad_ && record.attributed != record.selected) {
        ++counter.actions;
      }
    }
  }

 private:
  NetworkId bad_;
  std::string imitated_;
  Round at_;
  bool renamed_ = false;
};

class WhitewashNetwork final : public AttackStrategy {
 public:
  explicit WhitewashNetwork(const Json& params)
      : network_(params.at("network").get<std::string>()),
        schedule_{params.at("q_build").get<double>(), params.at("q_betray").get<double>(),
                  params.at("switch_round").get<Round>()} {}

  std::string_view kind() const override { return "whitewash_network"; }
  std::vector<NetworkId> promoted_networks() const override { return {network_}; }

  void before_round(World& world, AttackCounter& counter) override {
    if (auto* net = world.find_network(network_)) {
      net->true_quality = whitewash_schedule(schedule_, world.round);
      ++counter.actions;
    }
  }

 private:
  NetworkId network_;
  WhitewashSchedule schedule_;
};

class WhitewashRejoin final : public AttackStrategy {
 public:
  WhitewashRejoin(World& world, const Json& params, std::size_t index)
      : target_(params.at("target").get<std::string>()),
        rating_(params.at("rating").get<double>()),
        period_(params.at("period").get<Round>()),
        start_(params.at("start_round").get<Round>()) {
    members_ = spawn_sybils(world, params.at("count").get<std::size_t>(),
                            controller_name(index));
  }

  std::string_view kind() const override { return "whitewash_rejoin"; }
  std::vector<NetworkId> promoted_networks() const override {
    return promoted_if(target_, rating_);
  }

  void before_round(World& world, AttackCounter& counter) override {
    if (world.round <= start_ || (world.round - start_) % period_ != 0) return;
    for (auto& member : members_) {
      member = rejoin_fresh(world, member.id);
      ++counter.actions;
    }
  }

  void emit(World& world, std::vector<Envelope>& wire, AttackCounter& counter) override {
    if (world.round < start_) return;
    const auto contexts = active_contexts(world);
    broadcast(world, emit_false_recs(members_, target_, rating_, world.round, contexts),
              wire, counter);
  }

 private:
  NetworkId target_;
  double rating_;
  Round period_;
  Round start_;
  std::vector<Pseudonym> members_;
};

}  // namespace

std::string_view to_string(AttackKind kind) noexcept {
  return kKindNames[static_cast<std::size_t>(kind)];
}

std::optional<AttackKind> parse_attack_kind(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<AttackKind>(i);
  }
  return std::nullopt;
}

AttackSpec normalize_attack(AttackKind kind, const nlohmann::ordered_json& params,
                            const ReferenceSet& refs, const std::string& path) {
  detail::ObjectReader in(params, path);
  switch (kind) {
    case AttackKind::sybil_flood:
      in.integer("count", std::nullopt);
      in.reference("target", refs.networks, "network");
      in.number("rating", 1.0, 0.0, 1.0);
      in.integer("start_round", 0);
      break;
    case AttackKind::badmouth_collusion: {
      in.integer("count", std::nullopt);
      const auto promote = in.optional_reference("promote", refs.networks, "network");
      const auto demote = in.reference_list("demote", refs.networks, "network");
      if (demote.empty() && !promote) {
        throw ConfigError("coalition needs a promote or demote target", in.at("demote"));
      }
      in.string_or("provider", promote ? "provider-of:" + *promote : "coalition");
      in.integer("start_round", 0);
      break;
    }
    case AttackKind::spoof:
      in.integer("count", std::nullopt);
      in.reference("target", refs.networks, "network");
      in.number("rating", 1.0, 0.0, 1.0);
      in.reference_list("victims", refs.honest_peers, "peer");
      in.integer("start_round", 0);
      break;
    case AttackKind::compromise:
      in.reference("victim", refs.honest_peers, "peer");
      in.reference("target", refs.networks, "network");
      in.number("rating", 1.0, 0.0, 1.0);
      in.integer("at_round", 0);
      break;
    case AttackKind::evidence_denial:
      in.number("fraction", std::nullopt, 0.0, 1.0);
      in.reference_list("supports", refs.support_peers, "support peer");
      in.integer("start_round", 0);
      if (refs.support_peers.empty()) {
        throw ConfigError("evidence_denial requires at least one support peer", path);
      }
      break;
    case AttackKind::ssid_spoof: {
      const auto bad = in.reference("bad_network", refs.networks, "network");
      const auto name = in.string("imitated_name");
      const bool imitates_other = std::any_of(
          refs.claimed_names.begin(), refs.claimed_names.end(),
          [&](const auto& entry) { return entry.first != bad && entry.second == name; });
      if (!imitates_other) {
        throw ConfigError("imitated_name '" + name + "' matches no other network",
                          in.at("imitated_name"));
      }
      in.integer("at_round", 0);
      break;
    }
    case AttackKind::whitewash_network:
      in.reference("network", refs.networks, "network");
      in.number("q_build", std::nullopt, 0.0, 1.0);
      in.number("q_betray", std::nullopt, 0.0, 1.0);
      in.integer("switch_round", std::nullopt);
      break;
    case AttackKind::whitewash_rejoin:
      in.integer("count", std::nullopt);
      in.reference("target", refs.networks, "network");
      in.number("rating", 1.0, 0.0, 1.0);
      in.integer("period", std::nullopt, 1);
      in.integer("start_round", 0);
      break;
  }
  return AttackSpec{kind, in.finish()};
}

std::vector<Pseudonym> spawn_sybils(World& world, std::size_t n,
                                    const std::string& controller) {
  std::vector<Pseudonym> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    char serial[16];
    std::snprintf(serial, sizeof serial, "%06llu",
                  static_cast<unsigned long long>(world.pseudonym_serial++));
    auto& peer = world.add_peer("syb-" + controller + "-" + serial, PeerRole::attacker, 1);
    out.push_back(peer.pseudonym);
  }
  return out;
}

std::vector<Recommendation> emit_false_recs(std::span<const Pseudonym> sybils,
                                            const NetworkId& target, double rating,
                                            Round round,
                                            std::span<const AppContext> contexts) {
  validate_rating(rating);
  std::vector<Recommendation> out;
  out.reserve(sybils.size());
  for (std::size_t i = 0; i < sybils.size(); ++i) {
    const AppContext context =
        contexts.empty() ? AppContext::browsing : contexts[(i + round) % contexts.size()];
    out.push_back(Recommendation{
        QoEObservation{sybils[i].id, target, context, rating, round}, sybils[i].id,
        sybils[i].key_id, 0});
  }
  return out;
}

Recommendation spoof_as(const PseudonymId& victim, const KeyId& forged_key,
                        const QoEObservation& payload, const KeyRegistry& registry) {
  const auto it = registry.find(forged_key);
  if (it != registry.end() && it->second.owner == victim) {
    throw ValidationError("key " + forged_key + " belongs to " + victim +
                          "; use compromise instead");
  }
  QoEObservation forged = payload;
  forged.observer = victim;
  return Recommendation{forged, victim, forged_key, 0};
}

void compromise(World& world, const PseudonymId& victim) {
  const PeerState* peer = world.find_peer(victim);
  if (peer == nullptr) throw ValidationError("unknown victim " + victim);
  world.key_registry.at(peer->pseudonym.key_id).compromised = true;
}

std::uint64_t deny_evidence(PeerState& support_peer, double fraction, Rng& rng) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw ValidationError("denial fraction outside [0,1]");
  }
  if (fraction == 0.0) return 0;
  if (fraction == 1.0) {
    return support_peer.store.erase_received_if([](const Recommendation&) { return true; });
  }
  return support_peer.store.erase_received_if(
      [&](const Recommendation&) { return rng.bernoulli(fraction); });
}

void ssid_spoof(World& world, const NetworkId& bad_network,
                const std::string& imitated_name) {
  GroundTruthNetwork* bad = world.find_network(bad_network);
  if (bad == nullptr) throw ConfigError("unknown network " + bad_network);
  const bool matches = std::any_of(
      world.networks.begin(), world.networks.end(), [&](const GroundTruthNetwork& net) {
        return net.identity.authentic_id != bad_network &&
               net.identity.claimed_name == imitated_name;
      });
  if (!matches) {
    throw ConfigError("imitated name '" + imitated_name + "' matches no other network");
  }
  bad->beacon_name = imitated_name;
}

double whitewash_schedule(const WhitewashSchedule& schedule, Round round) {
  return round < schedule.switch_round ? schedule.q_build : schedule.q_betray;
}

Pseudonym rejoin_fresh(World& world, const PseudonymId& attacker_peer) {
  auto node = world.peers.extract(attacker_peer);
  if (node.empty()) throw ValidationError("unknown peer " + attacker_peer);
  if (node.mapped().role != PeerRole::attacker) {
    world.peers.insert(std::move(node));
    throw ValidationError(attacker_peer + " is not attacker-controlled");
  }
  world.retired.insert(attacker_peer);

  const auto cut = attacker_peer.rfind('-');
  char serial[16];
  std::snprintf(serial, sizeof serial, "%06llu",
                static_cast<unsigned long long>(world.pseudonym_serial++));
  const PseudonymId fresh = attacker_peer.substr(0, cut) + "-" + serial;
  const std::size_t capacity = node.mapped().store.capacity();
  auto& peer = world.add_peer(fresh, PeerRole::attacker, capacity);
  peer.taste_offset = node.mapped().taste_offset;
  return peer.pseudonym;
}

void install_attack(World& world, const AttackSpec& spec, std::size_t index) {
  const auto& p = spec.params;
  std::unique_ptr<AttackStrategy> strategy;
  switch (spec.kind) {
    case AttackKind::sybil_flood:
      strategy = std::make_unique<SybilFlood>(world, p, index);
      break;
    case AttackKind::badmouth_collusion:
      strategy = std::make_unique<BadmouthCollusion>(world, p, index);
      break;
    case AttackKind::spoof:
      strategy = std::make_unique<Spoof>(p, index);
      break;
    case AttackKind::compromise:
      strategy = std::make_unique<Compromise>(p);
      break;
    case AttackKind::evidence_denial:
      strategy = std::make_unique<EvidenceDenial>(p);
      break;
    case AttackKind::ssid_spoof:
      strategy = std::make_unique<SsidSpoof>(p);
      break;
    case AttackKind::whitewash_network:
      strategy = std::make_unique<WhitewashNetwork>(p);
      break;
    case AttackKind::whitewash_rejoin:
      strategy = std::make_unique<WhitewashRejoin>(world, p, index);
      break;
  }
  world.attacks.push_back(std::move(strategy));
}

}  // namespace qoetrust
