#include "qoetrust/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string_view>
#include <unordered_map>

#include "qoetrust/errors.hpp"

namespace qoetrust {

namespace {

template <typename T>
nlohmann::ordered_json optional_json(const std::optional<T>& value) {
  return value ? nlohmann::ordered_json(*value) : nlohmann::ordered_json(nullptr);
}

AppContext draw_context(const ContextMix& mix, Rng& rng) {
  std::size_t nonzero = 0;
  double total = 0.0;
  for (double w : mix) {
    if (w > 0.0) ++nonzero;
    total += w;
  }
  if (nonzero == 1) {
    for (std::size_t i = 0; i < mix.size(); ++i) {
      if (mix[i] > 0.0) return kAllContexts[i];
    }
  }
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    if (mix[i] <= 0.0) continue;
    if (u < mix[i]) return kAllContexts[i];
    u -= mix[i];
  }
  for (std::size_t i = mix.size(); i-- > 0;) {
    if (mix[i] > 0.0) return kAllContexts[i];
  }
  return AppContext::browsing;
}

const GroundTruthNetwork* best_network(const std::vector<GroundTruthNetwork>& networks) {
  const GroundTruthNetwork* best = nullptr;
  for (const auto& net : networks) {
    if (best == nullptr || net.true_quality > best->true_quality ||
        (net.true_quality == best->true_quality &&
         net.identity.authentic_id < best->identity.authentic_id)) {
      best = &net;
    }
  }
  return best;
}

bool relay_allowed(const PeerState& peer,
                   const std::map<PseudonymId, TrustAssessment>& rec_trusts,
                   const MetricParams& params, const Recommendation& rec) {
  if (peer.friends.contains(rec.recommender)) return true;
  const auto it = rec_trusts.find(rec.recommender);
  if (it == rec_trusts.end()) return false;
  return it->second.value > 0.0 &&
         it->second.confidence >= params.confidence_floor;
}

}  // namespace

std::string_view to_string(PeerRole role) noexcept {
  switch (role) {
    case PeerRole::honest:
      return "honest";
    case PeerRole::attacker:
      return "attacker";
    case PeerRole::support:
      return "support";
  }
  return "honest";
}

nlohmann::ordered_json RoundReport::to_json() const {
  nlohmann::ordered_json out;
  out["round"] = round;

  auto selections = nlohmann::ordered_json::array();
  auto attributed = nlohmann::ordered_json::array();
  auto contexts = nlohmann::ordered_json::array();
  auto qoes = nlohmann::ordered_json::array();
  auto expected = nlohmann::ordered_json::array();
  for (const auto& record : peers) {
    selections.push_back(optional_json(record.selected));
    attributed.push_back(optional_json(record.attributed));
    contexts.push_back(std::string(qoetrust::to_string(record.context)));
    qoes.push_back(optional_json(record.qoe));
    expected.push_back(optional_json(record.expected));
  }
  out["selections"] = std::move(selections);
  out["attributed"] = std::move(attributed);
  out["contexts"] = std::move(contexts);
  out["qoe"] = std::move(qoes);
  out["expected"] = std::move(expected);

  auto nets = nlohmann::ordered_json::array();
  for (const auto& net : networks) {
    nlohmann::ordered_json entry;
    entry["id"] = net.id;
    entry["beacon"] = net.beacon;
    entry["true_quality"] = net.true_quality;
    nets.push_back(std::move(entry));
  }
  out["networks"] = std::move(nets);

  nlohmann::ordered_json messages;
  messages["sent"] = messages_sent;
  messages["accepted"] = accepted;
  messages["duplicates"] = duplicates;
  messages["rejected_spoof"] = rejected_spoof;
  out["messages"] = std::move(messages);

  nlohmann::ordered_json support;
  support["hosted"] = hosted;
  support["served"] = served;
  support["destroyed"] = destroyed;
  out["support"] = std::move(support);

  out["misattributed"] = misattributed;

  auto attack_list = nlohmann::ordered_json::array();
  for (const auto& counter : attacks) {
    nlohmann::ordered_json entry;
    entry["kind"] = counter.kind;
    entry["actions"] = counter.actions;
    attack_list.push_back(std::move(entry));
  }
  out["attacks"] = std::move(attack_list);

  out["best_network_fraction"] = best_network_fraction;
  out["attacker_selection_fraction"] = attacker_selection_fraction;
  out["misprediction_rate"] = misprediction_rate;
  out["evidence_availability"] = evidence_availability;
  return out;
}

PeerState& World::add_peer(const PseudonymId& id, PeerRole role,
                           std::size_t capacity) {
  if (peers.contains(id) || retired.contains(id)) {
    throw ValidationError("pseudonym id already in use: " + id);
  }
  const KeyId key = "key:" + id;
  if (key_registry.contains(key)) {
    throw ValidationError("key already registered: " + key);
  }
  key_registry.emplace(key, KeyBinding{id, false});
  auto [it, inserted] = peers.emplace(
      std::piecewise_construct, std::forward_as_tuple(id),
      std::forward_as_tuple(Pseudonym{id, key}, role, capacity,
                            params.metric.half_life));
  return it->second;
}

PeerState* World::find_peer(const PseudonymId& id) {
  const auto it = peers.find(id);
  return it == peers.end() ? nullptr : &it->second;
}

const PeerState* World::find_peer(const PseudonymId& id) const {
  const auto it = peers.find(id);
  return it == peers.end() ? nullptr : &it->second;
}

GroundTruthNetwork* World::find_network(const NetworkId& id) {
  for (auto& net : networks) {
    if (net.identity.authentic_id == id) return &net;
  }
  return nullptr;
}

const GroundTruthNetwork* World::find_network(const NetworkId& id) const {
  for (const auto& net : networks) {
    if (net.identity.authentic_id == id) return &net;
  }
  return nullptr;
}

std::vector<PseudonymId> World::ids_with_role(PeerRole role) const {
  std::vector<PseudonymId> ids;
  for (const auto& [id, peer] : peers) {
    if (peer.role == role) ids.push_back(id);
  }
  return ids;
}

std::set<NetworkId> World::attacker_networks() const {
  std::set<NetworkId> out;
  for (const auto& attack : attacks) {
    for (auto& id : attack->promoted_networks()) out.insert(std::move(id));
  }
  return out;
}

std::string message_key(const Recommendation& rec) {
  std::string key = rec.recommender;
  key += '|';
  key += rec.payload.network;
  key += '|';
  key += to_string(rec.payload.context);
  key += '|';
  key += std::to_string(rec.payload.round);
  return key;
}

double sample_qoe(double true_quality, double taste_offset, double noise_sigma,
                  Rng& rng) {
  const double noise = noise_sigma > 0.0 ? noise_sigma * rng.normal() : 0.0;
  return std::clamp(true_quality + taste_offset + noise, 0.0, 1.0);
}

NetworkId attribute_network(const std::string& beacon_name,
                            const NetworkId& used,
                            std::span<const GroundTruthNetwork> visible,
                            double p_mislead, Rng& rng) {
  const GroundTruthNetwork* imitated = nullptr;
  for (const auto& net : visible) {
    if (net.identity.authentic_id != used &&
        net.identity.claimed_name == beacon_name) {
      imitated = &net;
      break;
    }
  }
  if (imitated == nullptr || p_mislead <= 0.0) return used;
  if (p_mislead >= 1.0 || rng.bernoulli(p_mislead)) {
    return imitated->identity.authentic_id;
  }
  return used;
}

VerificationVerdict verify_message(const Recommendation& rec,
                                   const KeyRegistry& registry) {
  const auto it = registry.find(rec.claimed_key);
  if (it != registry.end() && it->second.owner == rec.recommender) {
    return VerificationVerdict::Verified;
  }
  return VerificationVerdict::SpoofRejected;
}

std::vector<Envelope> gossip(
    const PeerState& peer, std::span<const PseudonymId> neighbor_ids,
    const GossipParams& params,
    const std::function<bool(const Recommendation&)>& relay_ok) {
  std::vector<Recommendation> outgoing;
  if (params.fanout_budget == 0) return {};

  const auto& observations = peer.store.observations();
  std::vector<Recommendation> own;
  for (auto it = observations.rbegin();
       it != observations.rend() && own.size() < params.fanout_budget; ++it) {
    own.push_back(Recommendation{it->second, peer.pseudonym.id,
                                 peer.pseudonym.key_id, 0});
  }
  outgoing.insert(outgoing.end(), own.rbegin(), own.rend());

  std::vector<Recommendation> relays;
  for (auto it = peer.relay_queue.rbegin();
       it != peer.relay_queue.rend() && relays.size() < params.fanout_budget; ++it) {
    if (it->hop_count >= params.max_hops) continue;
    if (relay_ok && !relay_ok(*it)) continue;
    Recommendation relayed = *it;
    ++relayed.hop_count;
    relays.push_back(std::move(relayed));
  }
  outgoing.insert(outgoing.end(), relays.rbegin(), relays.rend());

  std::vector<Envelope> out;
  out.reserve(outgoing.size() * neighbor_ids.size());
  for (const auto& neighbor : neighbor_ids) {
    for (const auto& rec : outgoing) out.push_back(Envelope{rec, neighbor});
  }
  return out;
}

std::vector<Recommendation> support_peer_serve(const PeerState& support,
                                               const NetworkId& network,
                                               AppContext context) {
  if (support.role != PeerRole::support) {
    throw ValidationError(support.pseudonym.id + " is not a support peer");
  }
  std::vector<Recommendation> out;
  for (const Recommendation* rec : support.store.received_matching(network, context)) {
    out.push_back(*rec);
  }
  return out;
}

std::map<PseudonymId, TrustAssessment> recommender_trusts(
    const EvidenceStore& store, Round now, const MetricParams& params) {
  std::map<PseudonymId, TrustAssessment> out;
  std::vector<AccuracyPair> pairs;
  for (const auto& [recommender, history] : store.rec_history()) {
    pairs.clear();
    for (const auto& pair : history) {
      const Round age = pair.round <= now ? now - pair.round : 0;
      pairs.push_back({pair.recommended, pair.own,
                       decayed_weight(age, params.half_life)});
    }
    out.emplace(recommender, recommender_trust(pairs, params));
  }
  return out;
}

NetworkAssessment assess_network(
    const PeerState& peer, const NetworkId& network, Round now,
    const MetricParams& params,
    const std::map<PseudonymId, TrustAssessment>& rec_trusts) {
  return assess_networks(peer, std::span(&network, 1), now, params, rec_trusts).front();
}

std::vector<NetworkAssessment> assess_networks(
    const PeerState& peer, std::span<const NetworkId> networks, Round now,
    const MetricParams& params, const std::map<PseudonymId, TrustAssessment>& rec_trusts) {
  auto index_of = [&](const NetworkId& id) -> std::optional<std::size_t> {
    for (std::size_t k = 0; k < networks.size(); ++k) {
      if (networks[k] == id) return k;
    }
    return std::nullopt;
  };
  // Records share a handful of distinct ages, so cache the decay per age.
  std::vector<double> decay_by_age;
  auto decay = [&](Round round) {
    const Round age = round <= now ? now - round : 0;
    if (age >= decay_by_age.size()) {
      const auto old_size = decay_by_age.size();
      decay_by_age.resize(age + 1);
      for (auto a = old_size; a <= age; ++a) {
        decay_by_age[a] = decayed_weight(static_cast<Round>(a), params.half_life);
      }
    }
    return decay_by_age[age];
  };

  std::vector<std::vector<WeightedRating>> observed(networks.size());
  for (const auto& [key, obs] : peer.store.observations()) {
    if (const auto k = index_of(obs.network)) {
      observed[*k].push_back({obs.rating, decay(obs.round)});
    }
  }

  // Resolve each distinct recommender once.
  struct Resolved {
    double trust;
    std::optional<double> friend_weight;
  };
  const double newcomer = recommender_trust({}, params).value;
  std::unordered_map<std::string_view, Resolved> resolved;
  std::vector<std::vector<ResolvedRecommendation>> recs(networks.size());
  for (const auto& [key, stored] : peer.store.received()) {
    const Recommendation& rec = stored.rec;
    const auto k = index_of(rec.payload.network);
    if (!k) continue;
    auto it = resolved.find(rec.recommender);
    if (it == resolved.end()) {
      const auto trust_it = rec_trusts.find(rec.recommender);
      const auto friend_it = peer.friends.find(rec.recommender);
      it = resolved
               .emplace(rec.recommender,
                        Resolved{trust_it != rec_trusts.end() ? trust_it->second.value
                                                              : newcomer,
                                 friend_it != peer.friends.end()
                                     ? std::optional(friend_it->second)
                                     : std::nullopt})
               .first;
    }
    recs[*k].push_back({rec.payload.rating, decay(rec.payload.round), it->second.trust,
                        it->second.friend_weight});
  }

  std::vector<NetworkAssessment> out(networks.size());
  for (std::size_t k = 0; k < networks.size(); ++k) {
    out[k].direct = direct_trust(observed[k]);
    out[k].reputation = aggregate_resolved(recs[k], params);
    out[k].combined = combined_trust(out[k].direct, out[k].reputation);
  }
  return out;
}

RoundReport step_round(World& world) {
  RoundReport report;
  report.round = world.round;
  const Round now = world.round;
  const SimParams& params = world.params;

  report.attacks.reserve(world.attacks.size());
  for (const auto& attack : world.attacks) {
    report.attacks.push_back(AttackCounter{std::string(attack->kind()), 0});
  }
  for (std::size_t i = 0; i < world.attacks.size(); ++i) {
    world.attacks[i]->before_round(world, report.attacks[i]);
  }

  // Selection, use and observation.
  std::vector<NetworkId> network_ids;
  for (const auto& net : world.networks) network_ids.push_back(net.identity.authentic_id);
  for (auto& [id, peer] : world.peers) {
    if (peer.role != PeerRole::honest) continue;
    PeerRoundRecord record;
    record.peer = id;
    record.context = draw_context(params.context_mix, world.rng);

    const auto rec_trusts = recommender_trusts(peer.store, now, params.metric);
    const auto assessments =
        assess_networks(peer, network_ids, now, params.metric, rec_trusts);
    std::vector<Candidate> candidates;
    candidates.reserve(world.networks.size());
    for (std::size_t k = 0; k < world.networks.size(); ++k) {
      const auto& net = world.networks[k];
      const auto& assessment = assessments[k];
      candidates.push_back(Candidate{
          net.identity, assessment.combined,
          decide({net.identity.authentic_id, record.context, assessment.combined},
                 params.risk_table)});
    }

    if (const auto chosen = select(candidates, params.lambda)) {
      const GroundTruthNetwork* used = world.find_network(*chosen);
      const double expected =
          std::find_if(candidates.begin(), candidates.end(), [&](const Candidate& c) {
            return c.network.authentic_id == *chosen;
          })->trust;
      const double rating =
          sample_qoe(used->true_quality, peer.taste_offset, params.noise_sigma, world.rng);
      const NetworkId filed_under = attribute_network(
          used->beacon_name, *chosen, world.networks, params.p_mislead, world.rng);
      if (filed_under != *chosen) ++report.misattributed;

      peer.store.record_observation(
          QoEObservation{id, filed_under, record.context, rating, now}, now);
      peer.outcome_log.record_outcome(
          OutcomeRecord{std::clamp(expected, 0.0, 1.0), rating, record.context, now});

      record.selected = *chosen;
      record.attributed = filed_under;
      record.qoe = rating;
      record.expected = expected;
    }
    report.peers.push_back(std::move(record));
  }

  // Gossip phase: honest peers first (id order), then adversaries.
  std::vector<Envelope> wire;
  for (const auto& [id, peer] : world.peers) {
    if (peer.role != PeerRole::honest) continue;
    const auto topo = world.topology.find(id);
    if (topo == world.topology.end()) continue;
    const auto rec_trusts = recommender_trusts(peer.store, now, params.metric);
    auto out = gossip(peer, topo->second, params.gossip,
                      [&](const Recommendation& rec) {
                        return relay_allowed(peer, rec_trusts, params.metric, rec);
                      });
    wire.insert(wire.end(), std::make_move_iterator(out.begin()),
                std::make_move_iterator(out.end()));
  }
  for (std::size_t i = 0; i < world.attacks.size(); ++i) {
    world.attacks[i]->emit(world, wire, report.attacks[i]);
  }
  report.messages_sent = wire.size();

  std::map<PseudonymId, std::vector<Recommendation>> arrivals;
  for (auto& envelope : wire) {
    if (world.trace_emissions) world.emitted.insert(message_key(envelope.rec));
    PeerState* to = world.find_peer(envelope.to);
    if (to == nullptr || to->role == PeerRole::attacker) continue;
    const auto verdict = verify_message(envelope.rec, world.key_registry);
    if (verdict == VerificationVerdict::Verified &&
        envelope.rec.recommender == to->pseudonym.id) {
      continue;  // our own evidence echoed back
    }
    const auto before = to->store.duplicate_count();
    const bool accepted = to->store.ingest_recommendation(envelope.rec, verdict);
    if (!accepted) {
      ++report.rejected_spoof;
    } else if (to->store.duplicate_count() != before) {
      ++report.duplicates;
    } else {
      ++report.accepted;
      arrivals[envelope.to].push_back(std::move(envelope.rec));
    }
  }
  for (auto& [id, peer] : world.peers) {
    auto it = arrivals.find(id);
    if (it == arrivals.end()) {
      peer.relay_queue.clear();
    } else {
      peer.relay_queue = std::move(it->second);
    }
  }

  // Support-peer sync.
  std::uint64_t hosted_before = 0;
  const auto supports = world.ids_with_role(PeerRole::support);
  for (const auto& id : supports) hosted_before += world.peers.at(id).store.received().size();
  for (std::size_t i = 0; i < world.attacks.size(); ++i) {
    report.destroyed += world.attacks[i]->before_sync(world, report.attacks[i]);
  }
  if (!supports.empty()) {
    std::size_t index = 0;
    for (auto& [id, peer] : world.peers) {
      if (peer.role != PeerRole::honest) continue;
      const auto& support = world.peers.at(supports[(index + now) % supports.size()]);
      ++index;
      const AppContext context = report.peers[index - 1].context;
      for (const auto& net : world.networks) {
        for (auto& rec : support_peer_serve(support, net.identity.authentic_id, context)) {
          ++report.served;
          const auto verdict = verify_message(rec, world.key_registry);
          if (verdict == VerificationVerdict::Verified && rec.recommender == id) continue;
          const auto dup_before = peer.store.duplicate_count();
          if (!peer.store.ingest_recommendation(rec, verdict)) {
            ++report.rejected_spoof;
          } else if (peer.store.duplicate_count() == dup_before) {
            ++report.accepted;
          }
        }
      }
    }
  }
  for (const auto& id : supports) report.hosted += world.peers.at(id).store.received().size();
  report.evidence_availability =
      hosted_before == 0 ? 1.0
                         : 1.0 - static_cast<double>(report.destroyed) /
                                     static_cast<double>(hosted_before);

  for (auto& [id, peer] : world.peers) peer.store.prune(now, params.prune_min_weight);

  // Round metrics.
  for (const auto& net : world.networks) {
    report.networks.push_back({net.identity.authentic_id, net.beacon_name, net.true_quality});
  }
  if (!report.peers.empty()) {
    const auto* best = best_network(world.networks);
    const auto attacker_nets = world.attacker_networks();
    std::size_t best_count = 0;
    std::size_t attacker_count = 0;
    std::size_t used_count = 0;
    double misprediction = 0.0;
    for (const auto& record : report.peers) {
      if (!record.selected) continue;
      ++used_count;
      if (best != nullptr && *record.selected == best->identity.authentic_id) ++best_count;
      if (attacker_nets.contains(*record.selected)) ++attacker_count;
      misprediction += world.peers.at(record.peer).outcome_log.misprediction_rate(
          record.context, params.metric.half_life);
    }
    const double n = static_cast<double>(report.peers.size());
    report.best_network_fraction = static_cast<double>(best_count) / n;
    report.attacker_selection_fraction = static_cast<double>(attacker_count) / n;
    report.misprediction_rate =
        used_count == 0 ? 0.0 : misprediction / static_cast<double>(used_count);
  }

  for (std::size_t i = 0; i < world.attacks.size(); ++i) {
    world.attacks[i]->after_round(world, report, report.attacks[i]);
  }
  ++world.round;
  return report;
}

}  // namespace qoetrust
