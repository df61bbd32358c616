#include "qoetrust/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qoetrust/errors.hpp"
#include "object_reader.hpp"

namespace qoetrust {

namespace {

using Json = nlohmann::ordered_json;
using detail::ObjectReader;

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string numbered_id(const char* prefix, std::uint32_t index, std::uint32_t count) {
  const int width = std::max(3, static_cast<int>(std::to_string(count).size()));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%0*u", prefix, width, index);
  return buf;
}

std::string_view to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::complete:
      return "complete";
    case TopologyKind::ring:
      return "ring";
    case TopologyKind::explicit_edges:
      return "explicit";
  }
  return "complete";
}

PeerConfig parse_peers(const Json& doc) {
  ObjectReader in(doc, "peers");
  PeerConfig peers;
  peers.honest = static_cast<std::uint32_t>(in.integer("honest", std::nullopt, 0, 100000));
  peers.support = static_cast<std::uint32_t>(in.integer("support", 0, 0, 100000));
  peers.taste_sigma = in.number("taste_sigma", 0.05, 0.0, 1.0);
  peers.store_capacity = in.integer("store_capacity", 5000, 1,
                                    std::numeric_limits<std::uint64_t>::max());
  peers.friends_per_peer = static_cast<std::uint32_t>(in.integer("friends_per_peer", 0));
  peers.friend_weight = in.number("friend_weight", 1.0, 0.0, 1.0);
  if (peers.honest > 0 && peers.friends_per_peer >= peers.honest) {
    throw ConfigError("must be smaller than the honest peer count",
                      "peers.friends_per_peer");
  }
  (void)in.finish();
  return peers;
}

std::vector<NetworkConfig> parse_networks(const Json& doc) {
  if (!doc.is_array() || doc.empty()) {
    throw ConfigError("must be a nonempty list", "networks");
  }
  std::vector<NetworkConfig> networks;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    ObjectReader in(doc[i], "networks[" + std::to_string(i) + "]");
    NetworkConfig net;
    net.id = in.string("id");
    if (net.id.empty()) throw ConfigError("must not be empty", in.at("id"));
    if (!seen.insert(net.id).second) {
      throw ConfigError("duplicate network id '" + net.id + "'", in.at("id"));
    }
    net.claimed_name = in.string_or("claimed_name", net.id);
    net.provider = in.string_or("provider", "provider-of:" + net.id);
    net.true_quality = in.number("true_quality", std::nullopt, 0.0, 1.0);
    net.cost = in.number("cost", 0.0, 0.0, 1.0);
    (void)in.finish();
    networks.push_back(std::move(net));
  }
    return networks;
}

TopologyConfig parse_topology(const Json* doc, const std::set<std::string>& peer_ids) {
  TopologyConfig topo;
  const Json empty = Json::object();
  ObjectReader in(doc != nullptr ? *doc : empty, "topology");
  const std::string fallback = peer_ids.size() <= 50 ? "complete" : "ring";
  const std::string kind = in.string_or("kind", fallback);
  if (kind == "complete") {
    topo.kind = TopologyKind::complete;
  } else if (kind == "ring") {
    topo.kind = TopologyKind::ring;
    topo.ring_degree = static_cast<std::uint32_t>(in.integer("ring_degree", 2, 1));
  } else if (kind == "explicit") {
    topo.kind = TopologyKind::explicit_edges;
    const Json& edges = in.required("edges");
    if (!edges.is_array()) throw ConfigError("must be a list", in.at("edges"));
      for (std::size_t i = 0; i < edges.size(); ++i) {
      const std::string path = in.at("edges") + "[" + std::to_string(i) + "]";
      const Json& edge = edges[i];
      if (!edge.is_array() || edge.size() != 2 || !edge[0].is_string() ||
          !edge[1].is_string()) {
        throw ConfigError("must be a pair of peer ids", path);
      }
      auto a = edge[0].get<std::string>();
      auto b = edge[1].get<std::string>();
      for (const auto& id : {a, b}) {
        if (!peer_ids.contains(id)) {
          throw ConfigError("dangling reference to undefined peer '" + id + "'", path);
        }
      }
      if (a == b) throw ConfigError("self-loop", path);
      topo.edges.emplace_back(std::move(a), std::move(b));
    }
  } else {
    throw ConfigError("must be one of complete, ring, explicit", in.at("kind"));
  }
  (void)in.finish();
  return topo;
}

void parse_metric_params(const Json* doc, ScenarioConfig& config) {
  const Json empty = Json::object();
  ObjectReader in(doc != nullptr ? *doc : empty, "metric_params");
  auto& m = config.metric_params;
  m.half_life = static_cast<std::uint32_t>(in.integer("half_life", 20, 1));
  m.rec_prior_pos = in.number("rec_prior_pos", 1.0, 0.0, kInf);
  m.rec_prior_neg = in.number("rec_prior_neg", 3.0, 0.0, kInf);
  if (m.rec_prior_pos + m.rec_prior_neg <= 0.0) {
    throw ConfigError("rec_prior_pos + rec_prior_neg must be > 0",
                      "metric_params.rec_prior_neg");
  }
  m.sybil_cap = in.number("sybil_cap", 5.0, 0.0, kInf);
  if (!(m.sybil_cap > 0.0)) throw ConfigError("must be > 0", "metric_params.sybil_cap");
  m.sybil_cap_enabled = in.boolean("sybil_cap_enabled", true);
  m.confidence_floor = in.number("confidence_floor", 0.2, 0.0, 1.0);
  config.prune_min_weight = in.number("prune_min_weight", 1e-3, 0.0, 1.0);
  if (!(config.prune_min_weight < 1.0)) {
    throw ConfigError("must be < 1", "metric_params.prune_min_weight");
  }
  (void)in.finish();
}

template <typename Fill>
void parse_per_context(const Json* doc, const std::string& path, Fill fill,
                       std::array<double, 4> defaults, double hi) {
  const Json empty = Json::object();
  ObjectReader in(doc != nullptr ? *doc : empty, path);
  for (std::size_t i = 0; i < kAllContexts.size(); ++i) {
    const std::string key(to_string(kAllContexts[i]));
    fill(kAllContexts[i], in.number(key, defaults[i], 0.0, hi));
  }
  (void)in.finish();
}

GossipParams parse_gossip(const Json* doc) {
  const Json empty = Json::object();
  ObjectReader in(doc != nullptr ? *doc : empty, "gossip");
  GossipParams g;
  g.fanout_budget = static_cast<std::uint32_t>(in.integer("fanout_budget", 1));
  g.max_hops = static_cast<std::uint32_t>(in.integer("max_hops", 2));
  (void)in.finish();
  return g;
}

std::vector<AttackSpec> parse_attacks(const Json* doc, const ReferenceSet& refs) {
  std::vector<AttackSpec> attacks;
  if (doc != nullptr) {
    if (!doc->is_array()) throw ConfigError("must be a list", "attacks");
    for (std::size_t i = 0; i < doc->size(); ++i) {
      const std::string path = "attacks[" + std::to_string(i) + "]";
      ObjectReader in((*doc)[i], path);
      const std::string kind_name = in.string("kind");
      const auto kind = parse_attack_kind(kind_name);
      if (!kind) {
        throw ConfigError("unknown attack kind '" + kind_name + "'", in.at("kind"));
      }
      const Json* params = in.child("params");
      const Json empty = Json::object();
      auto spec = normalize_attack(*kind, params != nullptr ? *params : empty, refs,
                                   in.at("params"));
      (void)in.finish();
      attacks.push_back(std::move(spec));
    }
  }
    return attacks;
}

}  // namespace

std::vector<PseudonymId> honest_peer_ids(const PeerConfig& peers) {
  std::vector<PseudonymId> ids;
  for (std::uint32_t i = 0; i < peers.honest; ++i) {
    ids.push_back(numbered_id("peer", i, peers.honest));
  }
  return ids;
}

std::vector<PseudonymId> support_peer_ids(const PeerConfig& peers) {
  std::vector<PseudonymId> ids;
  for (std::uint32_t i = 0; i < peers.support; ++i) {
    ids.push_back(numbered_id("sup", i, peers.support));
  }
  return ids;
}

ScenarioConfig parse_config(const Json& doc) {
  ObjectReader top(doc, "");
  ScenarioConfig config;

  config.peers = parse_peers(top.required("peers"));
  config.networks = parse_networks(top.required("networks"));

  std::set<std::string> peer_ids;
  for (auto& id : honest_peer_ids(config.peers)) peer_ids.insert(id);
  for (auto& id : support_peer_ids(config.peers)) peer_ids.insert(id);
  config.topology = parse_topology(top.child("topology"), peer_ids);

  parse_metric_params(top.child("metric_params"), config);

  const auto defaults = default_risk_table();
  parse_per_context(
      top.child("risk_table"), "risk_table",
      [&](AppContext c, double x) { config.risk_table[c] = x; },
      {defaults.at(AppContext::browsing), defaults.at(AppContext::gaming),
       defaults.at(AppContext::streaming), defaults.at(AppContext::banking)},
      1.0);
  parse_per_context(
      top.child("context_mix"), "context_mix",
      [&](AppContext c, double x) { config.context_mix[static_cast<std::size_t>(c)] = x; },
      {1.0, 1.0, 1.0, 1.0}, kInf);
  double mix_total = 0.0;
  for (double w : config.context_mix) mix_total += w;
  if (!(mix_total > 0.0)) throw ConfigError("weights must not all be zero", "context_mix");

  config.gossip = parse_gossip(top.child("gossip"));

  // Scalars are read through a reader over the top-level document.
  config.lambda = top.number("lambda", 0.0, 0.0, kInf);
  config.p_mislead = top.number("p_mislead", 0.0, 0.0, 1.0);
  config.noise_sigma = top.number("noise_sigma", 0.05, 0.0, 1.0);
  config.rounds = static_cast<std::uint32_t>(top.integer("rounds", std::nullopt));

  ReferenceSet refs;
  for (const auto& net : config.networks) {
    refs.networks.insert(net.id);
    refs.claimed_names.emplace(net.id, net.claimed_name);
  }
  for (auto& id : honest_peer_ids(config.peers)) refs.honest_peers.insert(id);
  for (auto& id : support_peer_ids(config.peers)) refs.support_peers.insert(id);
  config.attacks = parse_attacks(top.child("attacks"), refs);

  config.seed = top.integer("seed", 0, 0, std::numeric_limits<std::uint64_t>::max());
  (void)top.finish();
  return config;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  Json doc;
  try {
    doc = Json::parse(buffer.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what(), path.string());
  }
  return parse_config(doc);
}

Json to_json(const ScenarioConfig& config) {
  Json out;
  Json peers;
  peers["honest"] = config.peers.honest;
  peers["support"] = config.peers.support;
  peers["taste_sigma"] = config.peers.taste_sigma;
  peers["store_capacity"] = config.peers.store_capacity;
  peers["friends_per_peer"] = config.peers.friends_per_peer;
  peers["friend_weight"] = config.peers.friend_weight;
  out["peers"] = std::move(peers);

  Json networks = Json::array();
  for (const auto& net : config.networks) {
    Json entry;
    entry["id"] = net.id;
    entry["claimed_name"] = net.claimed_name;
    entry["provider"] = net.provider;
    entry["true_quality"] = net.true_quality;
    entry["cost"] = net.cost;
    networks.push_back(std::move(entry));
  }
  out["networks"] = std::move(networks);

  Json topo;
  topo["kind"] = std::string(to_string(config.topology.kind));
  if (config.topology.kind == TopologyKind::ring) {
    topo["ring_degree"] = config.topology.ring_degree;
  } else if (config.topology.kind == TopologyKind::explicit_edges) {
    Json edges = Json::array();
    for (const auto& [a, b] : config.topology.edges) edges.push_back(Json::array({a, b}));
    topo["edges"] = std::move(edges);
  }
  out["topology"] = std::move(topo);

  Json metric;
  metric["half_life"] = config.metric_params.half_life;
  metric["rec_prior_pos"] = config.metric_params.rec_prior_pos;
  metric["rec_prior_neg"] = config.metric_params.rec_prior_neg;
  metric["sybil_cap"] = config.metric_params.sybil_cap;
  metric["sybil_cap_enabled"] = config.metric_params.sybil_cap_enabled;
  metric["confidence_floor"] = config.metric_params.confidence_floor;
  metric["prune_min_weight"] = config.prune_min_weight;
  out["metric_params"] = std::move(metric);

  Json risk;
  Json mix;
  for (std::size_t i = 0; i < kAllContexts.size(); ++i) {
    const std::string key(to_string(kAllContexts[i]));
    risk[key] = config.risk_table.at(kAllContexts[i]);
    mix[key] = config.context_mix[i];
  }
  out["risk_table"] = std::move(risk);
  out["context_mix"] = std::move(mix);

  Json gossip;
  gossip["fanout_budget"] = config.gossip.fanout_budget;
  gossip["max_hops"] = config.gossip.max_hops;
  out["gossip"] = std::move(gossip);

  out["lambda"] = config.lambda;
  out["p_mislead"] = config.p_mislead;
  out["noise_sigma"] = config.noise_sigma;
  out["rounds"] = config.rounds;

  Json attacks = Json::array();
  for (const auto& spec : config.attacks) {
    Json entry;
    entry["kind"] = std::string(to_string(spec.kind));
    entry["params"] = spec.params;
    attacks.push_back(std::move(entry));
  }
  out["attacks"] = std::move(attacks);
  out["seed"] = config.seed;
  return out;
}

World build_world(const ScenarioConfig& config, std::uint64_t seed) {
  SimParams params;
  params.metric = config.metric_params;
  params.risk_table = config.risk_table;
  params.gossip = config.gossip;
  params.context_mix = config.context_mix;
  params.noise_sigma = config.noise_sigma;
  params.p_mislead = config.p_mislead;
  params.lambda = config.lambda;
  params.prune_min_weight = config.prune_min_weight;

  World world(std::move(params), seed);
  for (const auto& net : config.networks) {
    world.networks.push_back(GroundTruthNetwork{
        NetworkIdentity{net.id, net.claimed_name, net.provider, net.cost},
        net.true_quality, net.claimed_name});
  }

  const auto honest = honest_peer_ids(config.peers);
  const auto support = support_peer_ids(config.peers);
  const std::size_t capacity = static_cast<std::size_t>(config.peers.store_capacity);
  for (const auto& id : honest) world.add_peer(id, PeerRole::honest, capacity);
  for (const auto& id : support) world.add_peer(id, PeerRole::support, capacity);

  // Tastes are the first draws of the stream, in honest id order.
  for (const auto& id : honest) {
    auto& peer = world.peers.at(id);
    if (config.peers.taste_sigma > 0.0) {
      peer.taste_offset =
          std::clamp(config.peers.taste_sigma * world.rng.normal(), -0.2, 0.2);
    }
  }

  for (std::size_t i = 0; i < honest.size(); ++i) {
    auto& peer = world.peers.at(honest[i]);
    for (std::uint32_t k = 1; k <= config.peers.friends_per_peer; ++k) {
      peer.friends[honest[(i + k) % honest.size()]] = config.peers.friend_weight;
    }
  }

  std::vector<PseudonymId> members = honest;
  members.insert(members.end(), support.begin(), support.end());
  std::sort(members.begin(), members.end());
  for (const auto& id : members) world.topology[id];
  auto link = [&](const PseudonymId& a, const PseudonymId& b) {
    auto& na = world.topology[a];
    if (std::find(na.begin(), na.end(), b) == na.end()) na.push_back(b);
    auto& nb = world.topology[b];
    if (std::find(nb.begin(), nb.end(), a) == nb.end()) nb.push_back(a);
  };
  switch (config.topology.kind) {
    case TopologyKind::complete:
      for (std::size_t i = 0; i < members.size(); ++i) {
        for (std::size_t j = i + 1; j < members.size(); ++j) link(members[i], members[j]);
      }
      break;
    case TopologyKind::ring:
      for (std::size_t i = 0; i < members.size(); ++i) {
        for (std::uint32_t d = 1; d <= config.topology.ring_degree; ++d) {
          const std::size_t j = (i + d) % members.size();
          if (j != i) link(members[i], members[j]);
        }
      }
      break;
    case TopologyKind::explicit_edges:
      for (const auto& [a, b] : config.topology.edges) link(a, b);
      break;
  }
  for (auto& [id, neighbors] : world.topology) std::sort(neighbors.begin(), neighbors.end());

  for (std::size_t i = 0; i < config.attacks.size(); ++i) {
    install_attack(world, config.attacks[i], i);
  }
  return world;
}

Json MetricsSummary::to_json() const {
  Json out;
  out["summary"] = true;
  out["rounds"] = rounds;
  out["seed"] = seed;
  out["honest_peers"] = honest_peers;
  out["attacker_networks"] = attacker_networks;
  out["attacker_selection_fraction"] = attacker_selection_fraction;
  out["best_network_fraction_final"] = best_network_fraction_final;
  out["convergence_round"] = convergence_round;
  Json errors = Json::array();
  for (const auto& e : reputation_error) {
    Json entry;
    entry["network"] = e.network;
    entry["true_quality"] = e.true_quality;
    entry["mean_trust"] = e.mean_trust;
    entry["abs_error"] = e.abs_error;
    errors.push_back(std::move(entry));
  }
  out["reputation_error"] = std::move(errors);
  out["messages_total"] = messages_total;
  out["accepted_total"] = accepted_total;
  out["rejected_spoof_total"] = rejected_spoof_total;
  out["misattributed_total"] = misattributed_total;
  out["evidence_availability"] = evidence_availability;
  out["misprediction_rate"] = misprediction_rate;
  Json attacks = Json::array();
  for (const auto& counter : attack_actions) {
    Json entry;
    entry["kind"] = counter.kind;
    entry["actions"] = counter.actions;
    attacks.push_back(std::move(entry));
  }
  out["attack_actions"] = std::move(attacks);
  return out;
}

MetricsSummary summarize(const World& world, const std::vector<RoundReport>& rounds,
                         std::uint64_t seed) {
  MetricsSummary summary;
  summary.rounds = static_cast<std::uint32_t>(rounds.size());
  summary.seed = seed;
  summary.honest_peers = world.ids_with_role(PeerRole::honest);
  for (const auto& id : world.attacker_networks()) summary.attacker_networks.push_back(id);
  for (const auto& attack : world.attacks) {
    summary.attack_actions.push_back(AttackCounter{std::string(attack->kind()), 0});
  }
  if (rounds.empty()) return summary;

  double attacker = 0.0;
  double availability = 0.0;
  double misprediction = 0.0;
  for (const auto& report : rounds) {
    attacker += report.attacker_selection_fraction;
    availability += report.evidence_availability;
    misprediction += report.misprediction_rate;
    summary.messages_total += report.messages_sent;
    summary.accepted_total += report.accepted;
    summary.rejected_spoof_total += report.rejected_spoof;
    summary.misattributed_total += report.misattributed;
    for (std::size_t i = 0; i < report.attacks.size(); ++i) {
      summary.attack_actions[i].actions += report.attacks[i].actions;
    }
  }
  const double n = static_cast<double>(rounds.size());
  summary.attacker_selection_fraction = attacker / n;
  summary.evidence_availability = availability / n;
  summary.misprediction_rate = misprediction / n;
  summary.best_network_fraction_final = rounds.back().best_network_fraction;

  summary.convergence_round = -1;
  for (std::size_t i = rounds.size(); i-- > 0;) {
    if (rounds[i].best_network_fraction < kConvergenceFraction) break;
    summary.convergence_round = static_cast<std::int64_t>(rounds[i].round);
  }

  // Mean combined trust the honest peers currently place in each network.
  std::vector<double> sums(world.networks.size(), 0.0);
  std::vector<NetworkId> network_ids;
  for (const auto& net : world.networks) network_ids.push_back(net.identity.authentic_id);
  std::size_t samples = 0;
  for (const auto& [id, peer] : world.peers) {
    if (peer.role != PeerRole::honest) continue;
    const auto rec_trusts = recommender_trusts(peer.store, world.round, world.params.metric);
    const auto assessments =
        assess_networks(peer, network_ids, world.round, world.params.metric, rec_trusts);
    for (std::size_t k = 0; k < world.networks.size(); ++k) {
      sums[k] += assessments[k].combined;
    }
    ++samples;
  }
  for (std::size_t k = 0; k < world.networks.size(); ++k) {
    NetworkError e;
    e.network = world.networks[k].identity.authentic_id;
    e.true_quality = world.networks[k].true_quality;
    e.mean_trust = samples == 0 ? 0.0 : sums[k] / static_cast<double>(samples);
    e.abs_error = std::abs(e.mean_trust - e.true_quality);
    summary.reputation_error.push_back(std::move(e));
  }
  return summary;
}

MetricsSeries run(const ScenarioConfig& config, std::optional<std::uint64_t> seed_override) {
  const std::uint64_t seed = seed_override.value_or(config.seed);
  World world = build_world(config, seed);
  MetricsSeries series;
  series.rounds.reserve(config.rounds);
  for (std::uint32_t r = 0; r < config.rounds; ++r) {
    series.rounds.push_back(step_round(world));
  }
  series.summary = summarize(world, series.rounds, seed);
  return series;
}

std::optional<MetricsFormat> parse_metrics_format(std::string_view name) noexcept {
  if (name == "json_lines") return MetricsFormat::json_lines;
  if (name == "summary_json") return MetricsFormat::summary_json;
  return std::nullopt;
}

std::string serialize_metrics(const MetricsSeries& series, MetricsFormat format) {
  std::string out;
  if (format == MetricsFormat::json_lines) {
    for (const auto& report : series.rounds) {
      out += report.to_json().dump();
      out += '\n';
    }
  }
  out += series.summary.to_json().dump();
  out += '\n';
  return out;
}

void emit_metrics(const MetricsSeries& series, const std::filesystem::path& out_path,
                  MetricsFormat format) {
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write metrics to " + out_path.string());
  const std::string text = serialize_metrics(series, format);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("failed writing metrics to " + out_path.string());
}

}  // namespace qoetrust
