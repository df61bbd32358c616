#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qoetrust/attacks.hpp"
#include "qoetrust/simnet.hpp"

namespace qoetrust {

struct PeerConfig {
  std::uint32_t honest = 0;
  std::uint32_t support = 0;
  double taste_sigma = 0.05;
  std::uint64_t store_capacity = 5000;
  std::uint32_t friends_per_peer = 0;
  double friend_weight = 1.0;

  bool operator==(const PeerConfig&) const = default;
};

struct NetworkConfig {
  NetworkId id;
  std::string claimed_name;
  std::string provider;
  double true_quality = 0.0;
  double cost = 0.0;

  bool operator==(const NetworkConfig&) const = default;
};

enum class TopologyKind : std::uint8_t { complete, ring, explicit_edges };

struct TopologyConfig {
  TopologyKind kind = TopologyKind::complete;
  std::uint32_t ring_degree = 2;  // neighbors on each side
  std::vector<std::pair<PseudonymId, PseudonymId>> edges;

  bool operator==(const TopologyConfig&) const = default;
};

struct ScenarioConfig {
  PeerConfig peers;
  std::vector<NetworkConfig> networks;
  TopologyConfig topology;
  MetricParams metric_params;
  double prune_min_weight = 1e-3;
  RiskTable risk_table = default_risk_table();
  ContextMix context_mix = {1.0, 1.0, 1.0, 1.0};
  GossipParams gossip;
  double lambda = 0.0;
  double p_mislead = 0.0;
  double noise_sigma = 0.05;
  std::uint32_t rounds = 0;
  std::vector<AttackSpec> attacks;
  std::uint64_t seed = 0;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Validates a parsed config document and materializes every default.
/// Throws ConfigError naming the offending path.
ScenarioConfig parse_config(const nlohmann::ordered_json& doc);

/// Reads and parses a JSON file. Throws IoError when unreadable and
/// ConfigError when malformed or invalid.
ScenarioConfig load_config(const std::filesystem::path& path);

/// Fully materialized config; parse_config(to_json(c)) == c.
nlohmann::ordered_json to_json(const ScenarioConfig& config);

std::vector<PseudonymId> honest_peer_ids(const PeerConfig& peers);
std::vector<PseudonymId> support_peer_ids(const PeerConfig& peers);

/// A ready-to-step world: peers, tastes, friends, topology, attacks.
World build_world(const ScenarioConfig& config, std::uint64_t seed);

struct NetworkError {
  NetworkId network;
  double true_quality = 0.0;
  double mean_trust = 0.0;
  double abs_error = 0.0;
};

struct MetricsSummary {
  std::uint32_t rounds = 0;
  std::uint64_t seed = 0;
  std::vector<PseudonymId> honest_peers;
  std::vector<NetworkId> attacker_networks;
  double attacker_selection_fraction = 0.0;
  double best_network_fraction_final = 0.0;
  std::int64_t convergence_round = 0;  // -1 when never converged
  std::vector<NetworkError> reputation_error;
  std::uint64_t messages_total = 0;
  std::uint64_t accepted_total = 0;
  std::uint64_t rejected_spoof_total = 0;
  std::uint64_t misattributed_total = 0;
  double evidence_availability = 0.0;
  double misprediction_rate = 0.0;
  std::vector<AttackCounter> attack_actions;

  nlohmann::ordered_json to_json() const;
};

struct MetricsSeries {
  std::vector<RoundReport> rounds;
  MetricsSummary summary;
};

/// Share of honest peers that must pick the best network for a round to
/// count as converged.
inline constexpr double kConvergenceFraction = 0.9;

/// Steps a fresh world for config.rounds rounds. The override seed, when
/// given, wins over config.seed.
MetricsSeries run(const ScenarioConfig& config,
                  std::optional<std::uint64_t> seed_override = std::nullopt);

/// Summary computed from the reports and the final world state.
MetricsSummary summarize(const World& world, const std::vector<RoundReport>& rounds,
                         std::uint64_t seed);

enum class MetricsFormat : std::uint8_t { json_lines, summary_json };

std::optional<MetricsFormat> parse_metrics_format(std::string_view name) noexcept;

std::string serialize_metrics(const MetricsSeries& series, MetricsFormat format);

/// Throws IoError when the file cannot be written.
void emit_metrics(const MetricsSeries& series, const std::filesystem::path& out_path,
                  MetricsFormat format);

}  // namespace qoetrust
