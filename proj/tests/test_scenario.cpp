#include <sys/wait.h>

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "qoetrust/errors.hpp"
#include "qoetrust/scenario.hpp"

using namespace qoetrust;
using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

const std::string kScenarios = std::string(QOETRUST_SOURCE_DIR) + "/scenarios/";

Json minimal() {
  return Json::parse(R"({
    "peers": {"honest": 1},
    "networks": [{"id": "net-a", "true_quality": 0.5}],
    "rounds": 1
  })");
}

// Path of the ConfigError raised by parse_config, or "" if it parsed.
std::string error_path(const Json& doc, std::string* message = nullptr) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    if (message != nullptr) *message = e.what();
    return e.path();
  }
  return "";
}

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / ("qoetrust-test-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args, const fs::path& stdout_file) {
  const std::string cmd = std::string(QOETRUST_CLI) + " " + args + " > " +
                          stdout_file.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("minimal config materializes every default") {
  const auto config = parse_config(minimal());
  CHECK(config.peers.honest == 1);
  CHECK(config.peers.support == 0);
  CHECK(config.peers.taste_sigma == 0.05);
  CHECK(config.networks.at(0).claimed_name == "net-a");
  CHECK(config.networks.at(0).provider == "provider-of:net-a");
  CHECK(config.topology.kind == TopologyKind::complete);
  CHECK(config.metric_params == MetricParams{});
  CHECK(config.risk_table == default_risk_table());
  CHECK(config.lambda == 0.0);
  CHECK(config.seed == 0);
  CHECK(config.attacks.empty());

  const auto echo = to_json(config);
  for (const char* key : {"peers", "networks", "topology", "metric_params", "risk_table",
                          "context_mix", "gossip", "lambda", "p_mislead", "noise_sigma",
                          "rounds", "attacks", "seed"}) {
    CHECK(echo.contains(key));
  }
}

TEST_CASE("config errors name the offending path") {
  std::string message;
  auto doc = minimal();
  doc["peerz"] = 3;
  CHECK(error_path(doc, &message) == "peerz");
  CHECK(message.find("peerz") != std::string::npos);

  doc = minimal();
  doc["attacks"] = Json::parse(R"([{"kind": "sybil_flood", "params": {"count": 2, "target": "net-x"}}])");
  CHECK(error_path(doc, &message) == "attacks[0].params.target");
  CHECK(message.find("net-x") != std::string::npos);

  doc = minimal();
  doc.erase("rounds");
  CHECK(error_path(doc, &message) == "rounds");
  CHECK(message.find("missing") != std::string::npos);

  doc = minimal();
  doc["networks"][0]["true_quality"] = 1.5;
  CHECK(error_path(doc) == "networks[0].true_quality");

  doc = minimal();
  doc["networks"][0].erase("true_quality");
  CHECK(error_path(doc) == "networks[0].true_quality");

  doc = minimal();
  doc["networks"].push_back(doc["networks"][0]);
  CHECK(error_path(doc) == "networks[1].id");

  doc = minimal();
  doc["attacks"] = Json::parse(R"([{"kind": "ddos", "params": {}}])");
  CHECK(error_path(doc) == "attacks[0].kind");

  doc = minimal();
  doc["topology"] = Json::parse(R"({"kind": "explicit", "edges": [["peer-000", "peer-404"]]})");
  CHECK(error_path(doc) == "topology.edges[0]");

  doc = minimal();
  doc["metric_params"] = Json::parse(R"({"half_life": 0})");
  CHECK(error_path(doc) == "metric_params.half_life");

  doc = minimal();
  doc["risk_table"] = Json::parse(R"({"banking": 1.2})");
  CHECK(error_path(doc) == "risk_table.banking");

  doc = minimal();
  doc["risk_table"] = Json::parse(R"({"browsing": 0.1})");
  const auto partial = parse_config(doc).risk_table;
  CHECK(partial.at(AppContext::browsing) == 0.1);
  CHECK(partial.at(AppContext::banking) == 0.8);  // unspecified contexts keep their default

  doc = minimal();
  doc["rounds"] = -1;
  CHECK(error_path(doc) == "rounds");
}

TEST_CASE("config echo round-trips for every shipped scenario") {
  for (const auto& entry : fs::directory_iterator(kScenarios)) {
    CAPTURE(entry.path().string());
    const auto config = load_config(entry.path());
    const auto echo = to_json(config);
    const auto again = parse_config(echo);
    CHECK(again == config);
    CHECK(to_json(again).dump() == echo.dump());
  }
}

TEST_CASE("load_config distinguishes I/O from content errors") {
  CHECK_THROWS_AS(load_config("/nonexistent/dir/config.json"), IoError);
  const auto dir = scratch_dir();
  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
}

TEST_CASE("zero rounds yields an empty series and a zero summary") {
  auto doc = minimal();
  doc["rounds"] = 0;
  const auto series = run(parse_config(doc));
  CHECK(series.rounds.empty());
  CHECK(series.summary.rounds == 0);
  CHECK(series.summary.messages_total == 0);
  CHECK(series.summary.attacker_selection_fraction == 0.0);
  CHECK(series.summary.best_network_fraction_final == 0.0);
  CHECK(series.summary.reputation_error.empty());

  const auto text = serialize_metrics(series, MetricsFormat::summary_json);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  CHECK(Json::parse(text)["summary"] == true);
}

TEST_CASE("seed override wins over the config seed") {
  auto doc = minimal();
  doc["peers"]["honest"] = 4;
  doc["rounds"] = 3;
  doc["seed"] = 5;
  const auto config = parse_config(doc);
  const auto own = serialize_metrics(run(config), MetricsFormat::json_lines);
  CHECK(own == serialize_metrics(run(config, 5), MetricsFormat::json_lines));
  const auto other = run(config, 6);
  CHECK(other.summary.seed == 6);
  CHECK(serialize_metrics(other, MetricsFormat::json_lines) != own);
}

TEST_CASE("emit_metrics writes one line per round plus the summary") {
  auto doc = minimal();
  doc["rounds"] = 3;
  const auto series = run(parse_config(doc));
  const auto dir = scratch_dir();

  emit_metrics(series, dir / "m.jsonl", MetricsFormat::json_lines);
  const auto lines = read_file(dir / "m.jsonl");
  CHECK(std::count(lines.begin(), lines.end(), '\n') == 4);
  CHECK(lines == serialize_metrics(series, MetricsFormat::json_lines));

  emit_metrics(series, dir / "again.jsonl", MetricsFormat::json_lines);
  CHECK(read_file(dir / "again.jsonl") == lines);

  emit_metrics(series, dir / "s.json", MetricsFormat::summary_json);
  const auto summary = read_file(dir / "s.json");
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 1);

  CHECK_THROWS_AS(emit_metrics(series, dir / "missing" / "deeper" / "m.jsonl",
                               MetricsFormat::json_lines),
                  IoError);
  CHECK(parse_metrics_format("json_lines") == MetricsFormat::json_lines);
  CHECK_FALSE(parse_metrics_format("csv").has_value());
}

TEST_CASE("summary key order is fixed") {
  const auto series = run(load_config(kScenarios + "baseline.json"));
  const auto summary = series.summary.to_json();
  std::vector<std::string> keys;
  for (const auto& item : summary.items()) keys.push_back(item.key());
  CHECK(keys == std::vector<std::string>{
                    "summary", "rounds", "seed", "honest_peers", "attacker_networks",
                    "attacker_selection_fraction", "best_network_fraction_final",
                    "convergence_round", "reputation_error", "messages_total",
                    "accepted_total", "rejected_spoof_total", "misattributed_total",
                    "evidence_availability", "misprediction_rate", "attack_actions"});
  CHECK(series.rounds.size() == 50);
}

TEST_CASE("build_world wires peers, friends and topology") {
  auto doc = minimal();
  doc["peers"] = Json::parse(R"({"honest": 6, "support": 2, "friends_per_peer": 2,
                                  "friend_weight": 0.7, "taste_sigma": 1.0})");
  doc["topology"] = Json::parse(R"({"kind": "ring", "ring_degree": 1})");
  const auto config = parse_config(doc);
  const World world = build_world(config, 3);
  CHECK(world.ids_with_role(PeerRole::honest).size() == 6);
  CHECK(world.ids_with_role(PeerRole::support).size() == 2);
  const auto& p0 = world.peers.at("peer-000");
  CHECK(p0.friends == FriendMap{{"peer-001", 0.7}, {"peer-002", 0.7}});
  CHECK(world.peers.at("peer-005").friends == FriendMap{{"peer-000", 0.7}, {"peer-001", 0.7}});
  for (const auto& [id, peer] : world.peers) {
    CHECK(peer.taste_offset >= -0.2);
    CHECK(peer.taste_offset <= 0.2);
  }
  // Ring over 8 nodes, one neighbor per side.
  for (const auto& [id, neighbors] : world.topology) CHECK(neighbors.size() == 2);
}

TEST_CASE("cli exit codes and outputs") {
  const auto dir = scratch_dir();
  const auto out = dir / "stdout.txt";
  const std::string baseline = kScenarios + "baseline.json";

  CHECK(cli("validate --config " + baseline, out) == 0);
  CHECK(parse_config(Json::parse(read_file(out))) == load_config(baseline));

  CHECK(cli("run --config " + baseline + " --format summary_json", out) == 0);
  CHECK(Json::parse(read_file(out))["rounds"] == 50);

  CHECK(cli("run --config " + baseline + " --seed 3 --out " + (dir / "r.jsonl").string(), out) ==
        0);
  const auto lines = read_file(dir / "r.jsonl");
  CHECK(std::count(lines.begin(), lines.end(), '\n') == 51);
  CHECK(lines == serialize_metrics(run(load_config(baseline), 3), MetricsFormat::json_lines));

  std::ofstream(dir / "bad.json") << R"({"peerz": 1})";
  CHECK(cli("validate --config " + (dir / "bad.json").string(), out) == 2);
  CHECK(cli("run --config " + (dir / "bad.json").string(), out) == 2);
  CHECK(cli("run --config " + baseline + " --format csv", out) == 2);
  CHECK(cli("run --config " + (dir / "absent.json").string(), out) == 3);
  CHECK(cli("run --config " + baseline + " --out " + (dir / "no" / "such" / "x").string(), out) ==
        3);

  const auto sweep_dir = dir / "sweep";
  CHECK(cli("sweep --config " + baseline + " --seeds 2 --out-dir " + sweep_dir.string(), out) == 0);
  CHECK(fs::exists(sweep_dir / "seed-7.jsonl"));
  CHECK(fs::exists(sweep_dir / "seed-8.jsonl"));
  std::istringstream summaries(read_file(out));
  std::string line;
  int count = 0;
  while (std::getline(summaries, line)) {
    CHECK(Json::parse(line)["seed"] == 7 + count);
    ++count;
  }
  CHECK(count == 2);
  fs::remove_all(dir);
}
