// qoetrust: run seeded trust-engine simulations and emit metrics.
//
//   qoetrust run --config <path> [--seed N] [--out <path>] [--format json_lines|summary_json]
//   qoetrust sweep --config <path> --seeds N [--out-dir <dir>]
//   qoetrust validate --config <path>
//
// Exit codes: 0 success, 2 config error, 3 I/O error.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "qoetrust/errors.hpp"
#include "qoetrust/scenario.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

int run_command(const std::string& config_path, std::optional<std::uint64_t> seed,
                const std::string& out_path, const std::string& format_name) {
  const auto format = qoetrust::parse_metrics_format(format_name);
  if (!format) throw qoetrust::ConfigError("unknown format '" + format_name + "'", "--format");
  const auto config = qoetrust::load_config(config_path);
  const auto series = qoetrust::run(config, seed);
  if (out_path.empty() || out_path == "-") {
    std::cout << qoetrust::serialize_metrics(series, *format);
  } else {
    qoetrust::emit_metrics(series, out_path, *format);
  }
  return 0;
}

int sweep_command(const std::string& config_path, std::uint64_t seeds,
                  const std::string& out_dir) {
  const auto config = qoetrust::load_config(config_path);
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw qoetrust::IoError("cannot create " + out_dir + ": " + ec.message());
  }

  // Each seed gets an isolated world; results are reported in seed order.
  std::vector<qoetrust::MetricsSummary> summaries(seeds);
  std::vector<std::string> errors(seeds);
  std::atomic<std::uint64_t> next{0};
  const unsigned workers =
      std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                      static_cast<unsigned>(std::max<std::uint64_t>(seeds, 1))));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::uint64_t i = next++; i < seeds; i = next++) {
        const std::uint64_t seed = config.seed + i;
        try {
          const auto series = qoetrust::run(config, seed);
          if (!out_dir.empty()) {
            qoetrust::emit_metrics(series,
                                   std::filesystem::path(out_dir) /
                                       ("seed-" + std::to_string(seed) + ".jsonl"),
                                   qoetrust::MetricsFormat::json_lines);
          }
          summaries[i] = series.summary;
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      }
    });
  }
  for (auto& t : pool) t.join();

  for (std::uint64_t i = 0; i < seeds; ++i) {
    if (!errors[i].empty()) throw qoetrust::IoError(errors[i]);
    std::cout << summaries[i].to_json().dump() << '\n';
  }
  return 0;
}

int validate_command(const std::string& config_path) {
  const auto config = qoetrust::load_config(config_path);
  std::cout << qoetrust::to_json(config).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trust-engine network selection simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  std::string format = "json_lines";
  auto* run = app.add_subcommand("run", "Run one seeded simulation");
  run->add_option("--config", config_path, "Scenario config (JSON)")->required();
  run->add_option("--seed", seed, "Seed; overrides the config's seed");
  run->add_option("--out", out_path, "Metrics output path (default stdout)");
  run->add_option("--format", format, "json_lines or summary_json");

  std::uint64_t seeds = 1;
  std::string out_dir;
  auto* sweep = app.add_subcommand("sweep", "Run seeds config.seed .. config.seed+N-1");
  sweep->add_option("--config", config_path, "Scenario config (JSON)")->required();
  sweep->add_option("--seeds", seeds, "Number of seeds")->required();
  sweep->add_option("--out-dir", out_dir, "Directory for per-seed json_lines files");

  auto* validate = app.add_subcommand("validate", "Parse and print the materialized config");
  validate->add_option("--config", config_path, "Scenario config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    if (run->parsed()) return run_command(config_path, seed, out_path, format);
    if (sweep->parsed()) return sweep_command(config_path, seeds, out_dir);
    if (validate->parsed()) return validate_command(config_path);
  } catch (const qoetrust::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const qoetrust::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const qoetrust::ValidationError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
