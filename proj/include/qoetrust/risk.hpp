#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "qoetrust/types.hpp"

namespace qoetrust {

/// Required trust per application context. Context recognition itself is a
/// pass-through: the simulator hands every session its context directly.
using RiskTable = std::map<AppContext, double>;

/// browsing 0.3, gaming 0.5, streaming 0.5, banking 0.8.
RiskTable default_risk_table();

struct RiskRequest {
  NetworkId network;
  AppContext context = AppContext::browsing;
  double trust = 0.0;
};

enum class Verdict : std::uint8_t { Grant, Deny };

struct Decision {
  Verdict verdict = Verdict::Deny;
  double threshold_used = 0.0;
  double margin = 0.0;  // trust - threshold; Grant iff margin >= 0

  bool operator==(const Decision&) const = default;
};

/// Throws ConfigError when `context` has no entry in `table`.
double risk_threshold(AppContext context, const RiskTable& table);

Decision decide(const RiskRequest& request, const RiskTable& table);

struct OutcomeRecord {
  double expected = 0.0;  // trust at selection time
  double actual = 0.0;    // achieved QoE
  AppContext context = AppContext::browsing;
  Round round = 0;

  double discrepancy() const noexcept;
};

/// Append-only log of expected versus achieved outcomes, one per peer.
class OutcomeLog {
 public:
  /// Throws ValidationError unless expected and actual lie in [0,1].
  void record_outcome(const OutcomeRecord& record);

  /// Mean discrepancy over the last `window` records of `context`; 0 if none.
  /// Throws ValidationError when window is 0.
  double misprediction_rate(AppContext context, std::size_t window) const;

  const std::vector<OutcomeRecord>& records() const noexcept { return records_; }

 private:
  std::vector<OutcomeRecord> records_;
};

}  // namespace qoetrust
