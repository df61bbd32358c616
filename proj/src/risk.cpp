#include "qoetrust/risk.hpp"

#include <cmath>
#include <string>

#include "qoetrust/errors.hpp"

namespace qoetrust {

RiskTable default_risk_table() {
  return {{AppContext::browsing, 0.3},
          {AppContext::gaming, 0.5},
          {AppContext::streaming, 0.5},
          {AppContext::banking, 0.8}};
}

double risk_threshold(AppContext context, const RiskTable& table) {
  const auto it = table.find(context);
  if (it == table.end()) {
    throw ConfigError("no threshold configured",
                      "risk_table." + std::string(to_string(context)));
  }
  return it->second;
}

Decision decide(const RiskRequest& request, const RiskTable& table) {
  const double threshold = risk_threshold(request.context, table);
  const double margin = request.trust - threshold;
  return {request.trust >= threshold ? Verdict::Grant : Verdict::Deny,
          threshold, margin};
}

double OutcomeRecord::discrepancy() const noexcept {
  return std::abs(expected - actual);
}

void OutcomeLog::record_outcome(const OutcomeRecord& record) {
  validate_rating(record.expected);
  validate_rating(record.actual);
  records_.push_back(record);
}

double OutcomeLog::misprediction_rate(AppContext context,
                                      std::size_t window) const {
  if (window == 0) throw ValidationError("misprediction window must be >= 1");
  double sum = 0.0;
  std::size_t count = 0;
  for (auto it = records_.rbegin(); it != records_.rend() && count < window; ++it) {
    if (it->context != context) continue;
    sum += it->discrepancy();
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

}  // namespace qoetrust
