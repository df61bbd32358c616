#include "qoetrust/selection.hpp"

namespace qoetrust {

double score(double trust, double cost, double lambda) {
  return trust - lambda * cost;
}

std::optional<NetworkId> select(std::span<const Candidate> candidates,
                                double lambda) {
  const Candidate* best = nullptr;
  double best_score = 0.0;
  for (const auto& candidate : candidates) {
    if (candidate.decision.verdict != Verdict::Grant) continue;
    const double s = score(candidate.trust, candidate.network.cost, lambda);
    if (best == nullptr || s > best_score ||
        (s == best_score &&
         candidate.network.authentic_id < best->network.authentic_id)) {
      best = &candidate;
      best_score = s;
    }
  }
  if (best == nullptr) return std::nullopt;
  return best->network.authentic_id;
}

}  // namespace qoetrust
