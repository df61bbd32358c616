#include "qoetrust/trust_metric.hpp"

#include <algorithm>
#include <cmath>

#include "qoetrust/errors.hpp"

namespace qoetrust {

namespace {

bool finite_nonnegative(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

void validate(const MetricParams& params) {
  if (params.half_life == 0) {
    throw ConfigError("must be >= 1", "metric_params.half_life");
  }
  if (!finite_nonnegative(params.rec_prior_pos)) {
    throw ConfigError("must be >= 0", "metric_params.rec_prior_pos");
  }
  if (!finite_nonnegative(params.rec_prior_neg)) {
    throw ConfigError("must be >= 0", "metric_params.rec_prior_neg");
  }
  if (params.rec_prior_pos + params.rec_prior_neg <= 0.0) {
    throw ConfigError("rec_prior_pos + rec_prior_neg must be > 0",
                      "metric_params.rec_prior_neg");
  }
  if (!(std::isfinite(params.sybil_cap) && params.sybil_cap > 0.0)) {
    throw ConfigError("must be > 0", "metric_params.sybil_cap");
  }
  if (!(params.confidence_floor >= 0.0 && params.confidence_floor <= 1.0)) {
    throw ConfigError("must be in [0,1]", "metric_params.confidence_floor");
  }
}

TrustAssessment direct_trust(std::span<const WeightedRating> weighted_obs) {
  double alpha = 0.0;
  double beta = 0.0;
  for (const auto& [rating, weight] : weighted_obs) {
    alpha += weight * rating;
    beta += weight * (1.0 - rating);
  }
  const double total = alpha + beta;
  return {(alpha + 1.0) / (total + 2.0), total / (total + 2.0)};
}

TrustAssessment recommender_trust(std::span<const AccuracyPair> pairs,
                                  const MetricParams& params) {
  double alpha = 0.0;
  double beta = 0.0;
  for (const auto& pair : pairs) {
    const double accuracy = 1.0 - std::abs(pair.recommended - pair.own);
    alpha += pair.weight * accuracy;
    beta += pair.weight * (1.0 - accuracy);
  }
  const double prior = params.rec_prior_pos + params.rec_prior_neg;
  const double total = alpha + beta;
  return {(alpha + params.rec_prior_pos) / (total + prior),
          total / (total + prior)};
}

TrustAssessment aggregate_resolved(std::span<const ResolvedRecommendation> recs,
                                   const MetricParams& params) {
  double pool = 0.0;
  for (const auto& rec : recs) {
    if (!rec.friend_weight) pool += rec.decay * rec.recommender_trust;
  }
  const double scale = params.sybil_cap_enabled && pool > params.sybil_cap
                           ? params.sybil_cap / pool
                           : 1.0;
  double total = 0.0;
  double weighted = 0.0;
  for (const auto& rec : recs) {
    const double w = rec.friend_weight
                         ? rec.decay * std::max(rec.recommender_trust, *rec.friend_weight)
                         : rec.decay * rec.recommender_trust * scale;
    total += w;
    weighted += w * rec.rating;
  }
  if (total <= 0.0) return {0.5, 0.0};
  return {std::clamp(weighted / total, 0.0, 1.0), total / (total + 2.0)};
}

TrustAssessment aggregate_reputation(
    std::span<const ReputationInput> recs,
    const std::map<PseudonymId, TrustAssessment>& rec_trusts,
    const FriendMap& friends, const MetricParams& params) {
  const double newcomer = recommender_trust({}, params).value;
  std::vector<ResolvedRecommendation> resolved;
  resolved.reserve(recs.size());
  for (const auto& rec : recs) {
    const auto trust_it = rec_trusts.find(rec.recommender);
    const auto friend_it = friends.find(rec.recommender);
    resolved.push_back(
        {rec.rating, rec.decay,
         trust_it != rec_trusts.end() ? trust_it->second.value : newcomer,
         friend_it != friends.end() ? std::optional(friend_it->second) : std::nullopt});
  }
  return aggregate_resolved(resolved, params);
}

double combined_trust(const TrustAssessment& direct,
                      const TrustAssessment& reputation) {
  if (direct.confidence == 0.0) return reputation.value;
  const double c = direct.confidence;
  return c * direct.value + (1.0 - c) * reputation.value;
}

}  // namespace qoetrust
