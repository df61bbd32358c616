#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "qoetrust/evidence_store.hpp"
#include "qoetrust/types.hpp"

namespace qoetrust {

/// value in [0,1], confidence in [0,1); confidence is 0 iff no evidence.
struct TrustAssessment {
  double value = 0.5;
  double confidence = 0.0;

  bool operator==(const TrustAssessment&) const = default;
};

/// Manually declared friends and their weights in [0,1].
using FriendMap = std::map<PseudonymId, double>;

struct MetricParams {
  std::uint32_t half_life = 20;
  double rec_prior_pos = 1.0;
  double rec_prior_neg = 3.0;
  double sybil_cap = 5.0;
  bool sybil_cap_enabled = true;
  double confidence_floor = 0.2;

  bool operator==(const MetricParams&) const = default;
};

/// Throws ConfigError naming the offending field.
void validate(const MetricParams& params);

struct AccuracyPair {
  double recommended = 0.0;
  double own = 0.0;
  double weight = 1.0;
};

struct ReputationInput {
  double rating = 0.0;
  PseudonymId recommender;
  double decay = 1.0;
};

/// Beta estimate with a Laplace prior over weighted ratings.
TrustAssessment direct_trust(std::span<const WeightedRating> weighted_obs);

/// Accuracy-based trust in a recommender; accuracy = 1 - |recommended - own|.
/// Newcomers get the configured prior rec_prior_pos / (pos + neg).
TrustAssessment recommender_trust(std::span<const AccuracyPair> pairs,
                                  const MetricParams& params);

/// One recommendation with its recommender already resolved.
struct ResolvedRecommendation {
  double rating = 0.0;
  double decay = 1.0;
  double recommender_trust = 0.0;
  std::optional<double> friend_weight;  // set iff the recommender is a friend
};

/// Core of aggregate_reputation once recommenders have been looked up.
TrustAssessment aggregate_resolved(std::span<const ResolvedRecommendation> recs,
                                   const MetricParams& params);

/// Weighted mean of recommended ratings. Each weight is
/// decay * max(recommender trust, friend weight). The non-friend pool is
/// scaled down proportionally so its total never exceeds sybil_cap; friends
/// are exempt. Recommenders missing from `rec_trusts` get the newcomer prior.
TrustAssessment aggregate_reputation(
    std::span<const ReputationInput> recs,
    const std::map<PseudonymId, TrustAssessment>& rec_trusts,
    const FriendMap& friends, const MetricParams& params);

/// Direct trust blended with reputation, weighted by direct confidence.
double combined_trust(const TrustAssessment& direct,
                      const TrustAssessment& reputation);

}  // namespace qoetrust
