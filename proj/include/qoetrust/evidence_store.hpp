#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <unordered_set>
#include <utility>
#include <vector>

#include "qoetrust/types.hpp"

namespace qoetrust {

/// 2^(-age/half_life). Exact halving: decayed_weight(a + h, h) equals
/// decayed_weight(a, h) / 2 bit for bit. Throws ConfigError on half_life 0.
double decayed_weight(Round age_rounds, std::uint32_t half_life);

struct WeightedRating {
  double rating = 0.0;
  double weight = 0.0;

  bool operator==(const WeightedRating&) const = default;
};

/// A recommendation that was later checked against our own experience of the
/// same network in the same context.
struct RecPair {
  double recommended = 0.0;
  double own = 0.0;
  Round round = 0;  // round of the own observation
  NetworkId network;
  AppContext context = AppContext::browsing;
};

struct StoredRecommendation {
  Recommendation rec;
  bool scored = false;  // already turned into a RecPair
};

/// Per-peer evidence: own observations, accepted recommendations and the
/// recommendation-accuracy history built from them.
///
/// Capacity bounds observations + received recommendations together. When it
/// is exceeded the record with the lowest decayed weight (the oldest round;
/// earliest insertion on ties) is evicted. The accuracy history is bounded
/// separately, per recommender.
class EvidenceStore {
 public:
  using Key = std::pair<Round, std::uint64_t>;  // (round, insertion seq)

  static constexpr std::size_t kMaxPairsPerRecommender = 256;

  EvidenceStore(std::size_t capacity, std::uint32_t half_life);

  /// Appends `obs` and scores every unscored received recommendation about
  /// the same (network, context). Throws ValidationError on a bad rating or
  /// an observation from the future.
  void record_observation(const QoEObservation& obs, Round now);

  /// Stores `rec` iff `verdict` is Verified. Rejections are counted only.
  /// A verified duplicate (same recommender, network, context and round) is
  /// accepted but not stored twice.
  bool ingest_recommendation(const Recommendation& rec,
                             VerificationVerdict verdict);

  /// Own observations of `network` with their decayed weights. A context
  /// restricts the result to that context; std::nullopt pools all contexts.
  std::vector<WeightedRating> query_observations(const NetworkId& network,
                                                 std::optional<AppContext> context,
                                                 Round now,
                                                 std::uint32_t half_life) const;

  std::vector<const Recommendation*> received_matching(
      const NetworkId& network, std::optional<AppContext> context) const;

  /// Drops every record (and accuracy pair) whose decayed weight is below
  /// `min_weight`; returns the number of records removed.
  std::size_t prune(Round now, double min_weight);

  /// Removes received recommendations matching `pred`, visited in
  /// (round, insertion) order. Returns the number removed.
  template <typename Pred>
  std::size_t erase_received_if(Pred pred) {
    return std::erase_if(received_,
                         [&](const auto& item) { return pred(item.second.rec); });
  }

  const std::map<Key, QoEObservation>& observations() const noexcept {
    return observations_;
  }
  const std::map<Key, StoredRecommendation>& received() const noexcept {
    return received_;
  }
  const std::map<PseudonymId, std::vector<RecPair>>& rec_history()
      const noexcept {
    return rec_history_;
  }

  std::size_t size() const noexcept {
    return observations_.size() + received_.size();
  }
  std::size_t capacity() const noexcept { return capacity_; }
  std::uint32_t half_life() const noexcept { return half_life_; }
  std::uint64_t rejected_count() const noexcept { return rejected_; }
  std::uint64_t duplicate_count() const noexcept { return duplicates_; }
  std::uint64_t evicted_count() const noexcept { return evicted_; }

 private:
  void evict_to_capacity();

  std::size_t capacity_;
  std::uint32_t half_life_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t rejected_ = 0;
  std::uint64_t duplicates_ = 0;
  std::uint64_t evicted_ = 0;
  std::map<Key, QoEObservation> observations_;
  std::map<Key, StoredRecommendation> received_;
  std::map<PseudonymId, std::vector<RecPair>> rec_history_;
  std::unordered_set<std::string> seen_;
};

}  // namespace qoetrust
