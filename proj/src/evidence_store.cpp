#include "qoetrust/evidence_store.hpp"

#include <algorithm>
#include <cmath>

#include "qoetrust/errors.hpp"

namespace qoetrust {

namespace {

std::string dedup_key(const Recommendation& rec) {
  std::string key = rec.recommender;
  key += '\x1f';
  key += rec.payload.network;
  key += '\x1f';
  key += to_string(rec.payload.context);
  key += '\x1f';
  key += std::to_string(rec.payload.round);
  return key;
}

Round age_of(Round recorded, Round now) {
  return recorded <= now ? now - recorded : 0;
}

}  // namespace

double decayed_weight(Round age_rounds, std::uint32_t half_life) {
  if (half_life == 0) throw ConfigError("half_life must be >= 1");
  // Split into whole half-lives and a remainder so that one extra half-life
  // is an exact power-of-two scaling.
  const Round halvings = age_rounds / half_life;
  const Round remainder = age_rounds % half_life;
  const double fraction = std::exp2(-static_cast<double>(remainder) /
                                    static_cast<double>(half_life));
  return std::ldexp(fraction, -static_cast<int>(std::min<Round>(halvings, 4096)));
}

EvidenceStore::EvidenceStore(std::size_t capacity, std::uint32_t half_life)
    : capacity_(capacity), half_life_(half_life) {
  if (capacity == 0) throw ConfigError("evidence store capacity must be >= 1");
  if (half_life == 0) throw ConfigError("half_life must be >= 1");
}

void EvidenceStore::record_observation(const QoEObservation& obs, Round now) {
  validate_rating(obs.rating);
  if (obs.round > now) {
    throw ValidationError("observation round " + std::to_string(obs.round) +
                          " is after current round " + std::to_string(now));
  }

  for (auto& [key, stored] : received_) {
    const auto& payload = stored.rec.payload;
    if (stored.scored || payload.network != obs.network ||
        payload.context != obs.context || payload.round > obs.round) {
      continue;
    }
    stored.scored = true;
    auto& pairs = rec_history_[stored.rec.recommender];
    pairs.push_back(RecPair{payload.rating, obs.rating, obs.round,
                            obs.network, obs.context});
    if (pairs.size() > kMaxPairsPerRecommender) pairs.erase(pairs.begin());
  }

  observations_.emplace(Key{obs.round, next_seq_++}, obs);
  evict_to_capacity();
}

bool EvidenceStore::ingest_recommendation(const Recommendation& rec,
                                          VerificationVerdict verdict) {
  if (verdict != VerificationVerdict::Verified) {
    ++rejected_;
    return false;
  }
  validate_rating(rec.payload.rating);
  if (!seen_.insert(dedup_key(rec)).second) {
    ++duplicates_;
    return true;
  }
  received_.emplace(Key{rec.payload.round, next_seq_++},
                    StoredRecommendation{rec, false});
  evict_to_capacity();
  return true;
}

std::vector<WeightedRating> EvidenceStore::query_observations(
    const NetworkId& network, std::optional<AppContext> context, Round now,
    std::uint32_t half_life) const {
  std::vector<WeightedRating> out;
  for (const auto& [key, obs] : observations_) {
    if (obs.network == network && (!context || obs.context == *context)) {
      out.push_back({obs.rating, decayed_weight(age_of(obs.round, now), half_life)});
    }
  }
  return out;
}

std::vector<const Recommendation*> EvidenceStore::received_matching(
    const NetworkId& network, std::optional<AppContext> context) const {
  std::vector<const Recommendation*> out;
  for (const auto& [key, stored] : received_) {
    if (stored.rec.payload.network == network &&
        (!context || stored.rec.payload.context == *context)) {
      out.push_back(&stored.rec);
    }
  }
  return out;
}

std::size_t EvidenceStore::prune(Round now, double min_weight) {
  // Weight only falls with age, so the survivors are exactly the records at
  // or after some cutoff round. Binary search for it.
  Round lo = 0;
  Round hi = now + 1;  // rounds after `now` have age 0 and always survive
  while (lo < hi) {
    const Round mid = lo + (hi - lo) / 2;
    if (decayed_weight(age_of(mid, now), half_life_) < min_weight) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  const Round cutoff = lo;
  const Key first_kept{cutoff, 0};
  std::size_t removed = 0;
  const auto obs_end = observations_.lower_bound(first_kept);
  removed += static_cast<std::size_t>(std::distance(observations_.begin(), obs_end));
  observations_.erase(observations_.begin(), obs_end);
  const auto rec_end = received_.lower_bound(first_kept);
  removed += static_cast<std::size_t>(std::distance(received_.begin(), rec_end));
  received_.erase(received_.begin(), rec_end);
  for (auto it = rec_history_.begin(); it != rec_history_.end();) {
    std::erase_if(it->second, [&](const RecPair& p) { return p.round < cutoff; });
    it = it->second.empty() ? rec_history_.erase(it) : std::next(it);
  }
  return removed;
}

void EvidenceStore::evict_to_capacity() {
  while (size() > capacity_) {
    const bool obs_first =
        !observations_.empty() &&
        (received_.empty() || observations_.begin()->first < received_.begin()->first);
    if (obs_first) {
      observations_.erase(observations_.begin());
    } else {
      received_.erase(received_.begin());
    }
    ++evicted_;
  }
}

}  // namespace qoetrust
