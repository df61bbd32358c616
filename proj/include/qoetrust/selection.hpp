#pragma once

#include <optional>
#include <span>

#include "qoetrust/risk.hpp"
#include "qoetrust/types.hpp"

namespace qoetrust {

struct Candidate {
  NetworkIdentity network;
  double trust = 0.0;  // combined trust in [0,1]
  Decision decision;
};

/// trust - lambda * cost. May be negative; only used for ranking.
double score(double trust, double cost, double lambda);

/// Highest-scoring Granted candidate, ties broken by ascending authentic id.
/// std::nullopt means no candidate is acceptable and the peer sits the
/// round out.
std::optional<NetworkId> select(std::span<const Candidate> candidates,
                                double lambda);

}  // namespace qoetrust
