#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "doctest.h"
#include "qoetrust/errors.hpp"
#include "qoetrust/evidence_store.hpp"

using namespace qoetrust;

namespace {

QoEObservation obs(const std::string& net, double rating, Round round,
                   AppContext ctx = AppContext::browsing) {
  return QoEObservation{"me", net, ctx, rating, round};
}

Recommendation rec_from(const std::string& who, const std::string& net, double rating,
                        Round round, AppContext ctx = AppContext::browsing) {
  return Recommendation{QoEObservation{who, net, ctx, rating, round}, who, "key:" + who, 0};
}

}  // namespace

TEST_CASE("decayed_weight table") {
  CHECK(decayed_weight(0, 20) == 1.0);
  CHECK(decayed_weight(20, 20) == 0.5);
  CHECK(decayed_weight(40, 20) == 0.25);
  CHECK(decayed_weight(1, 1) == 0.5);
  CHECK_THROWS_AS(decayed_weight(5, 0), ConfigError);
}

TEST_CASE("decayed_weight halves exactly and strictly decreases") {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<Round> age_dist(0, 5000);
  std::uniform_int_distribution<std::uint32_t> h_dist(1, 200);
  for (int i = 0; i < 10000; ++i) {
    const Round a = age_dist(gen);
    const std::uint32_t h = h_dist(gen);
    const double w = decayed_weight(a, h);
    CHECK(decayed_weight(a + h, h) == w / 2.0);
    CHECK(w <= 1.0);
    // Past roughly 1074 half-lives the value underflows to zero in double.
    if (a / h < 1000) CHECK(w > 0.0);
    // Strict decrease holds as long as the value has not underflowed.
    if (w > std::numeric_limits<double>::min()) {
      CHECK(decayed_weight(a + 1, h) < w);
    }
  }
}

TEST_CASE("record_observation basics") {
  EvidenceStore store(10, 20);
  store.record_observation(obs("net-a", 0.7, 0), 0);
  CHECK(store.size() == 1);
  CHECK_THROWS_AS(store.record_observation(obs("net-a", 1.5, 0), 0), ValidationError);
  CHECK_THROWS_AS(store.record_observation(obs("net-a", -0.1, 0), 0), ValidationError);
  CHECK_THROWS_AS(
      store.record_observation(obs("net-a", std::numeric_limits<double>::quiet_NaN(), 0), 0),
      ValidationError);
  CHECK_THROWS_AS(store.record_observation(obs("net-a", 0.5, 3), 2), ValidationError);
  CHECK(store.size() == 1);
}

TEST_CASE("constructor rejects zero capacity and zero half-life") {
  CHECK_THROWS_AS(EvidenceStore(0, 20), ConfigError);
  CHECK_THROWS_AS(EvidenceStore(10, 0), ConfigError);
}

TEST_CASE("eviction removes the argmin decayed weight") {
  // Ten old records at assorted rounds, then one fresh record at capacity.
  const Round now = 120;
  const std::vector<Round> rounds = {15, 12, 20, 12, 18, 25, 13, 16, 19, 14};
  EvidenceStore store(10, 20);
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    store.record_observation(obs("net-" + std::to_string(i), 0.5, rounds[i]), now);
  }
  REQUIRE(store.size() == 10);

  // Oracle: enumerate every record's weight; argmin, ties to the earlier insert.
  std::size_t argmin = 0;
  for (std::size_t i = 1; i < rounds.size(); ++i) {
    if (decayed_weight(now - rounds[i], 20) < decayed_weight(now - rounds[argmin], 20)) {
      argmin = i;
    }
  }
  CHECK(argmin == 1);  // round 12 inserted before the other round-12 record

  store.record_observation(obs("net-new", 0.5, now), now);
  CHECK(store.size() == 10);
  CHECK(store.evicted_count() == 1);
  std::set<std::string> left;
  for (const auto& [key, o] : store.observations()) left.insert(o.network);
  CHECK(left.count("net-" + std::to_string(argmin)) == 0);
  CHECK(left.count("net-3") == 1);
  CHECK(left.count("net-new") == 1);
}

TEST_CASE("size never exceeds capacity under mixed inserts") {
  std::mt19937_64 gen(7);
  EvidenceStore store(25, 5);
  for (Round r = 0; r < 400; ++r) {
    if (gen() % 2 == 0) {
      store.record_observation(obs("net-a", 0.25, r), r);
    } else {
      store.ingest_recommendation(rec_from("p" + std::to_string(gen() % 50), "net-a", 0.5, r),
                                  VerificationVerdict::Verified);
    }
    CHECK(store.size() <= store.capacity());
  }
}

TEST_CASE("ingest accepts exactly the verified recommendations") {
  EvidenceStore store(100, 20);
  CHECK(store.ingest_recommendation(rec_from("a", "net-a", 0.9, 0),
                                    VerificationVerdict::Verified));
  CHECK(store.received().size() == 1);
  CHECK_FALSE(store.ingest_recommendation(rec_from("b", "net-a", 0.9, 0),
                                          VerificationVerdict::SpoofRejected));
  CHECK(store.received().size() == 1);
  CHECK(store.rejected_count() == 1);

  // A compromised key still yields Verified upstream, so the store keeps it.
  CHECK(store.ingest_recommendation(rec_from("victim", "net-a", 1.0, 0),
                                    VerificationVerdict::Verified));
  CHECK(store.received().size() == 2);

  // Duplicate payload: accepted, not stored twice.
  CHECK(store.ingest_recommendation(rec_from("a", "net-a", 0.9, 0),
                                    VerificationVerdict::Verified));
  CHECK(store.received().size() == 2);
  CHECK(store.duplicate_count() == 1);
}

TEST_CASE("ingest property: stored count tracks verified verdicts") {
  std::mt19937_64 gen(99);
  EvidenceStore store(20000, 20);
  std::size_t verified = 0;
  std::size_t rejected = 0;
  for (int i = 0; i < 10000; ++i) {
    const int kind = static_cast<int>(gen() % 3);  // 0 verified, 1 spoofed, 2 compromised key
    const auto verdict =
        kind == 1 ? VerificationVerdict::SpoofRejected : VerificationVerdict::Verified;
    auto rec = rec_from("p" + std::to_string(i), "net-a",
                        static_cast<double>(gen() % 1001) / 1000.0, 0);
    if (kind == 2) rec.claimed_key = "key:stolen";
    const bool accepted = store.ingest_recommendation(rec, verdict);
    CHECK(accepted == (verdict == VerificationVerdict::Verified));
    (accepted ? verified : rejected) += 1;
  }
  CHECK(store.received().size() == verified);
  CHECK(store.rejected_count() == rejected);
}

TEST_CASE("query_observations returns decayed weights") {
  EvidenceStore store(10, 20);
  CHECK(store.query_observations("net-a", AppContext::browsing, 0, 20).empty());
  store.record_observation(obs("net-a", 0.6, 20), 20);
  auto one = store.query_observations("net-a", AppContext::browsing, 20, 20);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == WeightedRating{0.6, 1.0});

  store.record_observation(obs("net-a", 0.4, 40), 40);
  store.record_observation(obs("net-a", 0.9, 40, AppContext::banking), 40);
  auto two = store.query_observations("net-a", AppContext::browsing, 40, 20);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == WeightedRating{0.6, 0.5});
  CHECK(two[1] == WeightedRating{0.4, 1.0});
  CHECK(store.query_observations("net-a", std::nullopt, 40, 20).size() == 3);
  CHECK(store.query_observations("net-b", std::nullopt, 40, 20).empty());
}

TEST_CASE("prune drops records below the weight floor") {
  EvidenceStore empty(10, 20);
  CHECK(empty.prune(100, 0.3) == 0);

  EvidenceStore fresh(10, 20);
  fresh.record_observation(obs("net-a", 0.5, 5), 5);
  CHECK(fresh.prune(5, 0.3) == 0);

  EvidenceStore store(10, 20);
  store.record_observation(obs("net-a", 0.5, 0), 0);  // age 40 at round 40 -> 0.25
  store.record_observation(obs("net-a", 0.5, 30), 30);
  store.ingest_recommendation(rec_from("x", "net-a", 0.5, 0), VerificationVerdict::Verified);
  CHECK(store.prune(40, 0.3) == 2);
  CHECK(store.size() == 1);
  for (const auto& [key, o] : store.observations()) {
    CHECK(decayed_weight(40 - o.round, 20) >= 0.3);
  }
}

TEST_CASE("prune agrees with a per-record weight check") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::uint32_t h = 1 + static_cast<std::uint32_t>(gen() % 30);
    EvidenceStore store(1000, h);
    const Round now = 300;
    std::size_t expected_removed = 0;
    const double floor = 0.001 + static_cast<double>(gen() % 900) / 1000.0;
    for (int i = 0; i < 40; ++i) {
      const Round r = static_cast<Round>(gen() % (now + 1));
      store.record_observation(obs("net-a", 0.5, r), now);
      if (decayed_weight(now - r, h) < floor) ++expected_removed;
    }
    CHECK(store.prune(now, floor) == expected_removed);
  }
}

TEST_CASE("pairs form only for the same network and context") {
  EvidenceStore store(100, 20);
  store.ingest_recommendation(rec_from("r1", "net-a", 0.9, 1), VerificationVerdict::Verified);
  store.ingest_recommendation(rec_from("r2", "net-a", 0.9, 1, AppContext::gaming),
                              VerificationVerdict::Verified);
  store.ingest_recommendation(rec_from("r3", "net-b", 0.9, 1), VerificationVerdict::Verified);
  store.ingest_recommendation(rec_from("r4", "net-a", 0.9, 5), VerificationVerdict::Verified);
  store.record_observation(obs("net-a", 0.3, 2), 2);

  const auto& history = store.rec_history();
  REQUIRE(history.size() == 1);
  REQUIRE(history.count("r1") == 1);
  const auto& pair = history.at("r1").front();
  CHECK(pair.recommended == 0.9);
  CHECK(pair.own == 0.3);
  CHECK(pair.network == "net-a");
  CHECK(pair.context == AppContext::browsing);

  // A recommendation is scored once only.
  store.record_observation(obs("net-a", 0.4, 3), 3);
  CHECK(store.rec_history().at("r1").size() == 1);
}

TEST_CASE("wire record carries exactly the pseudonymous schema") {
  const Recommendation rec{QoEObservation{"peer-007", "net-c", AppContext::streaming, 0.75, 12},
                           "peer-007", "key:peer-007", 1};
  const auto wire = to_wire(rec);
  std::vector<std::string> keys;
  for (const auto& item : wire.items()) keys.push_back(item.key());
  CHECK(keys == std::vector<std::string>{"recommender_id", "claimed_key", "network_id",
                                         "context", "rating", "round", "hop_count"});
  CHECK(wire.dump() ==
        R"({"recommender_id":"peer-007","claimed_key":"key:peer-007","network_id":"net-c",)"
        R"("context":"streaming","rating":0.75,"round":12,"hop_count":1})");
  CHECK(from_wire(wire) == rec);

  auto extra = wire;
  extra["home_address"] = "somewhere";
  CHECK_THROWS_AS(from_wire(extra), ValidationError);
  auto missing = wire;
  missing.erase("hop_count");
  CHECK_THROWS_AS(from_wire(missing), ValidationError);
}

TEST_CASE("context names round-trip") {
  for (const auto ctx : kAllContexts) {
    CHECK(parse_context(to_string(ctx)) == ctx);
  }
  CHECK_FALSE(parse_context("email").has_value());
}
