// Full-market discrete-event simulator. Tracks both High and Low queues,
// validates the reduced chains empirically, and checks queue-structure
// invariants the reduced state cannot express. The market step functions are
// written against the full state on purpose: the simulator replays every
// period through the reduced policy step and fails hard on any disagreement.
#pragma once

#include <random>
#include <sstream>

#include "matchq/chain.hpp"
#include "matchq/core.hpp"
#include "matchq/policy.hpp"

namespace matchq::mc {

// Full market state of the three-way assortative process.
struct MarketState {
  std::array<int, 3> high{0, 0, 0};
  std::array<int, 3> low{0, 0, 0};
};

// Full market state of the dis-assortative process: waiting same-type
// triplets (at most one of the two counts is nonzero).
struct TripletInventory {
  int high_triplets = 0;
  int low_triplets = 0;
};

// Assortative market step, independent of policy::assortative_step:
// arrivals join their queues, all-High teams leave, a threshold breach
// forces one team (preferring waiting Highs for the open slots), then
// all-Low teams form greedily.
inline std::pair<MarketState, policy::TeamReport> assortative_market_step(const MarketState& s,
                                                                          const ArrivalTriplet& t,
                                                                          int kbar) {
  MarketState n = s;
  policy::TeamReport report;
  const std::array<int, 3> pre_high = s.high;
  const std::array<int, 3> pre_low = s.low;

  for (int i = 0; i < 3; ++i) {
    (t.types[i] == Type::High ? n.high[i] : n.low[i]) += 1;
  }

  const int m = *std::min_element(n.high.begin(), n.high.end());
  std::array<int, 3> high_used{};
  for (int k = 0; k < m; ++k) {
    policy::Team team;
    for (int i = 0; i < 3; ++i) {
      team.members.push_back({Type::High, high_used[i] < pre_high[i]});
      ++high_used[i];
    }
    report.teams.push_back(std::move(team));
  }
  for (int i = 0; i < 3; ++i) n.high[i] -= m;

  if (*std::max_element(n.high.begin(), n.high.end()) > kbar) {
    policy::Team team;
    team.forced = true;
    for (int i = 0; i < 3; ++i) {
      if (n.high[i] > kbar) {
        team.members.push_back({Type::High, false});
        --n.high[i];
      } else if (n.high[i] > 0) {
        team.members.push_back({Type::High, high_used[i] < pre_high[i]});
        --n.high[i];
      } else {
        team.members.push_back({Type::Low, t.types[i] != Type::Low});
        --n.low[i];
      }
    }
    report.teams.push_back(std::move(team));
  }

  const int m2 = *std::min_element(n.low.begin(), n.low.end());
  std::array<int, 3> low_used{};
  for (int k = 0; k < m2; ++k) {
    policy::Team team;
    for (int i = 0; i < 3; ++i) {
      team.members.push_back({Type::Low, low_used[i] < pre_low[i]});
      ++low_used[i];
    }
    report.teams.push_back(std::move(team));
  }
  for (int i = 0; i < 3; ++i) n.low[i] -= m2;

  return {n, std::move(report)};
}

// Dis-assortative market step: mixed teams form first (they are the
// preferred compositions), same-type triplets queue, thresholds force
// same-type teams.
inline std::pair<TripletInventory, policy::TeamReport> disassortative_market_step(
    const TripletInventory& s, const ArrivalTriplet& t, int k_high, int k_low) {
  TripletInventory n = s;
  policy::TeamReport report;
  const int highs = t.high_count();

  const auto mixed = [&](std::array<Type, 3> types, std::array<bool, 3> queued) {
    policy::Team team;
    for (int i = 0; i < 3; ++i) team.members.push_back({types[i], queued[i]});
    return team;
  };

  // population indices: lone = the population whose arrival type differs
  int lone = -1;
  for (int i = 0; i < 3; ++i) {
    const bool is_high = t.types[i] == Type::High;
    if ((highs == 1 && is_high) || (highs == 2 && !is_high)) lone = i;
  }

  switch (highs) {
    case 3:
      if (n.low_triplets > 0) {
        // two arriving Highs pair with a queued Low; the third High joins
        // the two remaining queued Lows
        --n.low_triplets;
        report.teams.push_back(mixed({Type::High, Type::High, Type::Low}, {false, false, true}));
        report.teams.push_back(mixed({Type::Low, Type::Low, Type::High}, {true, true, false}));
      } else if (n.high_triplets < k_high) {
        ++n.high_triplets;
      } else {
        policy::Team team;
        team.forced = true;
        for (int i = 0; i < 3; ++i) team.members.push_back({Type::High, false});
        report.teams.push_back(std::move(team));
      }
      break;
    case 0:
      if (n.high_triplets > 0) {
        --n.high_triplets;
        report.teams.push_back(mixed({Type::Low, Type::Low, Type::High}, {false, false, true}));
        report.teams.push_back(mixed({Type::High, Type::High, Type::Low}, {true, true, false}));
      } else if (n.low_triplets < k_low) {
        ++n.low_triplets;
      } else {
        policy::Team team;
        team.forced = true;
        for (int i = 0; i < 3; ++i) team.members.push_back({Type::Low, false});
        report.teams.push_back(std::move(team));
      }
      break;
    case 2:
      if (n.low_triplets > 0) {
        // each arriving High anchors its own single-High team; the queued
        // Low triplet fills the remaining slots
        --n.low_triplets;
        int first = -1, second = -1;
        for (int i = 0; i < 3; ++i) {
          if (t.types[i] == Type::High) (first < 0 ? first : second) = i;
        }
        std::array<Type, 3> t1{}, t2{};
        std::array<bool, 3> q1{}, q2{};
        t1[static_cast<std::size_t>(first)] = Type::High;
        t1[static_cast<std::size_t>(second)] = Type::Low;
        q1[static_cast<std::size_t>(second)] = true;
        t1[static_cast<std::size_t>(lone)] = Type::Low;
        t2[static_cast<std::size_t>(first)] = Type::Low;
        q2[static_cast<std::size_t>(first)] = true;
        t2[static_cast<std::size_t>(second)] = Type::High;
        t2[static_cast<std::size_t>(lone)] = Type::Low;
        q2[static_cast<std::size_t>(lone)] = true;
        report.teams.push_back(mixed(t1, q1));
        report.teams.push_back(mixed(t2, q2));
      } else {
        report.teams.push_back(mixed({t.types[0], t.types[1], t.types[2]}, {false, false, false}));
      }
      break;
    default: {  // highs == 1
      if (n.high_triplets > 0) {
        --n.high_triplets;
        int first = -1, second = -1;
        for (int i = 0; i < 3; ++i) {
          if (t.types[i] == Type::Low) (first < 0 ? first : second) = i;
        }
        std::array<Type, 3> t1{}, t2{};
        std::array<bool, 3> q1{}, q2{};
        t1[static_cast<std::size_t>(lone)] = Type::High;
        t1[static_cast<std::size_t>(first)] = Type::High;
        q1[static_cast<std::size_t>(first)] = true;
        t1[static_cast<std::size_t>(second)] = Type::Low;
        t2[static_cast<std::size_t>(lone)] = Type::High;
        q2[static_cast<std::size_t>(lone)] = true;
        t2[static_cast<std::size_t>(first)] = Type::Low;
        t2[static_cast<std::size_t>(second)] = Type::High;
        q2[static_cast<std::size_t>(second)] = true;
        report.teams.push_back(mixed(t1, q1));
        report.teams.push_back(mixed(t2, q2));
      } else {
        report.teams.push_back(mixed({t.types[0], t.types[1], t.types[2]}, {false, false, false}));
      }
      break;
    }
  }

  return {n, std::move(report)};
}

// Two-way market step on the signed queue. Implied side queues: k > 0 means
// k waiting H and k waiting l; k < 0 means |k| waiting h and |k| waiting L.
inline std::pair<SignedQueueState, policy::TeamReport> twoway_market_step(const SignedQueueState& s,
                                                                          const ArrivalPair& pr,
                                                                          int kbar) {
  const int k = s.k;
  policy::TeamReport report;
  SignedQueueState next = s;

  const auto pair_team = [&](Type t1, Type t2, bool q1, bool q2, bool forced = false) {
    policy::Team team;
    team.members.push_back({t1, q1});
    team.members.push_back({t2, q2});
    team.forced = forced;
    report.teams.push_back(std::move(team));
  };

  const bool h1 = pr.types[0] == Type::High;
  const bool h2 = pr.types[1] == Type::High;
  if (h1 && h2) {
    pair_team(Type::High, Type::High, false, false);  // (H,h)
  } else if (!h1 && !h2) {
    pair_team(Type::Low, Type::Low, false, false);  // (L,l)
  } else if (h1) {            // (H,l)
    if (k < 0) {
      pair_team(Type::High, Type::High, false, true);  // H with queued h
      pair_team(Type::Low, Type::Low, true, false);    // queued L with l
      next.k = k + 1;
    } else if (k == kbar) {
      pair_team(Type::High, Type::Low, false, false, true);  // forced (H,l)
    } else {
      next.k = k + 1;  // both wait
    }
  } else {                    // (L,h)
    if (k > 0) {
      pair_team(Type::High, Type::High, true, false);
      pair_team(Type::Low, Type::Low, false, true);
      next.k = k - 1;
    } else if (k == -kbar) {
      pair_team(Type::Low, Type::High, false, false, true);  // forced (L,h)
    } else {
      next.k = k - 1;
    }
  }
  return {next, std::move(report)};
}

// ---------------------------------------------------------------------------
// Simulation

struct SimulationReport {
  ChainParams params;
  long long steps = 0;
  long long burn_in = 0;
  std::uint64_t seed = 0;
  std::vector<long long> occupancy;  // visit counts aligned to the canonical state list
  std::map<std::string, long long> team_counts;  // composition -> teams formed after burn-in
  StationaryDistribution empirical;
};

inline StationaryDistribution empirical_distribution(const SimulationReport& report) {
  const long long total = report.steps - report.burn_in;
  if (total <= 0) throw std::invalid_argument("empirical_distribution: no recorded steps");
  StationaryDistribution dist;
  dist.method = SolveMethod::Empirical;
  dist.probs.resize(report.occupancy.size());
  for (std::size_t i = 0; i < report.occupancy.size(); ++i) {
    dist.probs[i] = static_cast<double>(report.occupancy[i]) / static_cast<double>(total);
  }
  return dist;
}

// Portable seeded arrival source: mt19937_64, one draw per population per
// period in population order; a member is High when the top-53-bit uniform
// is below p.
class ArrivalSampler {
 public:
  explicit ArrivalSampler(std::uint64_t seed) : eng_(seed) {}

  Type draw(Probability p) {
    const double u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    return u < p.p() ? Type::High : Type::Low;
  }

  ArrivalTriplet triplet(Probability p) {
    return ArrivalTriplet{{draw(p), draw(p), draw(p)}};
  }
  ArrivalPair pair(Probability p) {
    return ArrivalPair{{draw(p), draw(p)}};
  }

 private:
  std::mt19937_64 eng_;
};

namespace detail {

[[noreturn]] inline void fail(const char* what, long long period, const std::string& trace) {
  throw SimulationInvariantError(std::string("simulation invariant violated: ") + what +
                                     " at period " + std::to_string(period),
                                 period, trace);
}

inline std::string trace_assortative(long long period, const MarketState& before,
                                     const ArrivalTriplet& t, const MarketState& after) {
  std::ostringstream os;
  os << "period " << period << ": high=(" << before.high[0] << "," << before.high[1] << ","
     << before.high[2] << ") low=(" << before.low[0] << "," << before.low[1] << "," << before.low[2]
     << ") arrival=" << to_char(t.types[0]) << to_char(t.types[1]) << to_char(t.types[2])
     << " -> high=(" << after.high[0] << "," << after.high[1] << "," << after.high[2] << ") low=("
     << after.low[0] << "," << after.low[1] << "," << after.low[2] << ")";
  return os.str();
}

}  // namespace detail

// Runs the full-market process and records post-step reduced states after
// burn-in. Every period is cross-checked against the reduced policy step and
// the queue-structure invariants; any violation throws with the offending
// period's trace.
inline SimulationReport simulate(ChainKind kind, Probability p, ThresholdConfig thresholds,
                                 long long steps, long long burn_in, std::uint64_t seed) {
  if (steps <= burn_in || burn_in < 0) {
    throw std::invalid_argument("simulate: need steps > burn_in >= 0");
  }

  SimulationReport report;
  report.params = ChainParams{kind, p, thresholds};
  report.steps = steps;
  report.burn_in = burn_in;
  report.seed = seed;
  ArrivalSampler rng(seed);

  const auto record_team = [&](const policy::Team& team, long long period) {
    if (period > burn_in) ++report.team_counts[team.composition()];
  };

  switch (kind) {
    case ChainKind::Assortative: {
      const int kbar = thresholds.k_bar;
      const auto states = chain::enumerate_assortative_states(kbar);
      report.occupancy.assign(states.size(), 0);
      MarketState market;
      for (long long period = 1; period <= steps; ++period) {
        const ArrivalTriplet t = rng.triplet(p);
        const MarketState before = market;
        auto [after, teams] = assortative_market_step(market, t, kbar);

        // reduced-chain projection must agree with the policy step
        const auto reduced =
            policy::assortative_step(AssortativeState{before.high}, t, kbar).first;
        const std::string trace = detail::trace_assortative(period, before, t, after);
        if (reduced.a != after.high) detail::fail("projection consistency", period, trace);
        if (*std::min_element(after.high.begin(), after.high.end()) != 0)
          detail::fail("min(high) == 0", period, trace);
        if (*std::max_element(after.high.begin(), after.high.end()) > kbar)
          detail::fail("max(high) <= kbar", period, trace);
        const int total0 = after.high[0] + after.low[0];
        for (int i = 0; i < 3; ++i) {
          if (after.high[i] + after.low[i] != total0)
            detail::fail("balanced queues", period, trace);
          if (after.low[i] < 0) detail::fail("low queue non-negative", period, trace);
        }
        const int maxh = *std::max_element(after.high.begin(), after.high.end());
        for (int i = 0; i < 3; ++i) {
          if (after.low[i] != maxh - after.high[i])
            detail::fail("low_i == max(high) - high_i", period, trace);
        }
        // member conservation: teams consume one member per population
        const int formed = static_cast<int>(teams.teams.size());
        for (int i = 0; i < 3; ++i) {
          const int delta = (before.high[i] + before.low[i]) + 1 - (after.high[i] + after.low[i]);
          if (delta != formed) detail::fail("team member conservation", period, trace);
        }
        for (const auto& team : teams.teams) {
          if (static_cast<int>(team.members.size()) != 3)
            detail::fail("one member per population", period, trace);
          if (team.forced && team.high_count() == 0)
            detail::fail("forced team without a High", period, trace);
          record_team(team, period);
        }

        market = after;
        if (period > burn_in) {
          ++report.occupancy[static_cast<std::size_t>(
              std::lower_bound(states.begin(), states.end(), AssortativeState{market.high}) -
              states.begin())];
        }
      }
      break;
    }
    case ChainKind::Disassortative: {
      const int kh = thresholds.k_high;
      const int kl = thresholds.k_low;
      report.occupancy.assign(static_cast<std::size_t>(kh + kl + 1), 0);
      TripletInventory market;
      for (long long period = 1; period <= steps; ++period) {
        const ArrivalTriplet t = rng.triplet(p);
        const TripletInventory before = market;
        auto [after, teams] = disassortative_market_step(market, t, kh, kl);

        std::ostringstream os;
        os << "period " << period << ": (kH=" << before.high_triplets
           << ", kL=" << before.low_triplets << ") arrival=" << to_char(t.types[0])
           << to_char(t.types[1]) << to_char(t.types[2]) << " -> (kH=" << after.high_triplets
           << ", kL=" << after.low_triplets << ")";
        const std::string trace = os.str();

        const auto reduced = policy::disassortative_step(
            SignedQueueState{before.high_triplets - before.low_triplets}, t, kh, kl);
        if (reduced.k != after.high_triplets - after.low_triplets)
          detail::fail("projection consistency", period, trace);
        if (after.high_triplets < 0 || after.low_triplets < 0 ||
            (after.high_triplets > 0 && after.low_triplets > 0))
          detail::fail("one-sided inventory", period, trace);
        if (after.high_triplets > kh || after.low_triplets > kl)
          detail::fail("threshold bounds", period, trace);
        const int formed = static_cast<int>(teams.teams.size());
        const int pre_units = before.high_triplets + before.low_triplets;
        const int post_units = after.high_triplets + after.low_triplets;
        if (pre_units + 1 - post_units != formed)
          detail::fail("team member conservation", period, trace);
        for (const auto& team : teams.teams) {
          if (static_cast<int>(team.members.size()) != 3)
            detail::fail("one member per population", period, trace);
          record_team(team, period);
        }

        market = after;
        if (period > burn_in) {
          ++report.occupancy[static_cast<std::size_t>(market.high_triplets -
                                                      market.low_triplets + kl)];
        }
      }
      break;
    }
    case ChainKind::TwoWay: {
      const int kbar = thresholds.k_bar;
      report.occupancy.assign(static_cast<std::size_t>(2 * kbar + 1), 0);
      SignedQueueState market{0};
      for (long long period = 1; period <= steps; ++period) {
        const ArrivalPair pr = rng.pair(p);
        const SignedQueueState before = market;
        auto [after, teams] = twoway_market_step(market, pr, kbar);

        std::ostringstream os;
        os << "period " << period << ": k=" << before.k << " arrival=" << to_char(pr.types[0])
           << static_cast<char>(to_char(pr.types[1]) - 'A' + 'a') << " -> k=" << after.k;
        const std::string trace = os.str();

        const auto reduced = policy::twoway_step(before, pr, kbar);
        if (reduced.k != after.k) detail::fail("projection consistency", period, trace);
        if (after.k < -kbar || after.k > kbar) detail::fail("threshold bounds", period, trace);
        const int formed = static_cast<int>(teams.teams.size());
        if (std::abs(before.k) + 1 - std::abs(after.k) != formed)
          detail::fail("team member conservation", period, trace);
        for (const auto& team : teams.teams) {
          if (static_cast<int>(team.members.size()) != 2)
            detail::fail("one member per population", period, trace);
          record_team(team, period);
        }

        market = after;
        if (period > burn_in) ++report.occupancy[static_cast<std::size_t>(market.k + kbar)];
      }
      break;
    }
  }

  report.empirical = empirical_distribution(report);
  return report;
}

}  // namespace matchq::mc
