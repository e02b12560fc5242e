// One-period matching step functions. Each policy is a pure function
// state x arrival -> state from which the transition matrices are generated
// mechanically; the displayed matrices in the source model are used as test
// oracles only.
#pragma once

#include <numeric>
#include <sstream>
#include <utility>

#include "matchq/core.hpp"

namespace matchq::policy {

struct TeamMember {
  Type type = Type::Low;
  bool from_queue = false;  // waiting before this period's arrival
};

// One formed team: exactly one member per population slot.
struct Team {
  std::vector<TeamMember> members;  // size 3 (triplet chains) or 2 (two-way)
  bool forced = false;              // threshold-triggered

  int high_count() const {
    int n = 0;
    for (const auto& m : members) n += (m.type == Type::High);
    return n;
  }

  // Canonical composition key: triples sorted descending ("HHL"); pairs keep
  // population order with population 2 lowercased ("Hl").
  std::string composition() const {
    std::string s;
    for (const auto& m : members) s.push_back(to_char(m.type));
    if (members.size() == 3) {
      std::sort(s.begin(), s.end());  // 'H' < 'L'
    } else if (members.size() == 2) {
      s[1] = static_cast<char>(s[1] - 'A' + 'a');
    }
    return s;
  }
};

struct TeamReport {
  std::vector<Team> teams;

  int count(const std::string& composition) const {
    int n = 0;
    for (const auto& t : teams) n += (t.composition() == composition);
    return n;
  }
};

// Three-way assortative step, three phases:
//   1. arriving Highs join their queues (arriving Lows are not part of this
//      reduced state; see montecarlo for the full-market bookkeeping),
//   2. all-High teams: min(a) teams, subtracted from every coordinate,
//   3. threshold enforcement: if any queue exceeds kbar (excess is at most 1
//      per population), exactly one forced team is formed; populations over
//      the threshold contribute a High, the rest contribute a waiting High
//      when they have one and a Low otherwise.
inline std::pair<AssortativeState, TeamReport> assortative_step(const AssortativeState& s,
                                                                const ArrivalTriplet& t,
                                                                int kbar) {
  if (!s.is_valid(kbar)) {
    throw std::invalid_argument("assortative_step: state violates invariants for kbar=" +
                                std::to_string(kbar));
  }
  std::array<int, 3> a = s.a;
  const std::array<int, 3> pre = s.a;

  for (int i = 0; i < 3; ++i) {
    if (t.types[i] == Type::High) ++a[i];
  }

  TeamReport report;
  const int m = *std::min_element(a.begin(), a.end());
  if (m > 0) {
    std::array<int, 3> used{};  // Highs consumed per population so far
    for (int i = 0; i < 3; ++i) a[i] -= m;
    for (int k = 0; k < m; ++k) {
      Team team;
      for (int i = 0; i < 3; ++i) {
        // waiting members leave before the arrival of the same type
        team.members.push_back({Type::High, used[i] < pre[i]});
        ++used[i];
      }
      report.teams.push_back(std::move(team));
    }
  }

  if (*std::max_element(a.begin(), a.end()) > kbar) {
    Team team;
    team.forced = true;
    for (int i = 0; i < 3; ++i) {
      if (a[i] > kbar) {
        // the arrival pushed this queue over kbar; the excess agent is the
        // one matched immediately
        team.members.push_back({Type::High, false});
        --a[i];
      } else if (a[i] > 0) {
        team.members.push_back({Type::High, pre[i] > 0});
        --a[i];
      } else {
        team.members.push_back({Type::Low, t.types[i] != Type::Low});
      }
    }
    report.teams.push_back(std::move(team));
  }

  return {AssortativeState{a}, std::move(report)};
}

// Three-way dis-assortative step on the signed queue k = (waiting High
// triplets) - (waiting Low triplets). Classified by the arrival's High count;
// threshold crossings are absorbed by forced same-type teams.
inline SignedQueueState disassortative_step(const SignedQueueState& s, const ArrivalTriplet& t,
                                            int k_high, int k_low) {
  if (s.k < -k_low || s.k > k_high) {
    throw std::invalid_argument("disassortative_step: k out of [-k_low, k_high]");
  }
  const int k = s.k;
  switch (t.high_count()) {
    case 3: return {k == k_high ? k : k + 1};
    case 0: return {k == -k_low ? k : k - 1};
    case 2: return {k < 0 ? k + 1 : k};
    default: return {k > 0 ? k - 1 : k};
  }
}

// Two-way assortative step on the signed H-h queue.
inline SignedQueueState twoway_step(const SignedQueueState& s, const ArrivalPair& pr, int kbar) {
  if (s.k < -kbar || s.k > kbar) {
    throw std::invalid_argument("twoway_step: k out of [-kbar, kbar]");
  }
  const bool h1 = pr.types[0] == Type::High;
  const bool h2 = pr.types[1] == Type::High;
  if (h1 == h2) return s;                          // (H,h) or (L,l)
  if (h1) return {std::min(s.k + 1, kbar)};        // (H,l)
  return {std::max(s.k - 1, -kbar)};               // (L,h)
}

}  // namespace matchq::policy
