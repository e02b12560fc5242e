// State-space enumeration, mechanical transition-matrix construction from
// step functions, ergodicity certification, and S3 symmetry lumping.
#pragma once

#include <deque>
#include <functional>

#include "matchq/core.hpp"
#include "matchq/policy.hpp"

namespace matchq::chain {

// All triples in [0,kbar]^3 with min coordinate 0, lexicographic order.
// Count is 3*kbar^2 + 3*kbar + 1 = (kbar+1)^3 - kbar^3.
inline std::vector<AssortativeState> enumerate_assortative_states(int kbar) {
  if (kbar < 1) throw std::invalid_argument("enumerate_assortative_states: kbar must be >= 1");
  std::vector<AssortativeState> out;
  out.reserve(static_cast<std::size_t>(3 * kbar * kbar + 3 * kbar + 1));
  for (int a1 = 0; a1 <= kbar; ++a1)
    for (int a2 = 0; a2 <= kbar; ++a2)
      for (int a3 = 0; a3 <= kbar; ++a3)
        if (std::min({a1, a2, a3}) == 0) out.push_back(AssortativeState{{a1, a2, a3}});
  return out;
}

inline std::vector<SignedQueueState> enumerate_signed_states(int k_min, int k_max) {
  if (k_min > k_max) throw std::invalid_argument("enumerate_signed_states: empty range");
  std::vector<SignedQueueState> out;
  out.reserve(static_cast<std::size_t>(k_max - k_min + 1));
  for (int k = k_min; k <= k_max; ++k) out.push_back(SignedQueueState{k});
  return out;
}

// Mechanical builder. Arrival events are first aggregated as integer counts
// keyed by High count per (source, target) pair, then combined with the
// powers p^h q^(n-h) in fixed order. Probabilities therefore come out
// bitwise-identical for states related by a population permutation, which
// lets the lumpability check demand (near-)exact agreement.
template <typename State, typename Event, typename Step>
TransitionMatrix<State> build_from_step(std::vector<State> states, const std::vector<Event>& events,
                                        int event_size, Probability p, Step step,
                                        ChainParams params) {
  TransitionMatrix<State> m;
  m.states = std::move(states);
  m.params = params;
  m.rows.resize(m.states.size());

  std::array<double, 4> pow_h{};
  for (int h = 0; h <= event_size; ++h) pow_h[static_cast<std::size_t>(h)] = type_power(p, h, event_size);

  for (int i = 0; i < m.size(); ++i) {
    std::map<int, std::array<int, 4>> counts;
    for (const Event& e : events) {
      const State target = step(m.states[static_cast<std::size_t>(i)], e);
      ++counts[m.index_of(target)][static_cast<std::size_t>(e.high_count())];
    }
    for (const auto& [j, ch] : counts) {
      double v = 0.0;
      for (int h = 0; h <= event_size; ++h) {
        if (ch[static_cast<std::size_t>(h)] != 0) v += ch[static_cast<std::size_t>(h)] * pow_h[static_cast<std::size_t>(h)];
      }
      m.rows[static_cast<std::size_t>(i)][j] = v;
    }
  }
  return m;
}

inline TransitionMatrix<SignedQueueState> build_twoway_matrix(Probability p, int kbar) {
  if (kbar < 0) throw std::invalid_argument("build_twoway_matrix: kbar must be >= 0");
  ChainParams params{ChainKind::TwoWay, p, ThresholdConfig::two_way(kbar)};
  return build_from_step(
      enumerate_signed_states(-kbar, kbar), enumerate_arrival_pairs(), 2, p,
      [kbar](const SignedQueueState& s, const ArrivalPair& e) { return policy::twoway_step(s, e, kbar); },
      params);
}

inline TransitionMatrix<AssortativeState> build_assortative_matrix(Probability p, int kbar) {
  ChainParams params{ChainKind::Assortative, p, ThresholdConfig::assortative(kbar)};
  return build_from_step(
      enumerate_assortative_states(kbar), enumerate_arrival_triplets(), 3, p,
      [kbar](const AssortativeState& s, const ArrivalTriplet& e) {
        return policy::assortative_step(s, e, kbar).first;
      },
      params);
}

inline TransitionMatrix<SignedQueueState> build_disassortative_matrix(Probability p, int k_high,
                                                                      int k_low) {
  ChainParams params{ChainKind::Disassortative, p, ThresholdConfig::disassortative(k_high, k_low)};
  return build_from_step(
      enumerate_signed_states(-k_low, k_high), enumerate_arrival_triplets(), 3, p,
      [k_high, k_low](const SignedQueueState& s, const ArrivalTriplet& e) {
        return policy::disassortative_step(s, e, k_high, k_low);
      },
      params);
}

// Convenience dispatcher for callers that hold a ChainParams.
inline TransitionMatrix<AssortativeState> build_assortative_matrix(const ChainParams& cp) {
  return build_assortative_matrix(cp.p, cp.thresholds.k_bar);
}

// ---------------------------------------------------------------------------
// Ergodicity

struct ErgodicityReport {
  bool irreducible = false;
  bool aperiodic = false;
  // When irreducible: a positive-probability closed walk visiting every
  // state (consecutive entries are one-step transitions; last connects back
  // to the first). Otherwise: the states that break strong connectivity.
  std::vector<int> witness_cycle;
  std::vector<int> failing_component;

  bool ergodic() const { return irreducible && aperiodic; }
};

namespace detail {

inline std::vector<int> reachable(const std::vector<std::vector<int>>& adj, int start) {
  std::vector<int> dist(adj.size(), -1);
  std::deque<int> q{start};
  dist[static_cast<std::size_t>(start)] = 0;
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (dist[static_cast<std::size_t>(v)] < 0) {
        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
        q.push_back(v);
      }
    }
  }
  return dist;
}

// Shortest positive-probability path start -> goal (both endpoints included).
inline std::vector<int> bfs_path(const std::vector<std::vector<int>>& adj, int start, int goal) {
  std::vector<int> prev(adj.size(), -1);
  std::deque<int> q{start};
  std::vector<char> seen(adj.size(), 0);
  seen[static_cast<std::size_t>(start)] = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    if (u == goal) break;
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        prev[static_cast<std::size_t>(v)] = u;
        q.push_back(v);
      }
    }
  }
  std::vector<int> path;
  for (int v = goal; v != -1; v = prev[static_cast<std::size_t>(v)]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace detail

// Irreducibility via two graph searches on the positive-entry digraph;
// aperiodicity via positive diagonals (sufficient given irreducibility —
// every chain here keeps a self-loop from the all-Low arrival).
template <typename State>
ErgodicityReport check_ergodicity(const TransitionMatrix<State>& m) {
  const int n = m.size();
  ErgodicityReport rep;
  if (n == 0) return rep;

  std::vector<std::vector<int>> fwd(static_cast<std::size_t>(n)), bwd(static_cast<std::size_t>(n));
  rep.aperiodic = true;
  for (int i = 0; i < n; ++i) {
    bool diag = false;
    for (const auto& [j, v] : m.rows[static_cast<std::size_t>(i)]) {
      if (v > 0.0) {
        fwd[static_cast<std::size_t>(i)].push_back(j);
        bwd[static_cast<std::size_t>(j)].push_back(i);
        if (j == i) diag = true;
      }
    }
    if (!diag) rep.aperiodic = false;
  }

  const auto dist_fwd = detail::reachable(fwd, 0);
  const auto dist_bwd = detail::reachable(bwd, 0);
  rep.irreducible = true;
  for (int i = 0; i < n; ++i) {
    if (dist_fwd[static_cast<std::size_t>(i)] < 0 || dist_bwd[static_cast<std::size_t>(i)] < 0) {
      rep.irreducible = false;
      rep.failing_component.push_back(i);
    }
  }
  if (!rep.irreducible) return rep;

  // stitch BFS paths through every state and back to the start
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> walk{0};
  for (std::size_t k = 1; k < order.size(); ++k) {
    auto leg = detail::bfs_path(fwd, walk.back(), order[k]);
    walk.insert(walk.end(), leg.begin() + 1, leg.end());
  }
  auto back = detail::bfs_path(fwd, walk.back(), 0);
  walk.insert(walk.end(), back.begin() + 1, back.end() - 1);
  rep.witness_cycle = std::move(walk);
  return rep;
}

// ---------------------------------------------------------------------------
// Lumping by population-permutation symmetry

// Quotient of the assortative chain under the 6 coordinate permutations.
// Classes are orbits; the canonical representative is the sorted-descending
// triple. Strong lumpability is verified, not assumed.
struct LumpedChain {
  TransitionMatrix<AssortativeState> matrix;  // states = canonical representatives
  std::vector<int> multiplicity;              // orbit sizes (1, 3 or 6)
  std::vector<int> class_of;                  // full-state index -> class index

  // Expand a distribution over classes to the full state list, splitting
  // each class total uniformly across its orbit.
  std::vector<double> expand(std::span<const double> class_probs) const {
    if (class_probs.size() != matrix.states.size()) {
      throw std::invalid_argument("LumpedChain::expand: size mismatch");
    }
    std::vector<double> full(class_of.size());
    for (std::size_t i = 0; i < class_of.size(); ++i) {
      const int c = class_of[i];
      full[i] = class_probs[static_cast<std::size_t>(c)] / multiplicity[static_cast<std::size_t>(c)];
    }
    return full;
  }
};

inline LumpedChain lump_by_symmetry(const TransitionMatrix<AssortativeState>& m) {
  if (m.params.kind != ChainKind::Assortative) {
    throw std::invalid_argument("lump_by_symmetry: population-permutation symmetry applies to the assortative chain");
  }

  std::vector<AssortativeState> reps;
  for (const auto& s : m.states) {
    if (s.a == s.sorted_desc()) reps.push_back(s);
  }
  std::sort(reps.begin(), reps.end());

  const auto rep_index = [&](const AssortativeState& s) {
    const AssortativeState canon{s.sorted_desc()};
    auto it = std::lower_bound(reps.begin(), reps.end(), canon);
    return static_cast<int>(it - reps.begin());
  };

  LumpedChain lc;
  lc.matrix.states = reps;
  lc.matrix.params = m.params;
  lc.matrix.rows.resize(reps.size());
  lc.multiplicity.assign(reps.size(), 0);
  lc.class_of.resize(static_cast<std::size_t>(m.size()));
  for (int i = 0; i < m.size(); ++i) {
    const int c = rep_index(m.states[static_cast<std::size_t>(i)]);
    lc.class_of[static_cast<std::size_t>(i)] = c;
    ++lc.multiplicity[static_cast<std::size_t>(c)];
  }

  // Aggregate each full row over target classes. Addends are sorted before
  // summation so members of a class produce identical sums; any disagreement
  // flags a policy-equivariance bug.
  constexpr double kAgreementTol = 1e-15;
  std::vector<char> row_set(reps.size(), 0);
  for (int i = 0; i < m.size(); ++i) {
    std::vector<std::vector<double>> addends(reps.size());
    for (const auto& [j, v] : m.rows[static_cast<std::size_t>(i)]) {
      addends[static_cast<std::size_t>(lc.class_of[static_cast<std::size_t>(j)])].push_back(v);
    }
    std::map<int, double> row;
    for (std::size_t d = 0; d < reps.size(); ++d) {
      if (addends[d].empty()) continue;
      std::sort(addends[d].begin(), addends[d].end());
      double sum = 0.0;
      for (double v : addends[d]) sum += v;
      row[static_cast<int>(d)] = sum;
    }
    const std::size_t c = static_cast<std::size_t>(lc.class_of[static_cast<std::size_t>(i)]);
    if (!row_set[c]) {
      lc.matrix.rows[c] = std::move(row);
      row_set[c] = 1;
    } else {
      const auto& ref = lc.matrix.rows[c];
      bool same = ref.size() == row.size();
      if (same) {
        auto it1 = ref.begin();
        auto it2 = row.begin();
        for (; it1 != ref.end(); ++it1, ++it2) {
          if (it1->first != it2->first || std::abs(it1->second - it2->second) > kAgreementTol) {
            same = false;
            break;
          }
        }
      }
      if (!same) {
        std::string msg = "lump_by_symmetry: rows disagree across the class of (";
        const auto& s = m.states[static_cast<std::size_t>(i)];
        msg += std::to_string(s.a[0]) + "," + std::to_string(s.a[1]) + "," + std::to_string(s.a[2]) + ")";
        throw LumpabilityError(msg);
      }
    }
  }
  return lc;
}

}  // namespace matchq::chain
