// Long-run performance measures of a policy under its stationary
// distribution: queue lengths, waiting-cost rate, match-utility rate and the
// welfare rate (utility minus waiting cost per period).
#pragma once

#include "matchq/chain.hpp"
#include "matchq/core.hpp"
#include "matchq/montecarlo.hpp"
#include "matchq/solve.hpp"

namespace matchq::metrics {

// Utilities are keyed by canonical team composition ("HHH".."LLL" for the
// triplet chains, "Hh"/"Hl"/"Lh"/"Ll" for the two-way chain) plus a waiting
// cost c per agent per period.
struct WelfareParams {
  std::map<std::string, double> match_utilities;
  double waiting_cost = 0.0;

  // Example tables respecting the ordinal constraints of each preference
  // structure. The models fix only orderings, not magnitudes; treat these as
  // placeholders for user-supplied values.
  static WelfareParams example_assortative(double c = 0.1) {
    return {{{"HHH", 3.0}, {"HHL", 2.0}, {"HLL", 1.0}, {"LLL", 0.5}}, c};
  }
  static WelfareParams example_disassortative(double c = 0.1) {
    return {{{"HHH", 1.0}, {"HHL", 2.0}, {"HLL", 2.0}, {"LLL", 0.5}}, c};
  }
  static WelfareParams example_twoway(double c = 0.1) {
    return {{{"Hh", 4.0}, {"Hl", 1.0}, {"Lh", 1.0}, {"Ll", 2.0}}, c};
  }

  double utility(const std::string& composition) const {
    auto it = match_utilities.find(composition);
    if (it == match_utilities.end()) {
      throw std::invalid_argument("WelfareParams: no utility for composition '" + composition +
                                  "' which occurs with positive rate");
    }
    return it->second;
  }

  void validate(ChainKind kind) const {
    for (const auto& [comp, u] : match_utilities) {
      if (u < 0.0) throw std::invalid_argument("WelfareParams: negative utility for " + comp);
    }
    const auto get = [&](const char* comp) { return utility(comp); };
    switch (kind) {
      case ChainKind::Assortative:
        if (!(get("HHH") > get("HHL") && get("HHL") > get("HLL") && get("HLL") > get("LLL"))) {
          throw std::invalid_argument(
              "WelfareParams: assortative utilities must strictly increase with the High count");
        }
        break;
      case ChainKind::Disassortative:
        if (!(get("HHL") == get("HLL") && get("HHL") > get("HHH") && get("HHL") > get("LLL"))) {
          throw std::invalid_argument(
              "WelfareParams: dis-assortative utilities need U(HHL) = U(HLL) above both "
              "same-type teams");
        }
        break;
      case ChainKind::TwoWay:
        if (!(get("Hh") + get("Ll") - get("Hl") - get("Lh") > 0.0)) {
          throw std::invalid_argument("WelfareParams: two-way surplus U must be positive");
        }
        break;
    }
  }
};

struct QueueStats {
  std::array<double, 3> mean_high{0.0, 0.0, 0.0};  // waiting Highs per population
  double mean_abs_queue = 0.0;   // E max(a) (assortative) or E|k| (signed chains)
  double mean_total_waiting = 0.0;  // all waiting agents, Lows included
};

// Assortative chain: waiting Lows are implied by low_i = max(a) - a_i, so
// each population waits max(a) agents in total.
inline QueueStats expected_queue_stats(const StationaryDistribution& dist,
                                       const std::vector<AssortativeState>& states) {
  if (dist.probs.size() != states.size()) {
    throw std::invalid_argument("expected_queue_stats: distribution/state list mismatch");
  }
  QueueStats qs;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const double w = dist.probs[i];
    for (int j = 0; j < 3; ++j) qs.mean_high[static_cast<std::size_t>(j)] += w * states[i].a[static_cast<std::size_t>(j)];
    qs.mean_abs_queue += w * states[i].max_coord();
  }
  qs.mean_total_waiting = 3.0 * qs.mean_abs_queue;
  return qs;
}

// Signed chains. Dis-assortative: |k| waiting triplets = 3|k| agents.
// Two-way: k > 0 leaves k High and k l agents waiting, so 2|k| in total.
inline QueueStats expected_queue_stats(const StationaryDistribution& dist,
                                       const std::vector<SignedQueueState>& states,
                                       ChainKind kind) {
  if (dist.probs.size() != states.size()) {
    throw std::invalid_argument("expected_queue_stats: distribution/state list mismatch");
  }
  QueueStats qs;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const double w = dist.probs[i];
    const int k = states[i].k;
    qs.mean_high[0] += w * std::max(k, 0);
    qs.mean_high[1] += w * (kind == ChainKind::TwoWay ? std::max(-k, 0) : std::max(k, 0));
    if (kind == ChainKind::Disassortative) qs.mean_high[2] += w * std::max(k, 0);
    qs.mean_abs_queue += w * std::abs(k);
  }
  const double members = kind == ChainKind::TwoWay ? 2.0 : 3.0;
  qs.mean_total_waiting = members * qs.mean_abs_queue;
  return qs;
}

template <typename State>
QueueStats expected_queue_stats(const StationaryDistribution& dist,
                                const TransitionMatrix<State>& m) {
  if constexpr (std::is_same_v<State, AssortativeState>) {
    return expected_queue_stats(dist, m.states);
  } else {
    return expected_queue_stats(dist, m.states, m.params.kind);
  }
}

// Expected teams formed per period by composition: the policy TeamReport of
// every (state, arrival) pair averaged under pi x arrival law. This is the
// analytic counterpart of simulation team counts.
template <typename State>
std::map<std::string, double> analytic_team_rates(const TransitionMatrix<State>& m,
                                                  const StationaryDistribution& dist) {
  if (dist.probs.size() != m.states.size()) {
    throw std::invalid_argument("analytic_team_rates: distribution/state list mismatch");
  }
  std::map<std::string, double> rates;
  const Probability p = m.params.p;

  for (int i = 0; i < m.size(); ++i) {
    const double w = dist.probs[static_cast<std::size_t>(i)];
    if (w == 0.0) continue;
    if constexpr (std::is_same_v<State, AssortativeState>) {
      const auto& s = m.states[static_cast<std::size_t>(i)];
      mc::MarketState full;
      full.high = s.a;
      const int maxh = s.max_coord();
      for (int j = 0; j < 3; ++j) full.low[static_cast<std::size_t>(j)] = maxh - s.a[static_cast<std::size_t>(j)];
      for (const auto& t : enumerate_arrival_triplets()) {
        const auto teams = mc::assortative_market_step(full, t, m.params.thresholds.k_bar).second;
        for (const auto& team : teams.teams) {
          rates[team.composition()] += w * arrival_probability(t, p);
        }
      }
    } else if (m.params.kind == ChainKind::Disassortative) {
      const int k = m.states[static_cast<std::size_t>(i)].k;
      mc::TripletInventory inv{std::max(k, 0), std::max(-k, 0)};
      for (const auto& t : enumerate_arrival_triplets()) {
        const auto teams =
            mc::disassortative_market_step(inv, t, m.params.thresholds.k_high,
                                           m.params.thresholds.k_low)
                .second;
        for (const auto& team : teams.teams) {
          rates[team.composition()] += w * arrival_probability(t, p);
        }
      }
    } else {
      const auto s = m.states[static_cast<std::size_t>(i)];
      for (const auto& pr : enumerate_arrival_pairs()) {
        const auto teams = mc::twoway_market_step(s, pr, m.params.thresholds.k_bar).second;
        for (const auto& team : teams.teams) {
          rates[team.composition()] += w * arrival_probability(pr, p);
        }
      }
    }
  }
  return rates;
}

inline std::map<std::string, double> empirical_team_rates(const mc::SimulationReport& report) {
  std::map<std::string, double> rates;
  const double total = static_cast<double>(report.steps - report.burn_in);
  for (const auto& [comp, count] : report.team_counts) {
    rates[comp] = static_cast<double>(count) / total;
  }
  return rates;
}

// Long-run average welfare per period: sum of team rates weighted by their
// utility, minus c times the average number of waiting agents.
template <typename State>
double welfare_rate(const StationaryDistribution& dist, const TransitionMatrix<State>& m,
                    const WelfareParams& w, const std::map<std::string, double>& team_rates) {
  double utility = 0.0;
  for (const auto& [comp, rate] : team_rates) {
    if (rate > 0.0) utility += rate * w.utility(comp);
  }
  const QueueStats qs = expected_queue_stats(dist, m);
  return utility - w.waiting_cost * qs.mean_total_waiting;
}

struct SweepRow {
  ThresholdConfig thresholds;
  double welfare = 0.0;
  double mean_total_waiting = 0.0;
  bool best = false;
};

// Evaluates the welfare rate for each threshold configuration via the exact
// stationary solve. Ties flag the earliest row, so pass thresholds sorted
// ascending to make the smallest threshold win.
inline std::vector<SweepRow> threshold_sweep(ChainKind kind, Probability p,
                                             const std::vector<ThresholdConfig>& thresholds,
                                             const WelfareParams& w) {
  if (thresholds.empty()) throw std::invalid_argument("threshold_sweep: empty threshold range");
  std::vector<SweepRow> rows;
  rows.reserve(thresholds.size());

  for (const auto& th : thresholds) {
    SweepRow row;
    row.thresholds = th;
    switch (kind) {
      case ChainKind::TwoWay: {
        const auto m = chain::build_twoway_matrix(p, th.k_bar);
        const auto dist = solve::stationary_direct(m);
        row.welfare = welfare_rate(dist, m, w, analytic_team_rates(m, dist));
        row.mean_total_waiting = expected_queue_stats(dist, m).mean_total_waiting;
        break;
      }
      case ChainKind::Assortative: {
        const auto m = chain::build_assortative_matrix(p, th.k_bar);
        const auto dist = solve::stationary_direct(m);
        row.welfare = welfare_rate(dist, m, w, analytic_team_rates(m, dist));
        row.mean_total_waiting = expected_queue_stats(dist, m).mean_total_waiting;
        break;
      }
      case ChainKind::Disassortative: {
        const auto m = chain::build_disassortative_matrix(p, th.k_high, th.k_low);
        const auto dist = solve::stationary_direct(m);
        row.welfare = welfare_rate(dist, m, w, analytic_team_rates(m, dist));
        row.mean_total_waiting = expected_queue_stats(dist, m).mean_total_waiting;
        break;
      }
    }
    rows.push_back(row);
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].welfare > rows[best].welfare) best = i;
  }
  rows[best].best = true;
  return rows;
}

}  // namespace matchq::metrics
