// Core domain types shared by every chain: arrival events, queue states,
// thresholds, transition matrices and stationary distributions.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace matchq {

inline constexpr const char* kVersion = "0.1.0";

enum class Type : std::uint8_t { High, Low };

inline char to_char(Type t) { return t == Type::High ? 'H' : 'L'; }

// Proportion of High types. q = 1-p is always derived, never stored.
// Boundary values are rejected: at p in {0,1} the chains are reducible and
// the closed forms do not describe the limiting behaviour.
class Probability {
 public:
  Probability() = default;
  explicit Probability(double p) : p_(p) {
    if (!(p > 0.0 && p < 1.0)) {
      throw std::invalid_argument("Probability: p must lie strictly inside (0,1), got " +
                                  std::to_string(p));
    }
  }
  double p() const { return p_; }
  double q() const { return 1.0 - p_; }

 private:
  double p_ = 0.5;
};

// One arrival event for the three-way chains: a type per population,
// index i = population i.
struct ArrivalTriplet {
  std::array<Type, 3> types{Type::High, Type::High, Type::High};

  int high_count() const {
    int n = 0;
    for (Type t : types) n += (t == Type::High);
    return n;
  }
  auto operator<=>(const ArrivalTriplet&) const = default;
};

// One arrival event for the two-way chain: population 1 (H/L), population 2 (h/l).
struct ArrivalPair {
  std::array<Type, 2> types{Type::High, Type::High};

  int high_count() const {
    return (types[0] == Type::High) + (types[1] == Type::High);
  }
  auto operator<=>(const ArrivalPair&) const = default;
};

struct ThresholdConfig {
  int k_bar = 0;   // assortative / two-way threshold
  int k_high = 0;  // dis-assortative High threshold
  int k_low = 0;   // dis-assortative Low threshold

  static ThresholdConfig assortative(int k) {
    if (k < 1) throw std::invalid_argument("assortative threshold requires k_bar >= 1");
    return ThresholdConfig{k, 0, 0};
  }
  static ThresholdConfig two_way(int k) {
    if (k < 0) throw std::invalid_argument("two-way threshold must be >= 0");
    return ThresholdConfig{k, 0, 0};
  }
  static ThresholdConfig disassortative(int kh, int kl) {
    if (kh < 0 || kl < 0) throw std::invalid_argument("dis-assortative thresholds must be >= 0");
    return ThresholdConfig{0, kh, kl};
  }
  auto operator<=>(const ThresholdConfig&) const = default;
};

// Waiting High counts per population. The chain lives on the three faces of
// the cube [0,kbar]^3 that contain the origin: min coordinate is always 0.
struct AssortativeState {
  std::array<int, 3> a{0, 0, 0};

  int min_coord() const { return *std::min_element(a.begin(), a.end()); }
  int max_coord() const { return *std::max_element(a.begin(), a.end()); }
  bool is_valid(int kbar) const { return min_coord() == 0 && max_coord() <= kbar && kbar >= 1; }
  std::array<int, 3> sorted_desc() const {
    auto s = a;
    std::sort(s.begin(), s.end(), std::greater<>());
    return s;
  }
  auto operator<=>(const AssortativeState&) const = default;
};

// Signed queue length: waiting High units minus waiting Low units.
struct SignedQueueState {
  int k = 0;
  auto operator<=>(const SignedQueueState&) const = default;
};

enum class ChainKind { TwoWay, Assortative, Disassortative };

inline const char* to_string(ChainKind k) {
  switch (k) {
    case ChainKind::TwoWay: return "twoway";
    case ChainKind::Assortative: return "assortative";
    case ChainKind::Disassortative: return "disassortative";
  }
  return "?";
}

struct ChainParams {
  ChainKind kind = ChainKind::TwoWay;
  Probability p{};
  ThresholdConfig thresholds{};
};

// Row-stochastic matrix over an indexed state list, built mechanically from
// a step function. Rows are sparse maps target index -> probability.
template <typename State>
struct TransitionMatrix {
  std::vector<State> states;  // canonical ordering, sorted ascending
  std::vector<std::map<int, double>> rows;
  ChainParams params;

  int size() const { return static_cast<int>(states.size()); }

  int index_of(const State& s) const {
    auto it = std::lower_bound(states.begin(), states.end(), s);
    if (it == states.end() || *it != s) {
      throw std::invalid_argument("TransitionMatrix: state not in state list");
    }
    return static_cast<int>(it - states.begin());
  }

  double at(int i, int j) const {
    const auto& row = rows[static_cast<std::size_t>(i)];
    auto it = row.find(j);
    return it == row.end() ? 0.0 : it->second;
  }

  double row_sum(int i) const {
    double s = 0.0;
    for (const auto& [j, v] : rows[static_cast<std::size_t>(i)]) s += v;
    return s;
  }
};

enum class SolveMethod { DirectSolve, PowerIteration, ClosedForm, Empirical };

inline const char* to_string(SolveMethod m) {
  switch (m) {
    case SolveMethod::DirectSolve: return "direct-solve";
    case SolveMethod::PowerIteration: return "power-iteration";
    case SolveMethod::ClosedForm: return "closed-form";
    case SolveMethod::Empirical: return "empirical";
  }
  return "?";
}

// Probability vector over states (full or lumped chain), with the residual
// ||pi P - pi||_inf of the system it solved and the method that produced it.
struct StationaryDistribution {
  std::vector<double> probs;
  double residual = 0.0;
  SolveMethod method = SolveMethod::DirectSolve;
};

// ---------------------------------------------------------------------------
// Arrival enumeration and probabilities

// All 2^3 triplets in lexicographic order with High < Low; first is (H,H,H).
inline std::vector<ArrivalTriplet> enumerate_arrival_triplets() {
  std::vector<ArrivalTriplet> out;
  out.reserve(8);
  for (Type t0 : {Type::High, Type::Low})
    for (Type t1 : {Type::High, Type::Low})
      for (Type t2 : {Type::High, Type::Low}) out.push_back(ArrivalTriplet{{t0, t1, t2}});
  return out;
}

inline std::vector<ArrivalPair> enumerate_arrival_pairs() {
  std::vector<ArrivalPair> out;
  out.reserve(4);
  for (Type t0 : {Type::High, Type::Low})
    for (Type t1 : {Type::High, Type::Low}) out.push_back(ArrivalPair{{t0, t1}});
  return out;
}

// p^h q^(n-h), multiplied in fixed order so equal High counts give
// bitwise-equal probabilities.
inline double type_power(Probability p, int highs, int total) {
  double v = 1.0;
  for (int i = 0; i < highs; ++i) v *= p.p();
  for (int i = highs; i < total; ++i) v *= p.q();
  return v;
}

inline double arrival_probability(const ArrivalTriplet& t, Probability p) {
  return type_power(p, t.high_count(), 3);
}

inline double arrival_probability(const ArrivalPair& t, Probability p) {
  return type_power(p, t.high_count(), 2);
}

// ---------------------------------------------------------------------------
// Small numeric helpers

inline double total_variation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("total_variation: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

inline double linf_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("linf_distance: size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ---------------------------------------------------------------------------
// Error types

struct SingularSystemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
  ConvergenceError(std::string msg, std::vector<double> iterate, double res, long iters)
      : std::runtime_error(std::move(msg)),
        last_iterate(std::move(iterate)),
        residual(res),
        iterations(iters) {}
  std::vector<double> last_iterate;
  double residual;
  long iterations;
};

struct LumpabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimulationInvariantError : std::runtime_error {
  SimulationInvariantError(std::string msg, long long period_, std::string trace_)
      : std::runtime_error(std::move(msg)), period(period_), trace(std::move(trace_)) {}
  long long period;
  std::string trace;
};

}  // namespace matchq
