// Stationary-distribution computation: direct linear solve, power iteration,
// and the three closed forms as independent oracles.
#pragma once

#include <Eigen/Dense>

#include "matchq/chain.hpp"
#include "matchq/core.hpp"

namespace matchq::solve {

// Solves pi (P - I) = 0 with the last balance equation replaced by the
// normalization row (any single equation is redundant by stochasticity;
// picking the last keeps results reproducible).
template <typename State>
StationaryDistribution stationary_direct(const TransitionMatrix<State>& m, double tol = 1e-12) {
  const int n = m.size();
  if (n == 0) throw std::invalid_argument("stationary_direct: empty chain");

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (const auto& [j, v] : m.rows[static_cast<std::size_t>(i)]) A(j, i) += v;  // transpose
    A(i, i) -= 1.0;
  }
  A.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) {
    throw SingularSystemError("stationary_direct: singular balance system (chain not ergodic?)");
  }
  Eigen::VectorXd x = lu.solve(b);

  StationaryDistribution dist;
  dist.method = SolveMethod::DirectSolve;
  dist.probs.resize(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double v = x(i);
    if (v < 0.0) {
      if (v < -1e-12) {
        throw SingularSystemError("stationary_direct: solution has a negative entry " +
                                  std::to_string(v));
      }
      v = 0.0;
    }
    dist.probs[static_cast<std::size_t>(i)] = v;
    sum += v;
  }
  for (double& v : dist.probs) v /= sum;

  // residual ||pi P - pi||_inf
  std::vector<double> next(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    for (const auto& [j, v] : m.rows[static_cast<std::size_t>(i)]) {
      next[static_cast<std::size_t>(j)] += dist.probs[static_cast<std::size_t>(i)] * v;
    }
  }
  dist.residual = linf_distance(next, dist.probs);
  if (dist.residual > tol) {
    throw SingularSystemError("stationary_direct: residual " + std::to_string(dist.residual) +
                              " exceeds tolerance");
  }
  return dist;
}

inline StationaryDistribution stationary_direct(const chain::LumpedChain& lc, double tol = 1e-12) {
  return stationary_direct(lc.matrix, tol);
}

template <typename State>
struct PowerResult {
  StationaryDistribution dist;
  long iterations = 0;
};

// pi <- pi P from the uniform start until ||pi P - pi||_1 < tol. Rows are
// flattened to CSR once so the grid-wide cross-checks stay cheap.
template <typename State>
PowerResult<State> stationary_power(const TransitionMatrix<State>& m, double tol = 1e-12,
                                    long max_iter = 5'000'000) {
  if (tol <= 0.0) throw std::invalid_argument("stationary_power: tol must be positive");
  const std::size_t n = static_cast<std::size_t>(m.size());
  if (n == 0) throw std::invalid_argument("stationary_power: empty chain");

  std::vector<int> col;
  std::vector<double> val;
  std::vector<std::size_t> row_ptr{0};
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, v] : m.rows[i]) {
      col.push_back(j);
      val.push_back(v);
    }
    row_ptr.push_back(col.size());
  }

  std::vector<double> pi(n, 1.0 / static_cast<double>(n)), next(n);
  const auto multiply = [&] {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = pi[i];
      for (std::size_t e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
        next[static_cast<std::size_t>(col[e])] += w * val[e];
      }
    }
  };

  for (long it = 1; it <= max_iter; ++it) {
    multiply();
    double l1 = 0.0, linf = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = std::abs(next[i] - pi[i]);
      l1 += d;
      linf = std::max(linf, d);
    }
    pi.swap(next);
    if (l1 < tol) {
      PowerResult<State> res;
      res.dist.probs = std::move(pi);
      res.dist.residual = linf;
      res.dist.method = SolveMethod::PowerIteration;
      res.iterations = it;
      return res;
    }
  }
  multiply();
  double l1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) l1 += std::abs(next[i] - pi[i]);
  throw ConvergenceError("stationary_power: no convergence after " + std::to_string(max_iter) +
                             " iterations (residual " + std::to_string(l1) + ")",
                         pi, l1, max_iter);
}

// ---------------------------------------------------------------------------
// Closed forms

// Two-way law: Uniform(-kbar, kbar), independent of p.
inline StationaryDistribution closed_form_twoway(int kbar) {
  if (kbar < 0) throw std::invalid_argument("closed_form_twoway: kbar must be >= 0");
  StationaryDistribution dist;
  dist.method = SolveMethod::ClosedForm;
  dist.probs.assign(static_cast<std::size_t>(2 * kbar + 1), 1.0 / (2.0 * kbar + 1.0));
  return dist;
}

namespace detail {

// Horner evaluation, coefficients highest degree first.
template <std::size_t N>
double horner(const std::array<double, N>& coeff, double x) {
  double v = 0.0;
  for (double c : coeff) v = v * x + c;
  return v;
}

}  // namespace detail

// Per-class coefficients of the kbar = 2 lumped solution. x1..x6 are
// per-state probabilities of the classes represented by (0,0,0), (1,0,0),
// (1,1,0), (2,0,0), (2,1,0), (2,2,0); multiplicities (1,3,3,3,6,3).
struct AssortativeK2Solution {
  double A = 0.0;
  double B = 0.0;
  std::array<double, 6> x{};
};

inline AssortativeK2Solution assortative_k2_coefficients(Probability prob) {
  const double p = prob.p();
  const double q = prob.q();

  const double a_num = detail::horner<6>({1, -6, 18, -34, 31, -20}, p);
  const double a_den = detail::horner<6>({1, -6, 17, -30, 28, -18}, p);
  const double quad = detail::horner<3>({1, -2, 2}, p);  // p^2 - 2p + 2
  const double x3_den =
      detail::horner<8>({19, -163, 670, -1707, 2800, -3079, 2086, -786}, p);
  const double b_num = detail::horner<8>({1, -9, 38, -97, 159, -173, 116, -42}, p);

  AssortativeK2Solution s;
  s.A = a_num / a_den;
  s.B = b_num / (a_den * quad);
  const double x3 = quad * a_den / x3_den;
  s.x = {
      (p * s.A + q) * x3,                 // x1
      s.A * x3,                           // x2
      x3,                                 // x3
      (q * s.A + 2.0 * s.B) / (2.0 - p) * x3,  // x4
      s.B * x3,                           // x5
      (p + 2.0 * q * s.B) / (3.0 - p) * x3,    // x6
  };
  return s;
}

inline constexpr std::array<int, 6> kAssortativeK2Multiplicity{1, 3, 3, 3, 6, 3};

// Lumped stationary law for kbar = 2 as a distribution over the six classes
// (class totals multiplicity * x_i, aligned with lump_by_symmetry's class
// order).
inline StationaryDistribution closed_form_assortative_k2(Probability p) {
  const auto sol = assortative_k2_coefficients(p);
  StationaryDistribution dist;
  dist.method = SolveMethod::ClosedForm;
  dist.probs.resize(6);
  for (std::size_t i = 0; i < 6; ++i) dist.probs[i] = kAssortativeK2Multiplicity[i] * sol.x[i];
  return dist;
}

// Residuals of the seven lumped balance equations at per-state values x1..x6.
// Index 6 is the normalization equation.
inline std::array<double, 7> k2_balance_residuals(std::span<const double, 6> x, Probability prob) {
  const double p = prob.p();
  const double q = prob.q();
  return {
      x[0] - (p * x[1] + q * x[2]),
      3.0 * x[1] - (q * x[0] + 2.0 * p * x[2] + p * x[3] + 2.0 * q * x[4]),
      3.0 * x[2] - (p * x[0] + 2.0 * q * x[1] + 2.0 * p * x[4] + q * x[5]),
      (2.0 - p) * x[3] - (q * x[1] + 2.0 * x[4]),
      (3.0 - p) * x[4] - (p * x[1] + q * x[2] + q * x[3] + x[5]),
      (3.0 - p) * x[5] - (p * x[2] + 2.0 * q * x[4]),
      1.0 - (x[0] + 3.0 * x[1] + 3.0 * x[2] + 3.0 * x[3] + 6.0 * x[4] + 3.0 * x[5]),
  };
}

// Per-state values x_i from a class-total distribution over the 6 classes.
inline std::array<double, 6> k2_per_state(const StationaryDistribution& class_totals) {
  if (class_totals.probs.size() != 6) {
    throw std::invalid_argument("k2_per_state: expected 6 class totals");
  }
  std::array<double, 6> x{};
  for (std::size_t i = 0; i < 6; ++i) x[i] = class_totals.probs[i] / kAssortativeK2Multiplicity[i];
  return x;
}

// Dis-assortative law: mixture of two truncated geometrics with ratios
//   a = q^3 / (p^3 + 3 p^2 q)   (negative side)
//   b = p^3 / (3 p q^2 + q^3)   (positive side)
// The geometric sums are accumulated term by term, which also covers the
// removable singularities at a = 1 or b = 1.
inline StationaryDistribution closed_form_disassortative(Probability prob, int k_high, int k_low) {
  if (k_high < 0 || k_low < 0) {
    throw std::invalid_argument("closed_form_disassortative: thresholds must be >= 0");
  }
  const double p = prob.p();
  const double q = prob.q();
  const double a = (q * q * q) / (p * p * p + 3.0 * p * p * q);
  const double b = (p * p * p) / (3.0 * p * q * q + q * q * q);

  double sum_low = 0.0, ai = 1.0;
  for (int i = 1; i <= k_low; ++i) {
    ai *= a;
    sum_low += ai;
  }
  double sum_high = 0.0, bi = 1.0;
  for (int i = 1; i <= k_high; ++i) {
    bi *= b;
    sum_high += bi;
  }
  const double pi0 = 1.0 / (1.0 + sum_low + sum_high);

  StationaryDistribution dist;
  dist.method = SolveMethod::ClosedForm;
  dist.probs.resize(static_cast<std::size_t>(k_low + k_high + 1));
  dist.probs[static_cast<std::size_t>(k_low)] = pi0;
  double v = pi0;
  for (int i = 1; i <= k_low; ++i) {
    v *= a;
    dist.probs[static_cast<std::size_t>(k_low - i)] = v;  // pi_{-i} = a^i pi_0
  }
  v = pi0;
  for (int i = 1; i <= k_high; ++i) {
    v *= b;
    dist.probs[static_cast<std::size_t>(k_low + i)] = v;  // pi_{+i} = b^i pi_0
  }
  return dist;
}

}  // namespace matchq::solve
