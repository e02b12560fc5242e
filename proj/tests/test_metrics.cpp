#include <catch2/catch_amalgamated.hpp>

#include "matchq/metrics.hpp"

using namespace matchq;

TEST_CASE("queue stats: point mass at the empty market") {
  const auto states = chain::enumerate_assortative_states(2);
  StationaryDistribution dist;
  dist.probs.assign(states.size(), 0.0);
  dist.probs[0] = 1.0;  // lexicographically first state is (0,0,0)
  REQUIRE(states[0] == AssortativeState{{0, 0, 0}});

  const auto qs = metrics::expected_queue_stats(dist, states);
  CHECK(qs.mean_high == std::array<double, 3>{0.0, 0.0, 0.0});
  CHECK(qs.mean_abs_queue == 0.0);
  CHECK(qs.mean_total_waiting == 0.0);
}

TEST_CASE("queue stats: two-way uniform at kbar=1 waits 2/3 on the signed queue") {
  const auto m = chain::build_twoway_matrix(Probability(0.5), 1);
  const auto dist = solve::closed_form_twoway(1);
  const auto qs = metrics::expected_queue_stats(dist, m.states, ChainKind::TwoWay);
  CHECK(qs.mean_abs_queue == Catch::Approx(2.0 / 3.0).margin(1e-15));
  CHECK(qs.mean_total_waiting == Catch::Approx(4.0 / 3.0).margin(1e-15));
  CHECK(qs.mean_high[0] == Catch::Approx(1.0 / 3.0).margin(1e-15));
  CHECK(qs.mean_high[1] == Catch::Approx(1.0 / 3.0).margin(1e-15));
}

TEST_CASE("queue stats: dis-assortative closed form at (0.5,1,1)") {
  const auto m = chain::build_disassortative_matrix(Probability(0.5), 1, 1);
  const auto dist = solve::closed_form_disassortative(Probability(0.5), 1, 1);
  const auto qs = metrics::expected_queue_stats(dist, m.states, ChainKind::Disassortative);
  CHECK(qs.mean_total_waiting == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("queue stats are invariant under population permutation") {
  for (double pv : {0.3, 0.5, 0.7}) {
    const auto m = chain::build_assortative_matrix(Probability(pv), 3);
    const auto dist = solve::stationary_direct(m);
    const auto qs = metrics::expected_queue_stats(dist, m.states);
    CHECK(std::abs(qs.mean_high[0] - qs.mean_high[1]) < 1e-12);
    CHECK(std::abs(qs.mean_high[1] - qs.mean_high[2]) < 1e-12);
  }
}

TEST_CASE("queue stats reject misaligned inputs") {
  const auto states = chain::enumerate_assortative_states(2);
  StationaryDistribution dist;
  dist.probs.assign(3, 1.0 / 3.0);
  CHECK_THROWS_AS(metrics::expected_queue_stats(dist, states), std::invalid_argument);
}

TEST_CASE("welfare rate: single composition at a known rate") {
  const auto m = chain::build_assortative_matrix(Probability(0.5), 2);
  const auto states = m.states;
  StationaryDistribution point;
  point.probs.assign(states.size(), 0.0);
  point.probs[0] = 1.0;

  metrics::WelfareParams w;
  w.match_utilities = {{"HHH", 7.5}};
  w.waiting_cost = 0.0;
  const std::map<std::string, double> rates{{"HHH", 0.25}};
  CHECK(metrics::welfare_rate(point, m, w, rates) == Catch::Approx(0.25 * 7.5).margin(1e-15));
}

TEST_CASE("welfare rate: empty market with no teams is zero") {
  const auto m = chain::build_assortative_matrix(Probability(0.5), 2);
  StationaryDistribution point;
  point.probs.assign(m.states.size(), 0.0);
  point.probs[0] = 1.0;
  metrics::WelfareParams w = metrics::WelfareParams::example_assortative(3.0);
  CHECK(metrics::welfare_rate(point, m, w, {}) == 0.0);
}

TEST_CASE("welfare rate errors on a missing composition with positive rate") {
  const auto m = chain::build_assortative_matrix(Probability(0.5), 2);
  const auto dist = solve::stationary_direct(m);
  metrics::WelfareParams w;
  w.match_utilities = {{"HHH", 1.0}};
  const std::map<std::string, double> rates{{"HHL", 0.1}};
  CHECK_THROWS_AS(metrics::welfare_rate(dist, m, w, rates), std::invalid_argument);
}

TEST_CASE("welfare rate is affine in c with slope minus total waiting") {
  const Probability p(0.4);

  const auto check_affine = [](const auto& m, const metrics::WelfareParams& base) {
    const auto dist = solve::stationary_direct(m);
    const auto rates = metrics::analytic_team_rates(m, dist);
    const auto qs = metrics::expected_queue_stats(dist, m);

    metrics::WelfareParams w0 = base, w1 = base, w2 = base;
    w0.waiting_cost = 0.0;
    w1.waiting_cost = 1.0;
    w2.waiting_cost = 2.5;
    const double f0 = metrics::welfare_rate(dist, m, w0, rates);
    const double f1 = metrics::welfare_rate(dist, m, w1, rates);
    const double f2 = metrics::welfare_rate(dist, m, w2, rates);
    CHECK(std::abs((f1 - f0) + qs.mean_total_waiting) < 1e-12);
    CHECK(std::abs((f2 - f0) + 2.5 * qs.mean_total_waiting) < 1e-12);
  };

  check_affine(chain::build_assortative_matrix(p, 2), metrics::WelfareParams::example_assortative());
  check_affine(chain::build_disassortative_matrix(p, 2, 2),
               metrics::WelfareParams::example_disassortative());
  check_affine(chain::build_twoway_matrix(p, 2), metrics::WelfareParams::example_twoway());
}

TEST_CASE("analytic team rates sum to one team per period") {
  for (double pv : {0.25, 0.5, 0.75}) {
    const Probability p(pv);
    const auto sum_rates = [](const std::map<std::string, double>& rates) {
      double s = 0.0;
      for (const auto& [comp, r] : rates) s += r;
      return s;
    };
    const auto ma = chain::build_assortative_matrix(p, 2);
    CHECK(sum_rates(metrics::analytic_team_rates(ma, solve::stationary_direct(ma))) ==
          Catch::Approx(1.0).margin(1e-12));
    const auto md = chain::build_disassortative_matrix(p, 2, 2);
    CHECK(sum_rates(metrics::analytic_team_rates(md, solve::stationary_direct(md))) ==
          Catch::Approx(1.0).margin(1e-12));
    const auto mt = chain::build_twoway_matrix(p, 2);
    CHECK(sum_rates(metrics::analytic_team_rates(mt, solve::stationary_direct(mt))) ==
          Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("two-way analytic team rates at the uniform law") {
  // hand computation at p = 1/2, kbar = 1: P(k<0) = P(k>0) = 1/3
  const auto m = chain::build_twoway_matrix(Probability(0.5), 1);
  const auto rates = metrics::analytic_team_rates(m, solve::stationary_direct(m));
  CHECK(rates.at("Hh") == Catch::Approx(5.0 / 12.0).margin(1e-12));
  CHECK(rates.at("Ll") == Catch::Approx(5.0 / 12.0).margin(1e-12));
  CHECK(rates.at("Hl") == Catch::Approx(1.0 / 12.0).margin(1e-12));
  CHECK(rates.at("Lh") == Catch::Approx(1.0 / 12.0).margin(1e-12));
}

TEST_CASE("analytic team rates track simulation counts") {
  const Probability p(0.5);
  const auto m = chain::build_assortative_matrix(p, 2);
  const auto analytic = metrics::analytic_team_rates(m, solve::stationary_direct(m));
  const auto report = mc::simulate(ChainKind::Assortative, p, ThresholdConfig::assortative(2),
                                   200000, 20000, 123);
  const auto empirical = metrics::empirical_team_rates(report);
  for (const auto& [comp, rate] : analytic) {
    CHECK(std::abs(empirical.at(comp) - rate) < 0.01);
  }
}

TEST_CASE("welfare params validation") {
  auto a = metrics::WelfareParams::example_assortative();
  CHECK_NOTHROW(a.validate(ChainKind::Assortative));
  a.match_utilities["HHH"] = 0.1;  // no longer increasing in the High count
  CHECK_THROWS_AS(a.validate(ChainKind::Assortative), std::invalid_argument);

  auto d = metrics::WelfareParams::example_disassortative();
  CHECK_NOTHROW(d.validate(ChainKind::Disassortative));
  d.match_utilities["HLL"] = 1.5;  // breaks U(HHL) == U(HLL)
  CHECK_THROWS_AS(d.validate(ChainKind::Disassortative), std::invalid_argument);

  auto t = metrics::WelfareParams::example_twoway();
  CHECK_NOTHROW(t.validate(ChainKind::TwoWay));
  t.match_utilities["Hh"] = 0.0;  // surplus no longer positive
  CHECK_THROWS_AS(t.validate(ChainKind::TwoWay), std::invalid_argument);

  metrics::WelfareParams neg;
  neg.match_utilities = {{"HHH", -1.0}};
  CHECK_THROWS_AS(neg.validate(ChainKind::Assortative), std::invalid_argument);
}

TEST_CASE("threshold sweep flags the argmax and matches direct evaluation") {
  const Probability p(0.5);
  const auto w = metrics::WelfareParams::example_assortative(0.05);

  const auto single = metrics::threshold_sweep(ChainKind::Assortative, p,
                                               {ThresholdConfig::assortative(2)}, w);
  REQUIRE(single.size() == 1);
  CHECK(single[0].best);

  std::vector<ThresholdConfig> range;
  for (int k = 1; k <= 4; ++k) range.push_back(ThresholdConfig::assortative(k));
  const auto rows = metrics::threshold_sweep(ChainKind::Assortative, p, range, w);
  REQUIRE(rows.size() == 4);
  int best_count = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    best_count += rows[i].best;
    const auto m = chain::build_assortative_matrix(p, range[i].k_bar);
    const auto dist = solve::stationary_direct(m);
    const double direct =
        metrics::welfare_rate(dist, m, w, metrics::analytic_team_rates(m, dist));
    CHECK(rows[i].welfare == Catch::Approx(direct).margin(1e-15));
  }
  CHECK(best_count == 1);

  CHECK_THROWS_AS(metrics::threshold_sweep(ChainKind::Assortative, p, {}, w),
                  std::invalid_argument);
}

TEST_CASE("constant utilities and zero cost make welfare flat; ties go to the smallest") {
  metrics::WelfareParams w;
  w.match_utilities = {{"HHH", 2.0}, {"HHL", 2.0}, {"HLL", 2.0}, {"LLL", 2.0}};
  w.waiting_cost = 0.0;

  std::vector<ThresholdConfig> range;
  for (int k = 1; k <= 4; ++k) range.push_back(ThresholdConfig::assortative(k));
  const auto rows = metrics::threshold_sweep(ChainKind::Assortative, Probability(0.5), range, w);
  for (const auto& r : rows) {
    CHECK(r.welfare == Catch::Approx(2.0).margin(1e-11));  // one team per period
  }
  CHECK(rows[0].best);  // earliest (smallest threshold) wins the tie
}
