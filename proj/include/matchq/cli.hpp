// Command-line front end: chain construction, solving, simulation, welfare
// sweeps, machine-readable CSV/JSON emission. All logic lives here behind
// run() so tests can drive the exact byte output without spawning processes.
#pragma once

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "matchq/matchq.hpp"

namespace matchq::cli {

using Row = nlohmann::ordered_json;

struct Table {
  std::vector<std::string> columns;
  std::vector<Row> rows;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
};

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::string cell(const nlohmann::ordered_json& v) {
  if (v.is_number_float()) return fmt17(v.get<double>());
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  return v.dump();
}

}  // namespace detail

inline void write_csv(const Table& t, std::ostream& out) {
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    out << (c ? "," : "") << t.columns[c];
  }
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      out << (c ? "," : "") << detail::cell(row.at(t.columns[c]));
    }
    out << '\n';
  }
  for (const auto& [key, value] : t.meta.items()) {
    out << "# " << key << "=" << detail::cell(value) << '\n';
  }
}

inline void write_json(const Table& t, std::ostream& out) {
  nlohmann::ordered_json doc;
  doc["meta"] = t.meta;
  doc["rows"] = t.rows;
  out << doc.dump(2) << '\n';
}

inline void write_table(const Table& t, const std::string& format, std::ostream& out) {
  if (format == "json") {
    write_json(t, out);
  } else {
    write_csv(t, out);
  }
}

// ---------------------------------------------------------------------------
// Argument helpers

struct GridSpec {
  double start = 0.0, stop = 0.0, step = 0.0;

  std::vector<double> points() const {
    const int n = static_cast<int>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(start + i * step);
    return out;
  }
};

inline GridSpec parse_grid(const std::string& spec) {
  GridSpec g;
  char extra = 0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%lf%c", &g.start, &g.stop, &g.step, &extra) != 3) {
    throw std::invalid_argument("grid must be start:stop:step, got '" + spec + "'");
  }
  if (!(g.step > 0.0)) throw std::invalid_argument("grid step must be positive");
  if (g.start > g.stop) throw std::invalid_argument("empty grid: start > stop");
  if (!(g.start > 0.0 && g.stop < 1.0)) {
    throw std::invalid_argument("grid must satisfy 0 < start <= stop < 1");
  }
  return g;
}

inline std::vector<int> parse_int_list(const std::string& spec) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos < spec.size()) {
    std::size_t next = spec.find(',', pos);
    if (next == std::string::npos) next = spec.size();
    const std::string tok = spec.substr(pos, next - pos);
    try {
      std::size_t used = 0;
      const int v = std::stoi(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad integer list entry '" + tok + "'");
    }
    pos = next + 1;
  }
  if (out.empty()) throw std::invalid_argument("empty integer list");
  return out;
}

inline std::map<std::string, double> parse_utilities(const std::string& spec) {
  std::map<std::string, double> out;
  std::size_t pos = 0;
  while (pos < spec.size()) {
    std::size_t next = spec.find(',', pos);
    if (next == std::string::npos) next = spec.size();
    const std::string tok = spec.substr(pos, next - pos);
    const std::size_t eq = tok.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("utility entries look like COMP=VALUE, got '" + tok + "'");
    }
    out[tok.substr(0, eq)] = std::stod(tok.substr(eq + 1));
    pos = next + 1;
  }
  return out;
}

inline ChainKind parse_kind(const std::string& kind) {
  if (kind == "twoway") return ChainKind::TwoWay;
  if (kind == "assortative") return ChainKind::Assortative;
  if (kind == "disassortative") return ChainKind::Disassortative;
  throw std::invalid_argument("unknown chain kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Row emission per chain kind

namespace detail {

inline void twoway_rows(Table& t, double p, int kbar, const StationaryDistribution& dist,
                        const std::vector<SignedQueueState>& states) {
  for (std::size_t i = 0; i < states.size(); ++i) {
    Row r;
    r["p"] = p;
    r["kbar"] = kbar;
    r["k"] = states[i].k;
    r["pi"] = dist.probs[i];
    t.rows.push_back(std::move(r));
  }
}

inline void disassortative_rows(Table& t, double p, int kh, int kl,
                                const StationaryDistribution& dist,
                                const std::vector<SignedQueueState>& states) {
  for (std::size_t i = 0; i < states.size(); ++i) {
    Row r;
    r["p"] = p;
    r["kh"] = kh;
    r["kl"] = kl;
    r["k"] = states[i].k;
    r["pi"] = dist.probs[i];
    t.rows.push_back(std::move(r));
  }
}

inline void assortative_full_rows(Table& t, double p, int kbar, const StationaryDistribution& dist,
                                  const std::vector<AssortativeState>& states) {
  for (std::size_t i = 0; i < states.size(); ++i) {
    Row r;
    r["p"] = p;
    r["kbar"] = kbar;
    r["a1"] = states[i].a[0];
    r["a2"] = states[i].a[1];
    r["a3"] = states[i].a[2];
    r["pi"] = dist.probs[i];
    t.rows.push_back(std::move(r));
  }
}

inline void assortative_lumped_rows(Table& t, double p, int kbar, const chain::LumpedChain& lumped,
                                    const StationaryDistribution& class_totals) {
  for (std::size_t i = 0; i < lumped.matrix.states.size(); ++i) {
    Row r;
    r["p"] = p;
    r["kbar"] = kbar;
    r["class"] = static_cast<int>(i) + 1;
    r["a1"] = lumped.matrix.states[i].a[0];
    r["a2"] = lumped.matrix.states[i].a[1];
    r["a3"] = lumped.matrix.states[i].a[2];
    r["multiplicity"] = lumped.multiplicity[i];
    r["pi_class"] = class_totals.probs[i] / lumped.multiplicity[i];
    r["pi_weighted"] = class_totals.probs[i];
    t.rows.push_back(std::move(r));
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands

struct CommonArgs {
  std::string kind;
  double p = 0.5;
  int kbar = -1;
  int kh = -1;
  int kl = -1;
  bool lumped = false;
  std::string format;
};

inline void require_thresholds(const CommonArgs& a, ChainKind kind) {
  if (kind == ChainKind::Disassortative) {
    if (a.kh < 0 || a.kl < 0) {
      throw std::invalid_argument("disassortative needs --kh and --kl (>= 0)");
    }
  } else if (a.kbar < 0) {
    throw std::invalid_argument(a.kind + " needs --kbar");
  }
  if (a.lumped && kind != ChainKind::Assortative) {
    throw std::invalid_argument("--lumped applies to the assortative chain only");
  }
}

inline int cmd_solve(const CommonArgs& a, std::ostream& out) {
  const ChainKind kind = parse_kind(a.kind);
  require_thresholds(a, kind);
  const Probability p(a.p);

  Table t;
  double residual = 0.0;
  switch (kind) {
    case ChainKind::TwoWay: {
      t.columns = {"p", "kbar", "k", "pi"};
      const auto m = chain::build_twoway_matrix(p, a.kbar);
      const auto dist = solve::stationary_direct(m);
      residual = dist.residual;
      detail::twoway_rows(t, a.p, a.kbar, dist, m.states);
      break;
    }
    case ChainKind::Disassortative: {
      t.columns = {"p", "kh", "kl", "k", "pi"};
      const auto m = chain::build_disassortative_matrix(p, a.kh, a.kl);
      const auto dist = solve::stationary_direct(m);
      residual = dist.residual;
      detail::disassortative_rows(t, a.p, a.kh, a.kl, dist, m.states);
      break;
    }
    case ChainKind::Assortative: {
      const auto m = chain::build_assortative_matrix(p, a.kbar);
      if (a.lumped) {
        t.columns = {"p", "kbar", "class", "a1", "a2", "a3", "multiplicity", "pi_class",
                     "pi_weighted"};
        const auto lumped = chain::lump_by_symmetry(m);
        const auto dist = solve::stationary_direct(lumped);
        residual = dist.residual;
        detail::assortative_lumped_rows(t, a.p, a.kbar, lumped, dist);
      } else {
        t.columns = {"p", "kbar", "a1", "a2", "a3", "pi"};
        const auto dist = solve::stationary_direct(m);
        residual = dist.residual;
        detail::assortative_full_rows(t, a.p, a.kbar, dist, m.states);
      }
      break;
    }
  }
  t.meta["method"] = to_string(SolveMethod::DirectSolve);
  t.meta["residual"] = residual;
  t.meta["version"] = kVersion;
  write_table(t, a.format, out);
  return 0;
}

struct SweepArgs {
  CommonArgs common;
  std::string p_grid;
  std::string kh_list;
  std::string kl_list;
};

inline int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  const ChainKind kind = parse_kind(a.common.kind);
  Table t;
  double max_residual = 0.0;

  if (kind == ChainKind::Disassortative) {
    if (a.kh_list.empty() || a.kl_list.empty()) {
      throw std::invalid_argument("sweep disassortative needs --kh-list and --kl-list");
    }
    const Probability p(a.common.p);
    t.columns = {"p", "kh", "kl", "k", "pi"};
    for (int kh : parse_int_list(a.kh_list)) {
      for (int kl : parse_int_list(a.kl_list)) {
        const auto m = chain::build_disassortative_matrix(p, kh, kl);
        const auto dist = solve::stationary_direct(m);
        max_residual = std::max(max_residual, dist.residual);
        detail::disassortative_rows(t, a.common.p, kh, kl, dist, m.states);
      }
    }
  } else {
    if (a.p_grid.empty()) throw std::invalid_argument("sweep needs --p-grid start:stop:step");
    require_thresholds(a.common, kind);
    const auto grid = parse_grid(a.p_grid).points();
    if (kind == ChainKind::TwoWay) {
      t.columns = {"p", "kbar", "k", "pi"};
      for (double pv : grid) {
        const auto m = chain::build_twoway_matrix(Probability(pv), a.common.kbar);
        const auto dist = solve::stationary_direct(m);
        max_residual = std::max(max_residual, dist.residual);
        detail::twoway_rows(t, pv, a.common.kbar, dist, m.states);
      }
    } else if (a.common.lumped) {
      t.columns = {"p", "kbar", "class", "a1", "a2", "a3", "multiplicity", "pi_class",
                   "pi_weighted"};
      for (double pv : grid) {
        const auto m = chain::build_assortative_matrix(Probability(pv), a.common.kbar);
        const auto lumped = chain::lump_by_symmetry(m);
        const auto dist = solve::stationary_direct(lumped);
        max_residual = std::max(max_residual, dist.residual);
        detail::assortative_lumped_rows(t, pv, a.common.kbar, lumped, dist);
      }
    } else {
      t.columns = {"p", "kbar", "a1", "a2", "a3", "pi"};
      for (double pv : grid) {
        const auto m = chain::build_assortative_matrix(Probability(pv), a.common.kbar);
        const auto dist = solve::stationary_direct(m);
        max_residual = std::max(max_residual, dist.residual);
        detail::assortative_full_rows(t, pv, a.common.kbar, dist, m.states);
      }
    }
  }
  t.meta["method"] = to_string(SolveMethod::DirectSolve);
  t.meta["max_residual"] = max_residual;
  t.meta["version"] = kVersion;
  write_table(t, a.common.format, out);
  return 0;
}

struct SimulateArgs {
  CommonArgs common;
  long long steps = 0;
  long long burn_in = -1;  // -1: default to 10% of steps
  std::uint64_t seed = 0;
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const ChainKind kind = parse_kind(a.common.kind);
  require_thresholds(a.common, kind);
  if (a.steps <= 0) throw std::invalid_argument("--steps must be positive");
  const long long burn_in = a.burn_in >= 0 ? a.burn_in : a.steps / 10;
  const Probability p(a.common.p);

  ThresholdConfig th;
  StationaryDistribution exact;
  Table t;
  switch (kind) {
    case ChainKind::TwoWay:
      th = ThresholdConfig::two_way(a.common.kbar);
      exact = solve::stationary_direct(chain::build_twoway_matrix(p, a.common.kbar));
      break;
    case ChainKind::Assortative:
      th = ThresholdConfig::assortative(a.common.kbar);
      exact = solve::stationary_direct(chain::build_assortative_matrix(p, a.common.kbar));
      break;
    case ChainKind::Disassortative:
      th = ThresholdConfig::disassortative(a.common.kh, a.common.kl);
      exact = solve::stationary_direct(chain::build_disassortative_matrix(p, a.common.kh, a.common.kl));
      break;
  }

  const auto report = mc::simulate(kind, p, th, a.steps, burn_in, a.seed);
  const double tv = total_variation(report.empirical.probs, exact.probs);

  switch (kind) {
    case ChainKind::TwoWay: {
      t.columns = {"p", "kbar", "k", "count", "pi_empirical", "pi_exact"};
      const auto states = chain::enumerate_signed_states(-a.common.kbar, a.common.kbar);
      for (std::size_t i = 0; i < states.size(); ++i) {
        Row r;
        r["p"] = a.common.p;
        r["kbar"] = a.common.kbar;
        r["k"] = states[i].k;
        r["count"] = report.occupancy[i];
        r["pi_empirical"] = report.empirical.probs[i];
        r["pi_exact"] = exact.probs[i];
        t.rows.push_back(std::move(r));
      }
      break;
    }
    case ChainKind::Assortative: {
      t.columns = {"p", "kbar", "a1", "a2", "a3", "count", "pi_empirical", "pi_exact"};
      const auto states = chain::enumerate_assortative_states(a.common.kbar);
      for (std::size_t i = 0; i < states.size(); ++i) {
        Row r;
        r["p"] = a.common.p;
        r["kbar"] = a.common.kbar;
        r["a1"] = states[i].a[0];
        r["a2"] = states[i].a[1];
        r["a3"] = states[i].a[2];
        r["count"] = report.occupancy[i];
        r["pi_empirical"] = report.empirical.probs[i];
        r["pi_exact"] = exact.probs[i];
        t.rows.push_back(std::move(r));
      }
      break;
    }
    case ChainKind::Disassortative: {
      t.columns = {"p", "kh", "kl", "k", "count", "pi_empirical", "pi_exact"};
      const auto states = chain::enumerate_signed_states(-a.common.kl, a.common.kh);
      for (std::size_t i = 0; i < states.size(); ++i) {
        Row r;
        r["p"] = a.common.p;
        r["kh"] = a.common.kh;
        r["kl"] = a.common.kl;
        r["k"] = states[i].k;
        r["count"] = report.occupancy[i];
        r["pi_empirical"] = report.empirical.probs[i];
        r["pi_exact"] = exact.probs[i];
        t.rows.push_back(std::move(r));
      }
      break;
    }
  }

  t.meta["method"] = to_string(SolveMethod::Empirical);
  t.meta["steps"] = report.steps;
  t.meta["burn_in"] = report.burn_in;
  t.meta["seed"] = report.seed;
  t.meta["tv_to_exact"] = tv;
  for (const auto& [comp, count] : report.team_counts) {
    t.meta["team_" + comp] = count;
  }
  t.meta["version"] = kVersion;
  write_table(t, a.common.format, out);
  return 0;
}

struct WelfareArgs {
  CommonArgs common;
  std::string kbar_list;
  std::string kh_list;
  std::string kl_list;
  std::string utilities;
  double c = 0.1;
};

inline int cmd_welfare(const WelfareArgs& a, std::ostream& out) {
  const ChainKind kind = parse_kind(a.common.kind);
  const Probability p(a.common.p);

  metrics::WelfareParams w;
  switch (kind) {
    case ChainKind::TwoWay: w = metrics::WelfareParams::example_twoway(a.c); break;
    case ChainKind::Assortative: w = metrics::WelfareParams::example_assortative(a.c); break;
    case ChainKind::Disassortative: w = metrics::WelfareParams::example_disassortative(a.c); break;
  }
  if (!a.utilities.empty()) {
    for (const auto& [comp, u] : parse_utilities(a.utilities)) w.match_utilities[comp] = u;
  }
  w.waiting_cost = a.c;
  w.validate(kind);

  std::vector<ThresholdConfig> thresholds;
  if (kind == ChainKind::Disassortative) {
    if (a.kh_list.empty() || a.kl_list.empty()) {
      throw std::invalid_argument("welfare disassortative needs --kh-list and --kl-list");
    }
    for (int kh : parse_int_list(a.kh_list)) {
      for (int kl : parse_int_list(a.kl_list)) {
        thresholds.push_back(ThresholdConfig::disassortative(kh, kl));
      }
    }
  } else {
    if (a.kbar_list.empty()) throw std::invalid_argument("welfare needs --kbar-list");
    for (int k : parse_int_list(a.kbar_list)) {
      thresholds.push_back(kind == ChainKind::Assortative ? ThresholdConfig::assortative(k)
                                                          : ThresholdConfig::two_way(k));
    }
  }

  const auto rows = metrics::threshold_sweep(kind, p, thresholds, w);

  Table t;
  if (kind == ChainKind::Disassortative) {
    t.columns = {"p", "kh", "kl", "welfare_rate", "mean_total_waiting", "best"};
    for (const auto& r : rows) {
      Row row;
      row["p"] = a.common.p;
      row["kh"] = r.thresholds.k_high;
      row["kl"] = r.thresholds.k_low;
      row["welfare_rate"] = r.welfare;
      row["mean_total_waiting"] = r.mean_total_waiting;
      row["best"] = r.best;
      t.rows.push_back(std::move(row));
    }
  } else {
    t.columns = {"p", "kbar", "welfare_rate", "mean_total_waiting", "best"};
    for (const auto& r : rows) {
      Row row;
      row["p"] = a.common.p;
      row["kbar"] = r.thresholds.k_bar;
      row["welfare_rate"] = r.welfare;
      row["mean_total_waiting"] = r.mean_total_waiting;
      row["best"] = r.best;
      t.rows.push_back(std::move(row));
    }
  }
  t.meta["method"] = to_string(SolveMethod::DirectSolve);
  t.meta["waiting_cost"] = a.c;
  t.meta["version"] = kVersion;
  write_table(t, a.common.format, out);
  return 0;
}

// ---------------------------------------------------------------------------
// Entry point

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"matchq: threshold matching-market Markov chains"};
  app.require_subcommand(1);

  const char* env_format = std::getenv("MATCHQ_FORMAT");
  const std::string default_format = env_format ? env_format : "csv";

  const auto add_common = [&](CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("kind", a.kind, "chain kind: twoway | assortative | disassortative")
        ->required()
        ->check(CLI::IsMember({"twoway", "assortative", "disassortative"}));
    cmd->add_option("--kbar", a.kbar, "threshold for twoway/assortative");
    cmd->add_option("--kh", a.kh, "dis-assortative High threshold");
    cmd->add_option("--kl", a.kl, "dis-assortative Low threshold");
    cmd->add_option("--format", a.format, "output format: csv | json")
        ->default_val(default_format)
        ->check(CLI::IsMember({"csv", "json"}));
  };

  CommonArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "exact stationary distribution of one chain");
  add_common(solve_cmd, solve_args);
  solve_cmd->add_option("--p", solve_args.p, "High-type proportion in (0,1)")->required();
  solve_cmd->add_flag("--lumped", solve_args.lumped, "solve the symmetry-lumped assortative chain");

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "stationary laws over a parameter grid");
  add_common(sweep_cmd, sweep_args.common);
  sweep_cmd->add_option("--p", sweep_args.common.p, "High-type proportion (disassortative sweeps)");
  sweep_cmd->add_option("--p-grid", sweep_args.p_grid, "p grid start:stop:step");
  sweep_cmd->add_option("--kh-list", sweep_args.kh_list, "comma-separated High thresholds");
  sweep_cmd->add_option("--kl-list", sweep_args.kl_list, "comma-separated Low thresholds");
  sweep_cmd->add_flag("--lumped", sweep_args.common.lumped,
                      "emit symmetry-lumped classes instead of full states");

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "seeded full-market Monte Carlo run");
  add_common(sim_cmd, sim_args.common);
  sim_cmd->add_option("--p", sim_args.common.p, "High-type proportion in (0,1)")->required();
  sim_cmd->add_option("--steps", sim_args.steps, "number of periods")->required();
  sim_cmd->add_option("--seed", sim_args.seed, "RNG seed")->required();
  sim_cmd->add_option("--burn-in", sim_args.burn_in, "periods discarded (default steps/10)");

  WelfareArgs welfare_args;
  auto* welfare_cmd = app.add_subcommand("welfare", "welfare rate across thresholds");
  add_common(welfare_cmd, welfare_args.common);
  welfare_cmd->add_option("--p", welfare_args.common.p, "High-type proportion in (0,1)")->required();
  welfare_cmd->add_option("--c", welfare_args.c, "waiting cost per agent per period");
  welfare_cmd->add_option("--kbar-list", welfare_args.kbar_list, "thresholds to sweep");
  welfare_cmd->add_option("--kh-list", welfare_args.kh_list, "High thresholds to sweep");
  welfare_cmd->add_option("--kl-list", welfare_args.kl_list, "Low thresholds to sweep");
  welfare_cmd->add_option("--u", welfare_args.utilities,
                          "utility overrides, e.g. HHH=3,HHL=2,HLL=1,LLL=0.5");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("matchq");
  for (const auto& s : args) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "argument error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve(solve_args, out);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_args, out);
    if (sim_cmd->parsed()) return cmd_simulate(sim_args, out);
    if (welfare_cmd->parsed()) return cmd_welfare(welfare_args, out);
  } catch (const std::invalid_argument& e) {
    err << "argument error: " << e.what() << '\n';
    return 2;
  } catch (const SimulationInvariantError& e) {
    err << "simulation failure: " << e.what() << "\n  trace: " << e.trace << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace matchq::cli
