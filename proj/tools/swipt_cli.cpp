#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

#include "CLI11.hpp"
#include "swipt/bd_precoding.hpp"
#include "swipt/scenario_io.hpp"
#include "swipt/simulator.hpp"
#include "swipt/solver.hpp"

namespace {

using namespace swipt;

enum ExitCode {
  kOk = 0,
  kUsage = 1,
  kParse = 2,
  kInfeasible = 3,
  kIterationLimit = 4,
  kIo = 5,
};

struct CommonOpts {
  std::string scenario_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> frames;
  std::string strategy;
  std::string grid;
};

ScenarioDocument load_with_overrides(const CommonOpts& opts) {
  ScenarioDocument doc = load_scenario(opts.scenario_path);
  if (opts.seed) doc.scenario.rng_seed = *opts.seed;
  if (opts.frames) doc.scenario.total_frames = *opts.frames;
  if (!opts.strategy.empty()) {
    doc.scenario.grouping.strategy = parse_strategy(opts.strategy);
  }
  return doc;
}

std::string ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw std::system_error(ec, "cannot create output directory " + dir);
  }
  return dir;
}

void print_num(const char* label, double v) {
  std::printf("%s %.9g\n", label, v);
}

int run_solve(const CommonOpts& opts) {
  const ScenarioDocument doc = load_with_overrides(opts);
  const ScenarioConfig& sc = doc.scenario;
  if (!doc.snapshot) {
    throw std::runtime_error(
        "scenario: solve needs a snapshot block naming info/harvest users");
  }
  const UserSets& sets = doc.snapshot->sets;

  ChannelSet channels;
  if (doc.snapshot->channels) {
    channels = *doc.snapshot->channels;
  } else {
    std::mt19937_64 rng = make_substream(sc.rng_seed, "channels");
    channels = generate_channels(rng, sc);
  }
  const double budget = sc.power.radiated_budget();

  if (sets.info.empty()) {
    if (sets.harvest.empty()) {
      throw std::runtime_error("scenario: snapshot selects no users");
    }
    std::vector<ChannelMatrix> hs;
    Eigen::VectorXd q(sets.harvest.size());
    for (std::size_t j = 0; j < sets.harvest.size(); ++j) {
      hs.push_back(channels.of(sets.harvest[j]));
      q[j] = sc.terminals[sets.harvest[j]].q_target;
    }
    const FeasibilityResult fr = harvest_feasibility(hs, q, budget, sc.solver);
    std::printf("mode harvest-only\n");
    print_num("min_power", fr.min_power);
    print_num("budget", budget);
    for (std::size_t j = 0; j < sets.harvest.size(); ++j) {
      const double got = harvested_power(channels.of(sets.harvest[j]), {fr.s},
                                         1.0);
      std::printf("user %d: harvested %.9g (target %.9g)\n", sets.harvest[j],
                  got, q[j]);
    }
    if (!fr.feasible) {
      std::fprintf(stderr, "infeasible: min power exceeds the budget\n");
      return kInfeasible;
    }
    return kOk;
  }

  EffectiveChannels eff;
  try {
    eff = build_effective_channels(channels, sets);
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return kInfeasible;
  }
  std::vector<double> weights(sets.info.size(), 1.0);
  Eigen::VectorXd q(sets.harvest.size());
  for (std::size_t j = 0; j < sets.harvest.size(); ++j) {
    q[j] = sc.terminals[sets.harvest[j]].q_target;
  }

  Allocation alloc;
  try {
    alloc = sets.harvest.empty()
                ? solve_wsr_info_only(eff, weights, budget, sc.solver)
                : solve_wsr_harvest(eff, weights, q, budget, sc.solver);
  } catch (const IterationLimitError& e) {
    std::fprintf(stderr, "iteration limit: %s\n", e.what());
    return kIterationLimit;
  }

  std::printf("status %s\n", alloc.feasible ? "converged" : "infeasible");
  double sr = 0.0;
  for (std::size_t i = 0; i < sets.info.size(); ++i) {
    std::printf("user %d: rate %.9g\n", sets.info[i], alloc.rates[i]);
    sr += alloc.rates[i];
  }
  for (std::size_t j = 0; j < sets.harvest.size(); ++j) {
    std::printf("user %d: harvested %.9g (target %.9g)\n", sets.harvest[j],
                alloc.harvested[j], q[j]);
  }
  print_num("sum_rate", sr);
  print_num("total_power", alloc.total_power());
  print_num("mu", alloc.duals.mu);
  for (Eigen::Index j = 0; j < alloc.duals.lambdas.size(); ++j) {
    std::printf("lambda_%td %.9g\n", static_cast<std::ptrdiff_t>(j + 1),
                alloc.duals.lambdas[j]);
  }
  print_num("kkt_power_violation", alloc.kkt.power_violation);
  print_num("kkt_harvest_violation", alloc.kkt.harvest_violation);
  print_num("kkt_comp_power", alloc.kkt.comp_power);
  print_num("kkt_comp_harvest", alloc.kkt.comp_harvest);
  std::printf("iterations %d\n", alloc.iterations);
  if (!alloc.feasible) {
    std::fprintf(stderr, "infeasible: %s\n", alloc.diagnostic.c_str());
    return kInfeasible;
  }
  return kOk;
}

int run_simulate(const CommonOpts& opts) {
  const ScenarioDocument doc = load_with_overrides(opts);
  const ScenarioConfig& sc = doc.scenario;
  const SimTrace trace = run_simulation(sc);
  const std::string dir = ensure_out_dir(opts.out_dir);
  const std::uint64_t hash = config_hash(sc);
  write_battery_trace(dir + "/battery_trace.csv", trace, sc.rng_seed, hash);
  write_sumrate_trace(dir + "/sumrate_trace.csv", trace, sc.rng_seed, hash);
  write_rate_samples(dir + "/rate_samples.csv", trace, sc.rng_seed, hash);
  write_harvest_trace(dir + "/harvest_trace.csv", trace, sc.rng_seed, hash);
  write_groups_trace(dir + "/groups_trace.csv", trace, sc.rng_seed, hash);
  const MetricsSummary m = metrics(trace);
  print_num("final_avg_sum_rate", m.final_avg_sr);
  print_num("aggregate_harvested", m.aggregate_harvested);
  return kOk;
}

std::vector<int> parse_grid_counts(const std::string& spec, int axes) {
  std::vector<int> counts;
  std::string token;
  for (char c : spec + "x") {
    if (c == 'x' || c == 'X') {
      if (token.empty()) throw CLI::ValidationError("--grid", "empty count");
      counts.push_back(std::stoi(token));
      token.clear();
    } else if (c >= '0' && c <= '9') {
      token.push_back(c);
    } else {
      throw CLI::ValidationError("--grid",
                                 "expected counts like '25' or '25x25'");
    }
  }
  if (counts.size() == 1) counts.assign(axes, counts.front());
  if (static_cast<int>(counts.size()) != axes) {
    throw CLI::ValidationError("--grid", "one count per harvest user needed");
  }
  for (int c : counts) {
    if (c < 2) throw CLI::ValidationError("--grid", "counts must be >= 2");
  }
  return counts;
}

int run_rp_region(const CommonOpts& opts) {
  const ScenarioDocument doc = load_with_overrides(opts);
  const ScenarioConfig& sc = doc.scenario;
  if (!doc.snapshot || doc.snapshot->sets.info.empty() ||
      doc.snapshot->sets.harvest.empty()) {
    throw std::runtime_error(
        "scenario: rp-region needs a snapshot with info and harvest users");
  }
  const UserSets& sets = doc.snapshot->sets;
  const int m = static_cast<int>(sets.harvest.size());

  ChannelSet channels;
  if (doc.snapshot->channels) {
    channels = *doc.snapshot->channels;
  } else {
    std::mt19937_64 rng = make_substream(sc.rng_seed, "channels");
    channels = generate_channels(rng, sc);
  }
  const double budget = sc.power.radiated_budget();
  const std::vector<int> counts =
      parse_grid_counts(opts.grid.empty() ? "25" : opts.grid, m);

  Eigen::VectorXd q_max(m);
  for (int j = 0; j < m; ++j) {
    const CxMatrix& h = channels.of(sets.harvest[j]).entries;
    Eigen::SelfAdjointEigenSolver<CxMatrix> eig(
        CxMatrix(h.adjoint() * h));
    q_max[j] = budget * eig.eigenvalues().maxCoeff();
  }

  std::vector<Eigen::VectorXd> grid;
  std::vector<int> idx(m, 0);
  while (true) {
    Eigen::VectorXd q(m);
    for (int j = 0; j < m; ++j) {
      q[j] = q_max[j] * idx[j] / (counts[j] - 1);
    }
    grid.push_back(q);
    int axis = m - 1;
    while (axis >= 0 && ++idx[axis] == counts[axis]) idx[axis--] = 0;
    if (axis < 0) break;
  }

  const std::vector<double> weights(sets.info.size(), 1.0);
  const RpRegion region =
      rp_region_sweep(channels, sets, weights, budget, grid, sc.solver);
  const std::string dir = ensure_out_dir(opts.out_dir);
  const std::uint64_t hash = config_hash(sc);
  write_rp_surface(dir + "/rp_surface.csv", region, sc.rng_seed, hash);
  write_boundary_points(dir + "/boundary_points.csv", region, sc.rng_seed,
                        hash);
  print_num("sr_max", region.boundary.sr_max);
  return kOk;
}

int run_grouping_compare(const CommonOpts& opts,
                         std::vector<std::string> strategies) {
  const ScenarioDocument doc = load_with_overrides(opts);
  if (strategies.empty()) {
    strategies = {"LB-DHS", "LB-CHS",       "RR",
                  "Random", "no-harvest-mgmt", "no-swipt"};
  }

  std::vector<ComparisonRow> rows;
  for (const std::string& name : strategies) {
    ScenarioConfig sc = doc.scenario;
    sc.grouping.strategy = parse_strategy(name);

    const auto start = std::chrono::steady_clock::now();
    const SimTrace trace = run_simulation(sc);
    const auto stop = std::chrono::steady_clock::now();
    const MetricsSummary m = metrics(trace);

    ComparisonRow row;
    row.strategy = strategy_name(sc.grouping.strategy);
    row.avg_sum_rate = m.final_avg_sr;
    row.aggregate_harvested = m.aggregate_harvested;
    row.ms_per_frame =
        std::chrono::duration<double, std::milli>(stop - start).count() /
        sc.total_frames;
    rows.push_back(row);
    std::printf("%s: avg_sr %.9g harvested %.9g ms/frame %.3g\n",
                row.strategy.c_str(), row.avg_sum_rate,
                row.aggregate_harvested, row.ms_per_frame);
  }

  const std::string dir = ensure_out_dir(opts.out_dir);
  write_comparison(dir + "/comparison.csv", rows, doc.scenario.rng_seed,
                   config_hash(doc.scenario));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiuser MIMO SWIPT cell: solver, simulator and sweeps"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::vector<std::string> compare_strategies;

  auto add_common = [&](CLI::App* cmd, bool wants_strategy) {
    cmd->add_option("--scenario", opts.scenario_path, "scenario JSON file")
        ->required();
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "override the scenario RNG seed");
    cmd->add_option("--frames", opts.frames, "override total_frames");
    if (wants_strategy) {
      cmd->add_option("--strategy", opts.strategy,
                      "override the grouping strategy");
    }
  };

  CLI::App* solve = app.add_subcommand(
      "solve", "solve one frame snapshot and report the allocation");
  add_common(solve, false);

  CLI::App* simulate =
      app.add_subcommand("simulate", "run the frame loop and write traces");
  add_common(simulate, true);

  CLI::App* rp = app.add_subcommand(
      "rp-region", "sweep the rate-power region over a target grid");
  add_common(rp, false);
  rp->add_option("--grid", opts.grid, "points per axis, e.g. 25 or 25x25");

  CLI::App* compare = app.add_subcommand(
      "grouping-compare", "run several strategies on shared channels");
  add_common(compare, false);
  compare->add_option("--strategy", compare_strategies,
                      "strategies to compare (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (solve->parsed()) return run_solve(opts);
    if (simulate->parsed()) return run_simulate(opts);
    if (rp->parsed()) return run_rp_region(opts);
    if (compare->parsed()) return run_grouping_compare(opts, compare_strategies);
  } catch (const IterationLimitError& e) {
    std::fprintf(stderr, "iteration limit: %s\n", e.what());
    return kIterationLimit;
  } catch (const std::system_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kParse;
  }
  return kUsage;
}
