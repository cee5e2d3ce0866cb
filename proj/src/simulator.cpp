#include "swipt/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "linalg_util.hpp"
#include "swipt/bd_precoding.hpp"

namespace swipt {

namespace {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<int> servable_users(const std::vector<int>& ids,
                                const std::vector<TerminalState>& terminals,
                                const PowerModel& power, double t_f) {
  std::vector<int> out;
  for (int id : ids) {
    if (max_rate(terminals[id].battery, power, t_f) > 0.0) out.push_back(id);
  }
  return out;
}

struct FrameDecision {
  UserSets groups;
  Allocation alloc;           // valid when solved == true
  CxMatrix energy_cov;        // valid when energy_only == true
  bool solved = false;
  bool energy_only = false;
  bool feasible = true;
};

}  // namespace

std::mt19937_64 make_substream(std::uint64_t seed, std::string_view name) {
  return std::mt19937_64(seed ^ fnv1a64(name));
}

SimState init_state(const ScenarioConfig& scenario) {
  SimState state;
  state.channel_rng = make_substream(scenario.rng_seed, "channels");
  state.grouping_rng = make_substream(scenario.rng_seed, "random-grouping");
  std::mt19937_64 battery_rng = make_substream(scenario.rng_seed, "batteries");

  for (int i = 0; i < scenario.num_users(); ++i) {
    const TerminalConfig& cfg = scenario.terminals[i];
    TerminalState t;
    t.user_id = i;
    t.capacity = cfg.capacity;
    if (t.capacity <= 0.0) {
      std::uniform_real_distribution<double> draw(3000.0, 10000.0);
      t.capacity = draw(battery_rng);
    }
    t.battery = cfg.initial_battery >= 0.0
                    ? std::min(cfg.initial_battery, t.capacity)
                    : scenario.initial_battery_frac * t.capacity;
    t.zeta = cfg.zeta;
    t.q_min = cfg.q_target;
    t.pf_avg = kPfFloor;
    t.weight = 1.0 / kPfFloor;
    t.n_antennas = cfg.antennas;
    state.terminals.push_back(t);
  }
  return state;
}

ChannelSet generate_channels(std::mt19937_64& rng,
                             const ScenarioConfig& scenario) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  ChannelSet set;
  for (int i = 0; i < scenario.num_users(); ++i) {
    const TerminalConfig& cfg = scenario.terminals[i];
    const double gain =
        std::pow(cfg.distance, -scenario.pathloss_exponent / 2.0);
    ChannelMatrix h;
    h.user_id = i;
    h.entries.resize(cfg.antennas, scenario.n_t);
    for (int r = 0; r < cfg.antennas; ++r) {
      for (int c = 0; c < scenario.n_t; ++c) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        h.entries(r, c) = gain * inv_sqrt2 * Complex(re, im);
      }
    }
    set.users.push_back(std::move(h));
  }
  return set;
}

namespace {

/// Grouping plus allocation for one frame; feasible == false means the
/// frame transmits nothing.
FrameDecision decide_frame(SimState& state, const ChannelSet& channels,
                           const ScenarioConfig& scenario) {
  const int k = scenario.num_users();
  const GroupingConfig& g = scenario.grouping;
  const double budget = scenario.power.radiated_budget();

  std::vector<double> weights(k), q_targets(k);
  for (int i = 0; i < k; ++i) {
    weights[i] = state.terminals[i].weight;
    q_targets[i] = state.terminals[i].q_min;
  }
  const std::vector<double> q_zero(k, 0.0);

  FrameDecision d;
  switch (g.strategy) {
    case Strategy::kDhs: {
      const std::vector<int> cands =
          servable_users(state.supergroups.super_info, state.terminals,
                         scenario.power, scenario.frame.t_f);
      GreedyResult greedy = select_info_greedy(cands, channels, weights,
                                               budget, g.max_info_users);
      d.groups.info = greedy.info;
      d.groups.harvest = select_harvest_decoupled(
          state.supergroups.super_harvest, channels, greedy.allocation,
          q_targets, g.harvest_group_size);
      break;
    }
    case Strategy::kChs:
    case Strategy::kNoHarvestMgmt: {
      const std::vector<int> cands =
          servable_users(state.supergroups.super_info, state.terminals,
                         scenario.power, scenario.frame.t_f);
      const auto& q_used =
          g.strategy == Strategy::kNoHarvestMgmt ? q_zero : q_targets;
      ChsResult chs = select_joint_chs(
          cands, state.supergroups.super_harvest, channels, weights, q_used,
          budget, g.max_info_users, g.per_round_harvest,
          g.harvest_group_size, scenario.solver);
      d.groups.info = chs.info;
      d.groups.harvest = chs.harvest;
      if (d.groups.info.empty() && d.groups.harvest.empty()) {
        // No servable info candidate means no CHS rounds ran; keep the
        // frame charging the way the decoupled path would.
        d.groups.harvest = select_harvest_decoupled(
            state.supergroups.super_harvest, channels, Allocation{}, q_used,
            g.harvest_group_size);
      }
      break;
    }
    case Strategy::kNoSwipt: {
      const std::vector<int> cands =
          servable_users(state.supergroups.super_info, state.terminals,
                         scenario.power, scenario.frame.t_f);
      d.groups.info =
          select_info_greedy(cands, channels, weights, budget,
                             g.max_info_users)
              .info;
      break;
    }
    case Strategy::kRoundRobin:
      d.groups = baseline_round_robin(state.rotation, k, g);
      break;
    case Strategy::kRandom:
      d.groups = baseline_random(state.grouping_rng, k, g);
      break;
  }

  const auto& q_solve =
      g.strategy == Strategy::kNoHarvestMgmt ? q_zero : q_targets;

  if (d.groups.info.empty()) {
    if (d.groups.harvest.empty()) return d;  // idle frame
    std::vector<ChannelMatrix> hs;
    Eigen::VectorXd q(d.groups.harvest.size());
    for (std::size_t j = 0; j < d.groups.harvest.size(); ++j) {
      hs.push_back(channels.of(d.groups.harvest[j]));
      q[j] = q_solve[d.groups.harvest[j]];
    }
    const FeasibilityResult fr =
        harvest_feasibility(hs, q, budget, scenario.solver);
    if (!fr.feasible) {
      d.feasible = false;
      return d;
    }
    d.energy_cov = fr.s;
    d.energy_only = true;
    return d;
  }

  UserSets solve_sets;
  solve_sets.info = d.groups.info;
  solve_sets.harvest = d.groups.harvest;
  std::vector<double> w;
  for (int id : d.groups.info) w.push_back(weights[id]);
  Eigen::VectorXd q(d.groups.harvest.size());
  for (std::size_t j = 0; j < d.groups.harvest.size(); ++j) {
    q[j] = q_solve[d.groups.harvest[j]];
  }

  try {
    const EffectiveChannels eff = build_effective_channels(channels, solve_sets);
    d.alloc = d.groups.harvest.empty()
                  ? solve_wsr_info_only(eff, w, budget, scenario.solver)
                  : solve_wsr_harvest(eff, w, q, budget, scenario.solver);
    d.solved = d.alloc.feasible;
  } catch (const IterationLimitError& e) {
    d.alloc = e.best;
    d.solved = e.best.feasible;
  } catch (const std::runtime_error&) {
    d.solved = false;
  }
  d.feasible = d.solved;
  return d;
}

}  // namespace

FrameRecord run_frame(SimState& state, const ChannelSet& channels,
                      const ScenarioConfig& scenario) {
  const int k = scenario.num_users();

  if (state.frame % scenario.frame.superframe_frames == 0) {
    switch (scenario.grouping.strategy) {
      case Strategy::kDhs:
      case Strategy::kChs:
      case Strategy::kNoHarvestMgmt:
        state.supergroups = supergroup(state.terminals, scenario.frame.alpha);
        break;
      case Strategy::kNoSwipt:
      case Strategy::kRoundRobin:
      case Strategy::kRandom:
        state.supergroups = UserSets{};
        for (int i = 0; i < k; ++i) {
          state.supergroups.super_info.push_back(i);
        }
        break;
    }
  }

  FrameDecision d = decide_frame(state, channels, scenario);

  FrameRecord rec;
  rec.frame = state.frame;
  rec.info_ids = d.groups.info;
  rec.harvest_ids = d.groups.harvest;
  rec.feasible = d.feasible;
  rec.iterations = d.solved ? d.alloc.iterations : 0;

  std::vector<bool> is_info(k, false), is_harvest(k, false);
  std::vector<double> delivered_by_id(k, 0.0), electrical_by_id(k, 0.0);

  if (d.feasible && d.solved) {
    for (std::size_t i = 0; i < d.groups.info.size(); ++i) {
      const int id = d.groups.info[i];
      const double cap =
          max_rate(state.terminals[id].battery, scenario.power,
                   scenario.frame.t_f);
      delivered_by_id[id] = std::min(d.alloc.rates[i], cap);
      is_info[id] = true;
    }
    for (std::size_t j = 0; j < d.groups.harvest.size(); ++j) {
      const int id = d.groups.harvest[j];
      electrical_by_id[id] =
          state.terminals[id].zeta * d.alloc.harvested[j];
      is_harvest[id] = true;
    }
  } else if (d.feasible && d.energy_only) {
    for (std::size_t j = 0; j < d.groups.harvest.size(); ++j) {
      const int id = d.groups.harvest[j];
      const CxMatrix& h = channels.of(id).entries;
      electrical_by_id[id] = state.terminals[id].zeta *
                             (h * d.energy_cov * h.adjoint()).trace().real();
      is_harvest[id] = true;
    }
  } else {
    // Nothing is radiated, but grouped users still burn their frame:
    // information users pay the decode floor, harvesters the front end.
    for (int id : d.groups.info) is_info[id] = true;
    for (int id : d.groups.harvest) is_harvest[id] = true;
  }

  for (int id = 0; id < k; ++id) {
    TerminalState& t = state.terminals[id];
    if (is_info[id]) {
      t = update_battery_info(t, delivered_by_id[id], scenario.power,
                              scenario.frame.t_f);
    } else if (is_harvest[id]) {
      t = update_battery_harvest(t, electrical_by_id[id], scenario.power,
                                 scenario.frame.t_f);
    }
    t = pf_update(t, delivered_by_id[id], scenario.frame.t_c);
    rec.batteries.push_back(t.battery);
  }

  for (int id : d.groups.info) {
    rec.delivered.push_back(delivered_by_id[id]);
    rec.instantaneous_sr += delivered_by_id[id];
  }
  for (int id : d.groups.harvest) {
    rec.harvested.push_back(electrical_by_id[id]);
  }

  state.sum_rate_accum += rec.instantaneous_sr;
  rec.running_avg_sr = state.sum_rate_accum / (state.frame + 1);
  ++state.frame;
  return rec;
}

SimTrace run_simulation(const ScenarioConfig& scenario) {
  if (scenario.total_frames < 1) {
    throw std::invalid_argument("run_simulation: total_frames must be >= 1");
  }
  SimState state = init_state(scenario);
  SimTrace trace;
  trace.num_users = scenario.num_users();
  for (int t = 0; t < scenario.total_frames; ++t) {
    const ChannelSet channels = generate_channels(state.channel_rng, scenario);
    trace.frames.push_back(run_frame(state, channels, scenario));
  }
  return trace;
}

MetricsSummary metrics(const SimTrace& trace) {
  MetricsSummary m;
  m.avg_harvested.assign(trace.num_users, 0.0);
  for (const FrameRecord& rec : trace.frames) {
    m.running_avg_sr.push_back(rec.running_avg_sr);
    std::vector<double> frame_rates(trace.num_users, 0.0);
    for (std::size_t i = 0; i < rec.info_ids.size(); ++i) {
      frame_rates[rec.info_ids[i]] = rec.delivered[i];
    }
    m.rate_samples.insert(m.rate_samples.end(), frame_rates.begin(),
                          frame_rates.end());
    for (std::size_t j = 0; j < rec.harvest_ids.size(); ++j) {
      m.avg_harvested[rec.harvest_ids[j]] += rec.harvested[j];
      m.aggregate_harvested += rec.harvested[j];
    }
  }
  const double frames = static_cast<double>(trace.frames.size());
  if (frames > 0) {
    for (double& v : m.avg_harvested) v /= frames;
    m.aggregate_harvested /= frames;
    m.final_avg_sr = trace.frames.back().running_avg_sr;
  }
  return m;
}

RpRegion rp_region_sweep(const ChannelSet& channels, const UserSets& sets,
                         const std::vector<double>& weights,
                         double power_budget,
                         const std::vector<Eigen::VectorXd>& grid,
                         const SolverConfig& cfg) {
  const EffectiveChannels eff = build_effective_channels(channels, sets);
  const int m = eff.num_harvest();

  RpRegion region;
  const Allocation unconstrained =
      solve_wsr_info_only(eff, weights, power_budget, cfg);
  region.boundary.sr_max = unconstrained.objective;
  region.boundary.q_info_opt =
      Eigen::Map<const Eigen::VectorXd>(unconstrained.harvested.data(), m);

  region.boundary.q_max.resize(m);
  region.boundary.sr_energy_beam.resize(m);
  for (int j = 0; j < m; ++j) {
    const CxMatrix& h = channels.of(eff.harvest_ids[j]).entries;
    region.boundary.q_max[j] =
        power_budget * detail::lmax_hermitian(h.adjoint() * h);

    // All power on the harvest-optimal direction of the best BD block.
    int best_i = 0;
    double best_l = -1.0;
    Eigen::VectorXcd best_u;
    for (int i = 0; i < eff.num_info(); ++i) {
      const CxMatrix gram = detail::hermitize(
          eff.eff_cross[j][i].adjoint() * eff.eff_cross[j][i]);
      Eigen::SelfAdjointEigenSolver<CxMatrix> eig(gram);
      const Eigen::Index last = eig.eigenvalues().size() - 1;
      if (eig.eigenvalues()[last] > best_l) {
        best_l = eig.eigenvalues()[last];
        best_u = eig.eigenvectors().col(last);
        best_i = i;
      }
    }
    double sr = 0.0;
    if (best_l >= 0.0) {
      const CxMatrix s_beam = power_budget * (best_u * best_u.adjoint());
      sr = weights[best_i] *
           detail::rate_log2det(eff.eff_info[best_i], s_beam);
    }
    region.boundary.sr_energy_beam[j] = sr;
  }

  for (const Eigen::VectorXd& q : grid) {
    RpSample sample;
    sample.q = q;
    try {
      const Allocation a = solve_wsr_harvest(eff, weights, q, power_budget,
                                             cfg);
      sample.feasible = a.feasible;
      sample.sum_rate = a.feasible ? a.objective : 0.0;
    } catch (const IterationLimitError& e) {
      sample.feasible = e.best.feasible;
      sample.sum_rate = sample.feasible ? e.best.objective : 0.0;
    }
    region.samples.push_back(sample);
  }
  return region;
}

}  // namespace swipt
