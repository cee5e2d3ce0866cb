/**
 * @file simulator.hpp
 * @brief Frame-by-frame orchestration: channel generation, supergroup
 *        cadence, per-frame grouping and allocation, battery and
 *        proportional-fair evolution, metrics, and the rate-power region
 *        sweep over a fixed channel draw.
 */
#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "swipt/core_model.hpp"
#include "swipt/grouping.hpp"
#include "swipt/solver.hpp"

namespace swipt {

struct TerminalConfig {
  int antennas = 2;
  double capacity = 5000.0;  // <= 0 draws uniform [3000, 10000] at init
  double zeta = 1.0;
  double q_target = 0.0;     // harvest target in radiated units
  double distance = 1.0;
  double initial_battery = -1.0;  // < 0 uses initial_battery_frac
};

struct ScenarioConfig {
  int n_t = 4;
  std::vector<TerminalConfig> terminals;
  PowerModel power;
  FrameConfig frame;
  GroupingConfig grouping;
  SolverConfig solver;
  int total_frames = 1;
  double pathloss_exponent = 2.0;
  std::uint64_t rng_seed = 1;
  double initial_battery_frac = 0.5;

  int num_users() const { return static_cast<int>(terminals.size()); }
};

struct FrameRecord {
  int frame = 0;
  std::vector<double> batteries;  // per user, end of frame
  std::vector<int> info_ids;
  std::vector<int> harvest_ids;
  std::vector<double> delivered;  // aligned with info_ids, bit/s/Hz
  std::vector<double> harvested;  // aligned with harvest_ids, electrical W
  bool feasible = true;
  int iterations = 0;
  double instantaneous_sr = 0.0;
  double running_avg_sr = 0.0;
};

struct SimTrace {
  int num_users = 0;
  std::vector<FrameRecord> frames;
};

struct MetricsSummary {
  std::vector<double> running_avg_sr;  // per frame
  std::vector<double> rate_samples;    // per frame per user, zeros included
  std::vector<double> avg_harvested;   // per user, electrical W per frame
  double aggregate_harvested = 0.0;    // summed electrical W, per-frame mean
  double final_avg_sr = 0.0;
};

/// All mutable per-run state; exposed so tests can drive single frames.
struct SimState {
  std::vector<TerminalState> terminals;
  UserSets supergroups;
  RotationState rotation;
  std::mt19937_64 channel_rng;
  std::mt19937_64 grouping_rng;
  int frame = 0;
  double sum_rate_accum = 0.0;
};

/// Independent deterministic generator for one named purpose, so that
/// strategies consuming different amounts of randomness still see the
/// same channel sequence under one scenario seed.
std::mt19937_64 make_substream(std::uint64_t seed, std::string_view name);

SimState init_state(const ScenarioConfig& scenario);

/// Fresh block-fading draw for every terminal: i.i.d. complex normal
/// entries, amplitude-scaled by distance^(-pathloss_exponent/2).
ChannelSet generate_channels(std::mt19937_64& rng,
                             const ScenarioConfig& scenario);

FrameRecord run_frame(SimState& state, const ChannelSet& channels,
                      const ScenarioConfig& scenario);

SimTrace run_simulation(const ScenarioConfig& scenario);

MetricsSummary metrics(const SimTrace& trace);

struct RpSample {
  Eigen::VectorXd q;       // one target per harvest user
  bool feasible = false;
  double sum_rate = 0.0;
};

struct RpBoundary {
  double sr_max = 0.0;            // unconstrained weighted sum rate
  Eigen::VectorXd q_info_opt;     // harvested at that optimum, radiated units
  Eigen::VectorXd q_max;          // budget * lmax(H_j^H H_j), full channels
  Eigen::VectorXd sr_energy_beam; // sum rate when all power beams to user j
};

struct RpRegion {
  std::vector<RpSample> samples;
  RpBoundary boundary;
};

/// Sum-rate surface over a grid of harvest-target tuples, on one fixed
/// channel draw, plus the analytic boundary points of the region.
RpRegion rp_region_sweep(const ChannelSet& channels, const UserSets& sets,
                         const std::vector<double>& weights,
                         double power_budget,
                         const std::vector<Eigen::VectorXd>& grid,
                         const SolverConfig& cfg);

}  // namespace swipt
