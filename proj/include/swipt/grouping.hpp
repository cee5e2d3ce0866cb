/**
 * @file grouping.hpp
 * @brief Two-stage user selection: battery-ratio supergrouping, greedy
 *        information grouping, decoupled and joint harvest grouping, plus
 *        round-robin and random baselines.
 */
#pragma once

#include <random>
#include <vector>

#include "swipt/core_model.hpp"
#include "swipt/solver.hpp"

namespace swipt {

enum class Strategy {
  kDhs,
  kChs,
  kRoundRobin,
  kRandom,
  kNoSwipt,
  kNoHarvestMgmt,
};

struct GroupingConfig {
  Strategy strategy = Strategy::kDhs;
  int max_info_users = 1;    // U = ceil(n_T / N_R)
  int harvest_group_size = 0;
  int per_round_harvest = 0;  // CHS batch size; 0 derives it from the sizes
};

/// Battery-ratio split of all terminals into harvesting and information
/// candidates. Users are ordered by battery/capacity ascending (ties by
/// id); if alpha is below the floor(K/2)-th ratio the lower half harvests,
/// otherwise the split lands at the ratio closest to alpha.
UserSets supergroup(const std::vector<TerminalState>& terminals, double alpha);

struct GreedyResult {
  std::vector<int> info;  // selected user ids, in acceptance order
  Allocation allocation;  // solved over the final selected set
};

/// Greedy information-set growth: each round admits the candidate whose
/// addition maximizes the weighted sum rate (no harvest constraints),
/// stopping when the objective would drop or U users are selected.
/// Candidates that break the BD dimension constraint are skipped.
/// `weights` is indexed by user id.
GreedyResult select_info_greedy(const std::vector<int>& super_info,
                                const ChannelSet& channels,
                                const std::vector<double>& weights,
                                double power_budget, int u_max);

/// Decoupled harvest selection: score every candidate by the power the
/// already-fixed information covariances leak into its channel, minus its
/// target, and keep the best `m_max`. Returned in descending score order
/// (ties by ascending id). `q_targets` is indexed by user id.
std::vector<int> select_harvest_decoupled(
    const std::vector<int>& super_harvest, const ChannelSet& channels,
    const Allocation& info_allocation, const std::vector<double>& q_targets,
    int m_max);

struct ChsResult {
  std::vector<int> info;
  std::vector<int> harvest;
  Allocation allocation;  // constrained by the harvest users admitted
                          // before the last accepted round
  bool round_infeasible = false;  // a round found no feasible candidate
};

/// Joint selection: greedy information rounds solved under the harvest
/// constraints accumulated so far, each accepted round followed by a batch
/// of `k_base` harvest admissions (plus one of the `harvest_total - k*U`
/// leftovers in the earliest rounds). harvest_total < 0 means k_base * U.
ChsResult select_joint_chs(const std::vector<int>& super_info,
                           const std::vector<int>& super_harvest,
                           const ChannelSet& channels,
                           const std::vector<double>& weights,
                           const std::vector<double>& q_targets,
                           double power_budget, int u_max, int k_base,
                           int harvest_total = -1, SolverConfig cfg = {});

struct RotationState {
  int pointer = 0;
};

/// Fixed-order rotation: fill U information slots then M harvest slots
/// consecutively from the pointer, then advance the pointer by U.
UserSets baseline_round_robin(RotationState& state, int num_users,
                              const GroupingConfig& cfg);

/// Uniform draws without replacement: U information users first, then M
/// harvest users from the remainder.
UserSets baseline_random(std::mt19937_64& rng, int num_users,
                         const GroupingConfig& cfg);

}  // namespace swipt
