#include "swipt/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "swipt/bd_precoding.hpp"

namespace swipt {

namespace {

/// BD dimension constraint for a candidate info set.
bool bd_admissible(const ChannelSet& channels, const std::vector<int>& info) {
  if (info.empty()) return false;
  int total = 0;
  int min_rx = std::numeric_limits<int>::max();
  for (int id : info) {
    const int nr = channels.of(id).n_rx();
    total += nr;
    min_rx = std::min(min_rx, nr);
  }
  return channels.of(info.front()).n_tx() > total - min_rx;
}

std::vector<double> gather(const std::vector<double>& by_id,
                           const std::vector<int>& ids) {
  std::vector<double> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(by_id.at(id));
  return out;
}

/// Solve the allocation for a candidate grouping; nullopt when the
/// candidate is BD-inadmissible or its problem has no feasible point.
std::optional<Allocation> try_solve(const ChannelSet& channels,
                                    const std::vector<int>& info,
                                    const std::vector<int>& harvest,
                                    const std::vector<double>& weights,
                                    const std::vector<double>& q_targets,
                                    double power_budget,
                                    const SolverConfig& cfg) {
  if (!bd_admissible(channels, info)) return std::nullopt;
  UserSets sets;
  sets.info = info;
  sets.harvest = harvest;
  EffectiveChannels eff;
  try {
    eff = build_effective_channels(channels, sets);
  } catch (const std::runtime_error&) {
    return std::nullopt;
  }
  const std::vector<double> w = gather(weights, info);
  try {
    if (harvest.empty()) {
      return solve_wsr_info_only(eff, w, power_budget, cfg);
    }
    Eigen::VectorXd q(harvest.size());
    for (std::size_t j = 0; j < harvest.size(); ++j) {
      q[j] = q_targets.at(harvest[j]);
    }
    Allocation a = solve_wsr_harvest(eff, w, q, power_budget, cfg);
    if (!a.feasible) return std::nullopt;
    return a;
  } catch (const IterationLimitError& e) {
    if (e.best.feasible) return e.best;
    return std::nullopt;
  }
}

CxMatrix lifted_sum(const Allocation& alloc, Eigen::Index n_t) {
  CxMatrix s = CxMatrix::Zero(n_t, n_t);
  for (const CxMatrix& si : alloc.covariances_lifted) s += si;
  return s;
}

}  // namespace

UserSets supergroup(const std::vector<TerminalState>& terminals,
                    double alpha) {
  const int k = static_cast<int>(terminals.size());
  if (k == 1) {
    UserSets sets;
    sets.super_info.push_back(terminals.front().user_id);
    return sets;
  }
  std::vector<int> order(k);
  for (int i = 0; i < k; ++i) order[i] = i;
  auto ratio = [&](int i) {
    const TerminalState& t = terminals[i];
    return t.capacity > 0.0 ? t.battery / t.capacity : 0.0;
  };
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ra = ratio(a), rb = ratio(b);
    if (ra != rb) return ra < rb;
    return terminals[a].user_id < terminals[b].user_id;
  });

  int split = k / 2;
  if (alpha >= ratio(order[k / 2 - 1])) {
    split = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < k; ++i) {
      const double d = std::abs(ratio(order[i]) - alpha);
      if (d < best) {
        best = d;
        split = i + 1;
      }
    }
  }

  UserSets sets;
  for (int i = 0; i < k; ++i) {
    (i < split ? sets.super_harvest : sets.super_info)
        .push_back(terminals[order[i]].user_id);
  }
  std::sort(sets.super_harvest.begin(), sets.super_harvest.end());
  std::sort(sets.super_info.begin(), sets.super_info.end());
  return sets;
}

GreedyResult select_info_greedy(const std::vector<int>& super_info,
                                const ChannelSet& channels,
                                const std::vector<double>& weights,
                                double power_budget, int u_max) {
  std::vector<int> candidates = super_info;
  std::sort(candidates.begin(), candidates.end());

  GreedyResult result;
  double f_temp = -std::numeric_limits<double>::infinity();
  SolverConfig cfg;

  while (static_cast<int>(result.info.size()) < u_max) {
    std::optional<Allocation> best;
    int best_id = -1;
    std::vector<int> trial = result.info;
    trial.push_back(-1);
    for (int c : candidates) {
      if (std::find(result.info.begin(), result.info.end(), c) !=
          result.info.end()) {
        continue;
      }
      trial.back() = c;
      auto alloc = try_solve(channels, trial, {}, weights, {}, power_budget,
                             cfg);
      if (alloc && (!best || alloc->objective > best->objective)) {
        best = std::move(alloc);
        best_id = c;
      }
    }
    if (!best || best->objective < f_temp) break;
    result.info.push_back(best_id);
    result.allocation = std::move(*best);
    f_temp = result.allocation.objective;
  }
  return result;
}

std::vector<int> select_harvest_decoupled(
    const std::vector<int>& super_harvest, const ChannelSet& channels,
    const Allocation& info_allocation, const std::vector<double>& q_targets,
    int m_max) {
  if (super_harvest.empty() || m_max <= 0) return {};
  const Eigen::Index n_t = channels.of(super_harvest.front()).n_tx();
  const CxMatrix s_star = lifted_sum(info_allocation, n_t);

  std::vector<std::pair<double, int>> scored;
  for (int id : super_harvest) {
    const CxMatrix& h = channels.of(id).entries;
    const double leak = (h * s_star * h.adjoint()).trace().real();
    scored.emplace_back(leak - q_targets.at(id), id);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  scored.resize(std::min<std::size_t>(scored.size(), m_max));

  std::vector<int> sel;
  for (const auto& [score, id] : scored) sel.push_back(id);
  return sel;
}

ChsResult select_joint_chs(const std::vector<int>& super_info,
                           const std::vector<int>& super_harvest,
                           const ChannelSet& channels,
                           const std::vector<double>& weights,
                           const std::vector<double>& q_targets,
                           double power_budget, int u_max, int k_base,
                           int harvest_total, SolverConfig cfg) {
  std::vector<int> candidates = super_info;
  std::sort(candidates.begin(), candidates.end());

  if (k_base <= 0 && harvest_total > 0 && u_max > 0) {
    k_base = harvest_total / u_max;
  }
  int leftover = 0;
  if (harvest_total >= 0) {
    leftover = std::max(harvest_total - k_base * u_max, 0);
  }

  ChsResult result;
  double f_temp = -std::numeric_limits<double>::infinity();

  for (int round = 0; static_cast<int>(result.info.size()) < u_max; ++round) {
    std::optional<Allocation> best;
    int best_id = -1;
    int remaining = 0;
    std::vector<int> trial = result.info;
    trial.push_back(-1);
    for (int c : candidates) {
      if (std::find(result.info.begin(), result.info.end(), c) !=
          result.info.end()) {
        continue;
      }
      ++remaining;
      trial.back() = c;
      auto alloc = try_solve(channels, trial, result.harvest, weights,
                             q_targets, power_budget, cfg);
      if (alloc && (!best || alloc->objective > best->objective)) {
        best = std::move(alloc);
        best_id = c;
      }
    }
    if (!best) {
      result.round_infeasible = remaining > 0;
      break;
    }
    if (best->objective < f_temp) break;
    result.info.push_back(best_id);
    result.allocation = std::move(*best);
    f_temp = result.allocation.objective;

    int batch = k_base + (round < leftover ? 1 : 0);
    if (harvest_total >= 0) {
      batch = std::min(batch, harvest_total -
                                  static_cast<int>(result.harvest.size()));
    }
    if (batch > 0) {
      std::vector<int> pool;
      for (int id : super_harvest) {
        if (std::find(result.harvest.begin(), result.harvest.end(), id) ==
            result.harvest.end()) {
          pool.push_back(id);
        }
      }
      for (int id : select_harvest_decoupled(pool, channels,
                                             result.allocation, q_targets,
                                             batch)) {
        result.harvest.push_back(id);
      }
    }
  }
  return result;
}

UserSets baseline_round_robin(RotationState& state, int num_users,
                              const GroupingConfig& cfg) {
  const int u = std::min(cfg.max_info_users, num_users);
  const int m = std::min(cfg.harvest_group_size, num_users - u);
  const int p = ((state.pointer % num_users) + num_users) % num_users;

  UserSets sets;
  for (int s = 0; s < u; ++s) sets.info.push_back((p + s) % num_users);
  for (int s = 0; s < m; ++s) sets.harvest.push_back((p + u + s) % num_users);
  sets.super_info = sets.info;
  sets.super_harvest = sets.harvest;
  state.pointer = (p + u) % num_users;
  return sets;
}

UserSets baseline_random(std::mt19937_64& rng, int num_users,
                         const GroupingConfig& cfg) {
  const int u = std::min(cfg.max_info_users, num_users);
  const int m = std::min(cfg.harvest_group_size, num_users - u);

  std::vector<int> pool(num_users);
  for (int i = 0; i < num_users; ++i) pool[i] = i;
  for (int i = 0; i < u + m; ++i) {
    std::uniform_int_distribution<int> pick(i, num_users - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }

  UserSets sets;
  sets.info.assign(pool.begin(), pool.begin() + u);
  sets.harvest.assign(pool.begin() + u, pool.begin() + u + m);
  sets.super_info = sets.info;
  sets.super_harvest = sets.harvest;
  return sets;
}

}  // namespace swipt
