/**
 * @file solver.hpp
 * @brief Per-frame convex resource allocation: weighted sum rate under
 *        per-user harvesting constraints and a radiated power budget.
 *
 * The main entry point is solve_wsr_harvest, an ellipsoid method on the
 * (M+1)-dimensional dual (one multiplier per harvest constraint plus one
 * for the power budget). Each dual point maps to closed-form covariances
 * through waterfill_covariance; subgradient and feasibility cuts shrink
 * the ellipsoid until either the KKT residuals or the ellipsoid axis drop
 * below tolerance. Special cases (no harvest users, harvest-only service,
 * single-user energy beamforming) have dedicated cheaper paths.
 */
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "swipt/bd_precoding.hpp"
#include "swipt/core_model.hpp"

namespace swipt {

/// Dual point: one multiplier per harvest user plus the power multiplier.
struct DualVariables {
  Eigen::VectorXd lambdas;
  double mu = 0.0;
};

struct SolverConfig {
  double ellipsoid_tol = 1e-6;   // stop when sqrt(max axis of shape matrix) drops below
  int max_iters = 5000;
  double initial_radius = 0.0;   // 0 = auto-scale from the instance
  double kkt_tol = 1e-5;
  double bisection_tol = 1e-6;   // relative, for all scalar bisections
  bool restore_infeasible = false;  // uniformly scale Q down until feasible
};

enum class SolveStatus { kConverged, kInfeasible, kIterationLimit };

struct KktResiduals {
  double power_violation = 0.0;        // (sum Tr - budget)/(1+budget), positive part
  double harvest_violation = 0.0;      // max_j (Q_j - q_j)/(1+Q_j), positive part
  double comp_power = 0.0;             // mu*|sum Tr - budget|/(1+budget)
  double comp_harvest = 0.0;           // max_j lambda_j*|Q_j - q_j|/(1+Q_j)
};

struct Allocation {
  std::vector<CxMatrix> covariances;         // reduced, per info user
  std::vector<CxMatrix> covariances_lifted;  // n_T x n_T, per info user
  std::vector<double> rates;                 // bit/s/Hz, per info user
  std::vector<double> harvested;             // radiated units, per harvest user
  DualVariables duals;
  bool feasible = false;
  int iterations = 0;
  double objective = 0.0;                    // sum_i w_i * rate_i
  KktResiduals kkt;
  SolveStatus status = SolveStatus::kConverged;
  double q_scale = 1.0;                      // < 1 only in restoration mode
  std::string diagnostic;

  double total_power() const {
    double p = 0.0;
    for (const CxMatrix& s : covariances) p += s.trace().real();
    return p;
  }
};

/// Raised when the iteration budget runs out; carries the best iterate.
class IterationLimitError : public std::runtime_error {
 public:
  IterationLimitError(const std::string& what, Allocation best_iterate)
      : std::runtime_error(what), best(std::move(best_iterate)) {}
  Allocation best;
};

/// Closed-form per-user covariances at a dual point: for each info user,
/// water-fill against the whitened channel H_i A_i^{-1/2} with level
/// w_i/ln2. Throws std::domain_error when some A_i is not positive
/// definite (the dual point lies outside the domain; caller must cut).
std::vector<CxMatrix> waterfill_covariance(const DualVariables& duals,
                                           const EffectiveChannels& eff,
                                           const std::vector<double>& weights);

/// Subgradient of the dual function: entries 1..M are the harvest
/// constraint slacks Q_j - q_j(S), entry M+1 is sum_i Tr(S_i) - budget.
Eigen::VectorXd dual_subgradient(const DualVariables& duals,
                                 const std::vector<CxMatrix>& covariances,
                                 const EffectiveChannels& eff,
                                 const Eigen::VectorXd& q_targets,
                                 double power_budget);

/// Weighted sum rate maximization under harvesting constraints.
/// q_targets is aligned with eff.harvest_ids; weights with eff.info_ids.
Allocation solve_wsr_harvest(const EffectiveChannels& eff,
                             const std::vector<double>& weights,
                             const Eigen::VectorXd& q_targets,
                             double power_budget, const SolverConfig& cfg);

/// No-harvest special case: exact water-filling via bisection on the
/// power multiplier. Budget is always tight at the optimum.
Allocation solve_wsr_info_only(const EffectiveChannels& eff,
                               const std::vector<double>& weights,
                               double power_budget, const SolverConfig& cfg);

struct FeasibilityResult {
  bool feasible = false;
  double min_power = 0.0;
  CxMatrix s;  // a PSD covariance meeting the targets at min_power
};

/// Least radiated power serving every harvest target with one covariance
/// (no information users). Bisection over a trial power, each trial
/// certified by Dykstra's alternating projections between the PSD cone
/// and the harvest/total-power half-spaces.
FeasibilityResult harvest_feasibility(const std::vector<ChannelMatrix>& channels,
                                      const Eigen::VectorXd& q_targets,
                                      double power_budget,
                                      const SolverConfig& cfg);

/// Per-user necessary condition budget * lmax(H_j^H H_j) >= Q_j.
/// Any false entry proves the harvesting problem infeasible.
std::vector<bool> necessary_condition_check(
    const std::vector<ChannelMatrix>& channels,
    const Eigen::VectorXd& q_targets, double power_budget);

struct BeamformingResult {
  double q_max = 0.0;
  CxMatrix s;  // budget * u u^H, rank one
};

/// Maximum power deliverable to one terminal: all budget on the top
/// eigenvector of H^H H.
BeamformingResult energy_beamforming_max(const ChannelMatrix& h_j,
                                         double power_budget);

}  // namespace swipt
