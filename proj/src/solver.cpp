#include "swipt/solver.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>

#include "linalg_util.hpp"

namespace swipt {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kMuFloor = 1e-9;          // mu = 0 is outside the dual domain
constexpr double kDualBlowup = 1e9;        // dual value => primal infeasible
constexpr double kDomainMargin = 1e-10;    // relative PD margin for in-loop A_i checks
constexpr double kLambdaCap = 1e7;         // multiplier bound when Q sits on the boundary
constexpr double kCertifyTol = 1e-9;       // relative constraint tolerance for Dykstra

/// Per-instance precomputation shared by every ellipsoid iteration.
struct DualWorkspace {
  const EffectiveChannels* eff = nullptr;
  std::vector<double> weights;
  Eigen::VectorXd q;
  double budget = 0.0;
  // gram[j][i] = cross_ji^H cross_ji, in info user i's reduced space
  std::vector<std::vector<CxMatrix>> gram;
  // sum over j of gram[j][i], used for A_i and the initialization bound
  std::vector<CxMatrix> gram_sum;
  std::vector<double> lmax_info;   // lmax(eff_info_i^H eff_info_i)
  std::vector<double> lmax_cross;  // per harvest j: max_i lmax(gram[j][i])
};

DualWorkspace make_workspace(const EffectiveChannels& eff,
                             const std::vector<double>& weights,
                             const Eigen::VectorXd& q, double budget) {
  DualWorkspace ws;
  ws.eff = &eff;
  ws.weights = weights;
  ws.q = q;
  ws.budget = budget;
  const int n = eff.num_info();
  const int m = eff.num_harvest();
  ws.gram.resize(m);
  ws.gram_sum.resize(n);
  ws.lmax_cross.assign(m, 0.0);
  for (int i = 0; i < n; ++i) {
    const Eigen::Index li = eff.null_basis[i].cols();
    ws.gram_sum[i] = CxMatrix::Zero(li, li);
  }
  for (int j = 0; j < m; ++j) {
    ws.gram[j].resize(n);
    for (int i = 0; i < n; ++i) {
      ws.gram[j][i] = eff.eff_cross[j][i].adjoint() * eff.eff_cross[j][i];
      ws.gram_sum[i] += ws.gram[j][i];
      ws.lmax_cross[j] =
          std::max(ws.lmax_cross[j], detail::lmax_hermitian(ws.gram[j][i]));
    }
  }
  ws.lmax_info.resize(n);
  for (int i = 0; i < n; ++i) {
    ws.lmax_info[i] =
        detail::lmax_hermitian(eff.eff_info[i].adjoint() * eff.eff_info[i]);
  }
  return ws;
}

CxMatrix build_a(const DualWorkspace& ws, const DualVariables& d, int i) {
  const Eigen::Index li = ws.eff->null_basis[i].cols();
  CxMatrix a = d.mu * CxMatrix::Identity(li, li);
  for (int j = 0; j < ws.eff->num_harvest(); ++j) {
    if (d.lambdas[j] != 0.0) a -= d.lambdas[j] * ws.gram[j][i];
  }
  return a;
}

/// Everything the ellipsoid needs at one interior dual point.
struct PointEval {
  std::vector<CxMatrix> cov;
  std::vector<double> rates;     // at the unscaled covariances
  Eigen::VectorXd harvested;     // per harvest user, unscaled
  double total_power = 0.0;
  double dual_value = 0.0;
  Eigen::VectorXd subgrad;       // length M+1
};

/// Water-filling at one dual point. a_inv_sqrt entries must be PD-checked
/// by the caller; throws std::domain_error if one slips through.
std::vector<CxMatrix> waterfill_core(const DualWorkspace& ws,
                                     const DualVariables& duals,
                                     std::vector<double>* rates_out) {
  const EffectiveChannels& eff = *ws.eff;
  std::vector<CxMatrix> cov(eff.num_info());
  if (rates_out) rates_out->assign(eff.num_info(), 0.0);

  for (int i = 0; i < eff.num_info(); ++i) {
    const CxMatrix a = build_a(ws, duals, i);
    CxMatrix a_inv_sqrt;
    if (!detail::inv_sqrt_hermitian(a, a_inv_sqrt)) {
      throw std::domain_error(
          "waterfill_covariance: dual point outside domain (A_i not PD)");
    }
    const CxMatrix g = eff.eff_info[i] * a_inv_sqrt;
    Eigen::JacobiSVD<CxMatrix> svd(g, Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();

    Eigen::VectorXd d(sv.size());
    double rate = 0.0;
    const double level = ws.weights[i] / kLn2;
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
      const double sigma_hat = sv[k] * sv[k];
      d[k] = sigma_hat > 1e-300 ? std::max(level - 1.0 / sigma_hat, 0.0) : 0.0;
      rate += std::log2(1.0 + sigma_hat * d[k]);
    }
    cov[i] = detail::hermitize(a_inv_sqrt * svd.matrixV() * d.asDiagonal() *
                               svd.matrixV().adjoint() * a_inv_sqrt);
    if (rates_out) (*rates_out)[i] = rate;
  }
  return cov;
}

Eigen::VectorXd harvested_at(const DualWorkspace& ws,
                             const std::vector<CxMatrix>& cov) {
  Eigen::VectorXd h = Eigen::VectorXd::Zero(ws.eff->num_harvest());
  for (int j = 0; j < ws.eff->num_harvest(); ++j) {
    for (int i = 0; i < ws.eff->num_info(); ++i) {
      h[j] += (ws.gram[j][i] * cov[i]).trace().real();
    }
  }
  return h;
}

PointEval evaluate_point(const DualWorkspace& ws, const DualVariables& duals) {
  PointEval ev;
  ev.cov = waterfill_core(ws, duals, &ev.rates);
  ev.harvested = harvested_at(ws, ev.cov);
  for (const CxMatrix& s : ev.cov) ev.total_power += s.trace().real();

  double obj = 0.0;
  for (int i = 0; i < ws.eff->num_info(); ++i) {
    obj += ws.weights[i] * ev.rates[i];
  }
  ev.dual_value = -obj + duals.mu * (ev.total_power - ws.budget);
  const int m = ws.eff->num_harvest();
  ev.subgrad.resize(m + 1);
  for (int j = 0; j < m; ++j) {
    ev.subgrad[j] = ws.q[j] - ev.harvested[j];
    ev.dual_value += duals.lambdas[j] * ev.subgrad[j];
  }
  ev.subgrad[m] = ev.total_power - ws.budget;
  return ev;
}

/// Final allocation from a dual point: covariances rescaled to exact
/// budget tightness (the optimum always exhausts the budget), rates and
/// harvested powers recomputed at the rescaled covariances.
Allocation recover_allocation(const DualWorkspace& ws,
                              const DualVariables& duals, int iterations,
                              SolveStatus status, double kkt_tol) {
  const EffectiveChannels& eff = *ws.eff;
  Allocation alloc;
  alloc.duals = duals;
  alloc.iterations = iterations;
  alloc.status = status;

  alloc.covariances = waterfill_core(ws, duals, nullptr);
  double total = 0.0;
  for (const CxMatrix& s : alloc.covariances) total += s.trace().real();
  if (total > 0.0) {
    const double scale = ws.budget / total;
    for (CxMatrix& s : alloc.covariances) s *= scale;
  }

  alloc.rates.resize(eff.num_info());
  for (int i = 0; i < eff.num_info(); ++i) {
    alloc.covariances_lifted.push_back(eff.lift(i, alloc.covariances[i]));
    alloc.rates[i] = detail::rate_log2det(eff.eff_info[i], alloc.covariances[i]);
    alloc.objective += ws.weights[i] * alloc.rates[i];
  }

  const Eigen::VectorXd harv = harvested_at(ws, alloc.covariances);
  alloc.harvested.assign(harv.begin(), harv.end());

  const double power = alloc.total_power();
  alloc.kkt.power_violation =
      std::max(0.0, (power - ws.budget) / (1.0 + ws.budget));
  alloc.kkt.comp_power =
      duals.mu * std::abs(power - ws.budget) / (1.0 + ws.budget);
  for (int j = 0; j < eff.num_harvest(); ++j) {
    const double rel = (ws.q[j] - harv[j]) / (1.0 + ws.q[j]);
    alloc.kkt.harvest_violation = std::max(alloc.kkt.harvest_violation, rel);
    alloc.kkt.comp_harvest =
        std::max(alloc.kkt.comp_harvest,
                 duals.lambdas[j] * std::abs(ws.q[j] - harv[j]) / (1.0 + ws.q[j]));
  }
  alloc.kkt.harvest_violation = std::max(0.0, alloc.kkt.harvest_violation);
  alloc.feasible = alloc.kkt.power_violation <= kkt_tol &&
                   alloc.kkt.harvest_violation <= kkt_tol;
  return alloc;
}

// ---------------------------------------------------------------------------
// Dykstra feasibility certification over block-tuple covariances
// ---------------------------------------------------------------------------

struct BlockProblem {
  // grams[j][i]: harvest user j's gram matrix in block i's space
  const std::vector<std::vector<CxMatrix>>* grams = nullptr;
  Eigen::VectorXd q;
  double p_cap = 0.0;
  std::vector<Eigen::Index> dims;
};

double block_inner(const std::vector<CxMatrix>& a,
                   const std::vector<CxMatrix>& b) {
  double v = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    v += a[i].cwiseProduct(b[i].conjugate()).sum().real();
  }
  return v;
}

/// Certified feasibility of {S_i >= 0, sum_i <gram_ji, S_i> >= q_j,
/// sum_i Tr(S_i) <= p_cap} by Dykstra's algorithm. Returns the feasible
/// point on success. `warm` seeds the iterate (any Hermitian tuple).
std::optional<std::vector<CxMatrix>> dykstra_certify(
    const BlockProblem& bp, int max_sweeps,
    const std::vector<CxMatrix>* warm = nullptr) {
  const auto& grams = *bp.grams;
  const int m = static_cast<int>(bp.q.size());
  const int nb = static_cast<int>(bp.dims.size());

  std::vector<CxMatrix> x(nb);
  for (int i = 0; i < nb; ++i) {
    x[i] = (warm != nullptr) ? (*warm)[i]
                             : CxMatrix::Zero(bp.dims[i], bp.dims[i]);
  }

  // Active half-spaces: harvest targets with q_j > 0, plus the trace cap.
  std::vector<int> active;
  for (int j = 0; j < m; ++j) {
    if (bp.q[j] > 0.0) active.push_back(j);
  }
  std::vector<double> gram_norm2(m, 0.0);
  for (int j : active) gram_norm2[j] = block_inner(grams[j], grams[j]);

  const int num_sets = static_cast<int>(active.size()) + 2;  // + trace + PSD
  std::vector<std::vector<CxMatrix>> corr(num_sets, x);
  for (auto& c : corr) {
    for (int i = 0; i < nb; ++i) c[i].setZero();
  }

  double trace_dim = 0.0;
  for (Eigen::Index d : bp.dims) trace_dim += static_cast<double>(d);

  auto violation = [&](const std::vector<CxMatrix>& s) {
    double v = 0.0;
    for (int j : active) {
      v = std::max(v, (bp.q[j] - block_inner(grams[j], s)) / (1.0 + bp.q[j]));
    }
    double tr = 0.0;
    for (const CxMatrix& si : s) tr += si.trace().real();
    v = std::max(v, (tr - bp.p_cap) / (1.0 + bp.p_cap));
    for (const CxMatrix& si : s) {
      const double lmin = detail::lmin_hermitian(si);
      v = std::max(v, -lmin / (1.0 + si.norm()));
    }
    return v;
  };

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    int set_idx = 0;
    for (int j : active) {
      auto& c = corr[set_idx++];
      for (int i = 0; i < nb; ++i) x[i] += c[i];
      const double val = block_inner(grams[j], x);
      double step = 0.0;
      if (val < bp.q[j] && gram_norm2[j] > 0.0) {
        step = (bp.q[j] - val) / gram_norm2[j];
      }
      for (int i = 0; i < nb; ++i) {
        const CxMatrix y = x[i] + step * grams[j][i];
        c[i] = x[i] - y;
        x[i] = y;
      }
    }
    {  // trace cap
      auto& c = corr[set_idx++];
      double tr = 0.0;
      for (int i = 0; i < nb; ++i) {
        x[i] += c[i];
        tr += x[i].trace().real();
      }
      const double step = tr > bp.p_cap ? (tr - bp.p_cap) / trace_dim : 0.0;
      for (int i = 0; i < nb; ++i) {
        const CxMatrix y =
            x[i] - step * CxMatrix::Identity(bp.dims[i], bp.dims[i]);
        c[i] = x[i] - y;
        x[i] = y;
      }
    }
    {  // PSD cone
      auto& c = corr[set_idx++];
      for (int i = 0; i < nb; ++i) {
        const CxMatrix y = detail::psd_clip(x[i] + c[i]);
        c[i] = x[i] + c[i] - y;
        x[i] = y;
      }
    }
    if (violation(x) <= kCertifyTol) return x;
  }
  return std::nullopt;
}

/// Warm start: superpose per-target beamformers (each target served
/// through its best block), then scale into the trace cap.
std::vector<CxMatrix> superposition_start(const BlockProblem& bp) {
  const auto& grams = *bp.grams;
  const int nb = static_cast<int>(bp.dims.size());
  std::vector<CxMatrix> s(nb);
  for (int i = 0; i < nb; ++i) s[i] = CxMatrix::Zero(bp.dims[i], bp.dims[i]);

  for (int j = 0; j < bp.q.size(); ++j) {
    if (bp.q[j] <= 0.0) continue;
    int best_i = 0;
    double best_l = -1.0;
    Eigen::VectorXcd best_u;
    for (int i = 0; i < nb; ++i) {
      Eigen::SelfAdjointEigenSolver<CxMatrix> eig(
          detail::hermitize(grams[j][i]));
      const Eigen::Index last = eig.eigenvalues().size() - 1;
      if (last >= 0 && eig.eigenvalues()[last] > best_l) {
        best_l = eig.eigenvalues()[last];
        best_u = eig.eigenvectors().col(last);
        best_i = i;
      }
    }
    if (best_l > 0.0) {
      s[best_i] += (bp.q[j] / best_l) * (best_u * best_u.adjoint());
    }
  }
  double tr = 0.0;
  for (const CxMatrix& si : s) tr += si.trace().real();
  if (tr > bp.p_cap && tr > 0.0) {
    for (CxMatrix& si : s) si *= bp.p_cap / tr;
  }
  return s;
}

bool block_feasible(const std::vector<std::vector<CxMatrix>>& grams,
                    const Eigen::VectorXd& q, double p_cap,
                    const std::vector<Eigen::Index>& dims, int max_sweeps,
                    std::vector<CxMatrix>* witness = nullptr) {
  BlockProblem bp{&grams, q, p_cap, dims};
  const std::vector<CxMatrix> warm = superposition_start(bp);
  auto res = dykstra_certify(bp, max_sweeps, &warm);
  if (res && witness) *witness = *res;
  return res.has_value();
}

}  // namespace

std::vector<CxMatrix> waterfill_covariance(const DualVariables& duals,
                                           const EffectiveChannels& eff,
                                           const std::vector<double>& weights) {
  Eigen::VectorXd q = Eigen::VectorXd::Zero(eff.num_harvest());
  DualWorkspace ws = make_workspace(eff, weights, q, 0.0);
  return waterfill_core(ws, duals, nullptr);
}

Eigen::VectorXd dual_subgradient(const DualVariables& duals,
                                 const std::vector<CxMatrix>& covariances,
                                 const EffectiveChannels& eff,
                                 const Eigen::VectorXd& q_targets,
                                 double power_budget) {
  (void)duals;
  const int m = eff.num_harvest();
  Eigen::VectorXd t(m + 1);
  double total = 0.0;
  for (const CxMatrix& s : covariances) total += s.trace().real();
  for (int j = 0; j < m; ++j) {
    double harv = 0.0;
    for (int i = 0; i < eff.num_info(); ++i) {
      harv += (eff.eff_cross[j][i] * covariances[i] *
               eff.eff_cross[j][i].adjoint())
                  .trace()
                  .real();
    }
    t[j] = q_targets[j] - harv;
  }
  t[m] = total - power_budget;
  return t;
}

Allocation solve_wsr_info_only(const EffectiveChannels& eff,
                               const std::vector<double>& weights,
                               double power_budget, const SolverConfig& cfg) {
  if (power_budget <= 0.0) {
    throw std::invalid_argument("solve_wsr_info_only: budget must be positive");
  }
  const int n = eff.num_info();
  Allocation alloc;
  alloc.duals.lambdas = Eigen::VectorXd::Zero(eff.num_harvest());
  alloc.status = SolveStatus::kConverged;

  // Eigenmodes of every user's effective channel; power then water-fills
  // over all modes with per-user level w_i / (mu ln2).
  std::vector<Eigen::VectorXd> sigma2(n);
  std::vector<CxMatrix> modes(n);
  double mu_hi = 0.0;
  for (int i = 0; i < n; ++i) {
    Eigen::JacobiSVD<CxMatrix> svd(eff.eff_info[i], Eigen::ComputeThinV);
    sigma2[i] = svd.singularValues().cwiseProduct(svd.singularValues());
    modes[i] = svd.matrixV();
    if (sigma2[i].size() > 0 && weights[i] > 0.0) {
      mu_hi = std::max(mu_hi, weights[i] * sigma2[i].maxCoeff() / kLn2);
    }
  }

  auto total_power_at = [&](double mu) {
    double p = 0.0;
    for (int i = 0; i < n; ++i) {
      const double level = weights[i] / (mu * kLn2);
      for (Eigen::Index k = 0; k < sigma2[i].size(); ++k) {
        if (sigma2[i][k] > 1e-300) {
          p += std::max(level - 1.0 / sigma2[i][k], 0.0);
        }
      }
    }
    return p;
  };

  double mu = 0.0;
  int iters = 0;
  if (mu_hi > 0.0) {
    double lo = mu_hi;
    while (total_power_at(lo) < power_budget && iters < 4000) {
      lo *= 0.5;
      ++iters;
    }
    double hi = (lo == mu_hi) ? mu_hi : 2.0 * lo;
    while ((hi - lo) > 1e-15 * mu_hi && iters < 8000) {
      const double mid = 0.5 * (lo + hi);
      (total_power_at(mid) >= power_budget ? lo : hi) = mid;
      ++iters;
    }
    mu = 0.5 * (lo + hi);
  }
  alloc.duals.mu = mu;
  alloc.iterations = iters;

  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd p(sigma2[i].size());
    const double level = mu > 0.0 ? weights[i] / (mu * kLn2) : 0.0;
    for (Eigen::Index k = 0; k < sigma2[i].size(); ++k) {
      p[k] = sigma2[i][k] > 1e-300
                 ? std::max(level - 1.0 / sigma2[i][k], 0.0)
                 : 0.0;
    }
    alloc.covariances.push_back(detail::hermitize(
        modes[i] * p.asDiagonal() * modes[i].adjoint()));
    total += p.sum();
  }
  if (total > 0.0) {
    const double scale = power_budget / total;
    for (CxMatrix& s : alloc.covariances) s *= scale;
  }

  alloc.rates.resize(n);
  for (int i = 0; i < n; ++i) {
    alloc.covariances_lifted.push_back(eff.lift(i, alloc.covariances[i]));
    alloc.rates[i] = detail::rate_log2det(eff.eff_info[i], alloc.covariances[i]);
    alloc.objective += weights[i] * alloc.rates[i];
  }
  for (int j = 0; j < eff.num_harvest(); ++j) {
    double harv = 0.0;
    for (int i = 0; i < n; ++i) {
      harv += (eff.eff_cross[j][i] * alloc.covariances[i] *
               eff.eff_cross[j][i].adjoint())
                  .trace()
                  .real();
    }
    alloc.harvested.push_back(harv);
  }
  alloc.feasible = true;
  alloc.kkt.comp_power = 0.0;
  (void)cfg;
  return alloc;
}

Allocation solve_wsr_harvest(const EffectiveChannels& eff,
                             const std::vector<double>& weights,
                             const Eigen::VectorXd& q_targets,
                             double power_budget, const SolverConfig& cfg) {
  if (power_budget <= 0.0) {
    throw std::invalid_argument("solve_wsr_harvest: budget must be positive");
  }
  const int n = eff.num_info();
  const int m = eff.num_harvest();

  if (n == 0) {
    Allocation alloc;
    alloc.duals.lambdas = Eigen::VectorXd::Zero(m);
    alloc.feasible = (m == 0) || (q_targets.maxCoeff() <= 0.0);
    alloc.harvested.assign(m, 0.0);
    if (!alloc.feasible) {
      alloc.status = SolveStatus::kInfeasible;
      alloc.diagnostic = "no information users to carry harvest power";
    }
    return alloc;
  }
  if (m == 0) {
    return solve_wsr_info_only(eff, weights, power_budget, cfg);
  }

  DualWorkspace ws = make_workspace(eff, weights, q_targets, power_budget);

  // Necessary condition against the effective channels (tighter than the
  // full-channel version: BD projection can only lose harvesting gain).
  int violating_user = -1;
  for (int j = 0; j < m; ++j) {
    if (q_targets[j] > power_budget * ws.lmax_cross[j] * (1.0 + 1e-12) + 1e-15) {
      violating_user = j;
      break;
    }
  }

  Eigen::VectorXd q_active = q_targets;
  double q_scale = 1.0;
  std::vector<Eigen::Index> dims;
  for (int i = 0; i < n; ++i) dims.push_back(eff.null_basis[i].cols());

  if (violating_user >= 0 && !cfg.restore_infeasible) {
    Allocation alloc;
    alloc.duals.lambdas = Eigen::VectorXd::Zero(m);
    alloc.status = SolveStatus::kInfeasible;
    alloc.harvested.assign(m, 0.0);
    alloc.diagnostic =
        "harvest target of user " +
        std::to_string(eff.harvest_ids[violating_user]) +
        " exceeds the beamforming bound";
    return alloc;
  }
  if (cfg.restore_infeasible) {
    // Uniformly scale the targets down to the largest certified-feasible
    // fraction before running the dual method.
    if (violating_user >= 0 ||
        !block_feasible(ws.gram, q_active, power_budget, dims,
                        cfg.max_iters)) {
      double lo = 0.0, hi = 1.0;
      while (hi - lo > 1e-3) {
        const double mid = 0.5 * (lo + hi);
        (block_feasible(ws.gram, mid * q_targets, power_budget, dims,
                        cfg.max_iters)
             ? lo
             : hi) = mid;
      }
      q_scale = lo;
      q_active = q_scale * q_targets;
      ws.q = q_active;
    }
  }

  // Active-constraint screen: if the unconstrained optimum already meets
  // every target, it is the optimum of the constrained problem too.
  Allocation unconstrained =
      solve_wsr_info_only(eff, weights, power_budget, cfg);
  bool all_slack = true;
  for (int j = 0; j < m; ++j) {
    if (unconstrained.harvested[j] < q_active[j] * (1.0 - 1e-12) - 1e-15) {
      all_slack = false;
      break;
    }
  }
  if (all_slack) {
    unconstrained.q_scale = q_scale;
    unconstrained.kkt.harvest_violation = 0.0;
    for (int j = 0; j < m; ++j) {
      unconstrained.kkt.harvest_violation = std::max(
          unconstrained.kkt.harvest_violation,
          (q_active[j] - unconstrained.harvested[j]) / (1.0 + q_active[j]));
    }
    unconstrained.kkt.harvest_violation =
        std::max(0.0, unconstrained.kkt.harvest_violation);
    return unconstrained;
  }

  // Ellipsoid initialization: multiplier bound from the sensitivity of the
  // optimal value to the targets, power multiplier bound from the
  // channel strengths, generous ball around both.
  double sr_upper = 1.0;
  for (int i = 0; i < n; ++i) {
    const double r = static_cast<double>(
        std::min(eff.eff_info[i].rows(), eff.eff_info[i].cols()));
    sr_upper += weights[i] * r *
                std::log2(1.0 + ws.lmax_info[i] * power_budget + 1e-12);
  }
  double margin = std::numeric_limits<double>::infinity();
  for (int j = 0; j < m; ++j) {
    margin = std::min(margin,
                      power_budget * ws.lmax_cross[j] - q_active[j]);
  }
  const double lambda_bar =
      std::min(kLambdaCap, sr_upper / std::max(margin, 1e-12));

  double gram_sum_lmax = 0.0;
  for (int i = 0; i < n; ++i) {
    gram_sum_lmax =
        std::max(gram_sum_lmax, detail::lmax_hermitian(ws.gram_sum[i]));
  }
  double rate_mu = 0.0;
  for (int i = 0; i < n; ++i) {
    rate_mu = std::max(rate_mu, weights[i] * ws.lmax_info[i] / kLn2);
  }
  const double mu0 = 2.0 * gram_sum_lmax * lambda_bar + rate_mu + 1.0;
  const double radius = cfg.initial_radius > 0.0
                            ? cfg.initial_radius
                            : 10.0 * mu0 + lambda_bar * std::sqrt(double(m));

  const int dim = m + 1;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(dim);
  z[m] = mu0;
  Eigen::MatrixXd shape = radius * radius * Eigen::MatrixXd::Identity(dim, dim);

  DualVariables best_duals;
  double best_dual_value = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  bool blowup = false;
  bool stopped_early = false;
  int iter = 0;

  auto current_duals = [&]() {
    DualVariables d;
    d.lambdas = z.head(m);
    d.mu = z[m];
    return d;
  };

  for (; iter < cfg.max_iters; ++iter) {
    Eigen::VectorXd cut = Eigen::VectorXd::Zero(dim);
    bool feasibility_cut = false;

    for (int j = 0; j < m && !feasibility_cut; ++j) {
      if (z[j] < 0.0) {
        cut[j] = -1.0;
        feasibility_cut = true;
      }
    }
    if (!feasibility_cut && z[m] < kMuFloor) {
      cut[m] = -1.0;
      feasibility_cut = true;
    }

    DualVariables duals = current_duals();
    if (!feasibility_cut) {
      // Domain cut: A_i must stay PD or the inner minimization is
      // unbounded below. Cut along the most negative eigendirection.
      double worst = std::numeric_limits<double>::infinity();
      int worst_i = -1;
      Eigen::VectorXcd worst_v;
      for (int i = 0; i < n; ++i) {
        const CxMatrix a = build_a(ws, duals, i);
        Eigen::SelfAdjointEigenSolver<CxMatrix> eig(detail::hermitize(a));
        const double lmin = eig.eigenvalues()[0];
        const double lmax = eig.eigenvalues()[eig.eigenvalues().size() - 1];
        const double floor = kDomainMargin * std::max(lmax, 1.0);
        if (lmin <= floor && lmin < worst) {
          worst = lmin;
          worst_i = i;
          worst_v = eig.eigenvectors().col(0);
        }
      }
      if (worst_i >= 0) {
        for (int j = 0; j < m; ++j) {
          cut[j] = (worst_v.adjoint() * ws.gram[j][worst_i] * worst_v)(0).real();
        }
        cut[m] = -1.0;
        feasibility_cut = true;
      }
    }

    if (!feasibility_cut) {
      const PointEval ev = evaluate_point(ws, duals);
      if (ev.dual_value > best_dual_value) {
        best_dual_value = ev.dual_value;
        best_duals = duals;
        have_best = true;
      }
      if (best_dual_value > kDualBlowup) {
        blowup = true;
        ++iter;
        break;
      }

      // KKT early exit: the iterate must already sit on the power budget
      // (rescaling then barely perturbs it), meet the targets, and be
      // complementary. Stationarity holds by construction.
      const double power_gap =
          std::abs(ev.total_power - power_budget) / (1.0 + power_budget);
      if (ev.total_power > 0.0 && power_gap <= cfg.kkt_tol) {
        const double scale = power_budget / ev.total_power;
        double viol = 0.0, comp = 0.0;
        for (int j = 0; j < m; ++j) {
          const double slack = q_active[j] - ev.harvested[j] * scale;
          viol = std::max(viol, slack / (1.0 + q_active[j]));
          comp = std::max(comp, duals.lambdas[j] * std::abs(slack) /
                                    (1.0 + q_active[j]));
        }
        if (viol <= cfg.kkt_tol && comp <= cfg.kkt_tol) {
          best_duals = duals;
          have_best = true;
          stopped_early = true;
          ++iter;
          break;
        }
      }
      cut = -ev.subgrad;  // dual maximization: keep the ascent half-space
    }

    // Central-cut ellipsoid update.
    const Eigen::VectorXd pd = shape * cut;
    const double s = cut.dot(pd);
    if (!(s > 0.0)) {
      stopped_early = true;  // shape matrix numerically collapsed
      break;
    }
    const double inv_sqrt_s = 1.0 / std::sqrt(s);
    z -= pd * (inv_sqrt_s / (dim + 1.0));
    shape = (double(dim) * dim / (double(dim) * dim - 1.0)) *
            (shape - (2.0 / (dim + 1.0)) * (pd * pd.transpose()) / s);
    shape = 0.5 * (shape + shape.transpose());

    const double axis = std::sqrt(std::max(
        shape.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff(), 0.0));
    if (axis < cfg.ellipsoid_tol) {
      stopped_early = true;
      ++iter;
      break;
    }
  }

  if (!have_best) {
    // Never produced an interior iterate; the domain is empty or the
    // budget ran out while cutting toward it.
    Allocation alloc;
    alloc.duals.lambdas = Eigen::VectorXd::Zero(m);
    alloc.duals.mu = mu0;
    alloc.iterations = iter;
    alloc.status = SolveStatus::kIterationLimit;
    alloc.harvested.assign(m, 0.0);
    alloc.diagnostic = "ellipsoid found no interior dual point";
    throw IterationLimitError(alloc.diagnostic, alloc);
  }

  if (blowup) {
    Allocation alloc = recover_allocation(ws, best_duals, iter,
                                          SolveStatus::kInfeasible,
                                          cfg.kkt_tol);
    alloc.feasible = false;
    alloc.q_scale = q_scale;
    alloc.diagnostic = "dual objective unbounded: harvest targets infeasible";
    return alloc;
  }

  Allocation alloc = recover_allocation(ws, best_duals, iter,
                                        SolveStatus::kConverged, cfg.kkt_tol);
  alloc.q_scale = q_scale;

  if (!stopped_early) {
    alloc.status = SolveStatus::kIterationLimit;
    alloc.diagnostic = "iteration budget exhausted before convergence";
    throw IterationLimitError(alloc.diagnostic, alloc);
  }

  if (!alloc.feasible) {
    alloc.status = SolveStatus::kInfeasible;
    const bool certified = block_feasible(ws.gram, q_active, power_budget,
                                          dims, cfg.max_iters);
    alloc.diagnostic = certified
                           ? "dual converged but targets unmet (boundary "
                             "instance beyond solver tolerance)"
                           : "harvest targets jointly unreachable within "
                             "the power budget";
    return alloc;
  }
  return alloc;
}

FeasibilityResult harvest_feasibility(
    const std::vector<ChannelMatrix>& channels,
    const Eigen::VectorXd& q_targets, double power_budget,
    const SolverConfig& cfg) {
  const int m = static_cast<int>(channels.size());
  if (q_targets.size() != m) {
    throw std::invalid_argument("harvest_feasibility: target/channel mismatch");
  }
  FeasibilityResult res;
  if (m == 0 || q_targets.maxCoeff() <= 0.0) {
    const Eigen::Index n_t = m > 0 ? channels[0].entries.cols() : 0;
    res.feasible = true;
    res.min_power = 0.0;
    res.s = CxMatrix::Zero(n_t, n_t);
    return res;
  }

  const Eigen::Index n_t = channels[0].entries.cols();
  std::vector<std::vector<CxMatrix>> grams(m);
  Eigen::VectorXd per_user_power(m);
  double lo = 0.0, hi = 0.0;
  for (int j = 0; j < m; ++j) {
    grams[j] = {detail::hermitize(channels[j].entries.adjoint() *
                                  channels[j].entries)};
    const double lmax = detail::lmax_hermitian(grams[j][0]);
    if (q_targets[j] > 0.0 && lmax <= 0.0) {
      res.feasible = false;
      res.min_power = std::numeric_limits<double>::infinity();
      res.s = CxMatrix::Zero(n_t, n_t);
      return res;
    }
    per_user_power[j] = q_targets[j] > 0.0 ? q_targets[j] / lmax : 0.0;
    lo = std::max(lo, per_user_power[j]);
    hi += per_user_power[j];
  }

  const std::vector<Eigen::Index> dims{n_t};
  BlockProblem bp{&grams, q_targets, hi, dims};
  std::vector<CxMatrix> witness = superposition_start(bp);

  // The superposition certificate makes `hi` feasible by construction;
  // bisect down toward the per-user lower bound (exact when M = 1).
  const double tol = cfg.bisection_tol * std::max(hi, 1e-12);
  int guard = 0;
  while (hi - lo > tol && guard++ < 200) {
    const double mid = 0.5 * (lo + hi);
    std::vector<CxMatrix> cand;
    if (block_feasible(grams, q_targets, mid, dims, cfg.max_iters, &cand)) {
      hi = mid;
      witness = std::move(cand);
    } else {
      lo = mid;
    }
  }

  res.min_power = hi;
  res.s = witness[0];
  res.feasible = res.min_power <= power_budget * (1.0 + 1e-12);
  return res;
}

std::vector<bool> necessary_condition_check(
    const std::vector<ChannelMatrix>& channels,
    const Eigen::VectorXd& q_targets, double power_budget) {
  std::vector<bool> ok(channels.size());
  for (std::size_t j = 0; j < channels.size(); ++j) {
    const double lmax = detail::lmax_hermitian(
        channels[j].entries.adjoint() * channels[j].entries);
    ok[j] = power_budget * lmax >= q_targets[j] - 1e-9 * (1.0 + q_targets[j]);
  }
  return ok;
}

BeamformingResult energy_beamforming_max(const ChannelMatrix& h_j,
                                         double power_budget) {
  BeamformingResult res;
  const CxMatrix gram =
      detail::hermitize(h_j.entries.adjoint() * h_j.entries);
  Eigen::SelfAdjointEigenSolver<CxMatrix> eig(gram);
  const Eigen::Index last = eig.eigenvalues().size() - 1;
  const double lmax = std::max(eig.eigenvalues()[last], 0.0);
  const Eigen::VectorXcd u = eig.eigenvectors().col(last);
  res.q_max = power_budget * lmax;
  res.s = power_budget * (u * u.adjoint());
  return res;
}

}  // namespace swipt
