#include "oracle_pg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace oracle {
namespace {

using swipt::CxMatrix;

CxMatrix hermitize(const CxMatrix& a) { return 0.5 * (a + a.adjoint()); }

double rate_bits(const CxMatrix& h, const CxMatrix& s) {
  const CxMatrix inner =
      hermitize(CxMatrix::Identity(h.rows(), h.rows()) + h * s * h.adjoint());
  Eigen::SelfAdjointEigenSolver<CxMatrix> eig(inner);
  double bits = 0.0;
  for (int k = 0; k < eig.eigenvalues().size(); ++k) {
    bits += std::log2(std::max(eig.eigenvalues()[k], 1e-300));
  }
  return bits;
}

// Euclidean projection of a block tuple of Hermitian matrices onto
// {S_i >= 0, sum_i tr(S_i) <= cap}. The minimizer keeps each block's
// eigenbasis, so it reduces to projecting the concatenated spectrum onto
// {x >= 0, sum(x) <= cap}.
void project_blocks(std::vector<CxMatrix>& s, double cap) {
  std::vector<Eigen::SelfAdjointEigenSolver<CxMatrix>> eigs;
  eigs.reserve(s.size());
  std::vector<double> vals;
  for (const auto& si : s) {
    eigs.emplace_back(hermitize(si));
    for (int k = 0; k < eigs.back().eigenvalues().size(); ++k) {
      vals.push_back(eigs.back().eigenvalues()[k]);
    }
  }

  double clipped_sum = 0.0;
  for (double v : vals) clipped_sum += std::max(v, 0.0);

  double theta = 0.0;
  if (clipped_sum > cap) {
    std::vector<double> sorted(vals);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double prefix = 0.0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      prefix += sorted[k];
      const double cand = (prefix - cap) / static_cast<double>(k + 1);
      const double next = (k + 1 < sorted.size()) ? sorted[k + 1]
                                                  : -std::numeric_limits<double>::infinity();
      if (cand >= next) {
        theta = cand;
        break;
      }
    }
  }

  std::size_t cursor = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    Eigen::VectorXd x(eigs[i].eigenvalues().size());
    for (int k = 0; k < x.size(); ++k) {
      x[k] = std::max(vals[cursor++] - theta, 0.0);
    }
    s[i] = eigs[i].eigenvectors() * x.asDiagonal() *
           eigs[i].eigenvectors().adjoint();
  }
}

}  // namespace

PgResult pg_solve(const swipt::EffectiveChannels& eff,
                  const std::vector<double>& weights,
                  const std::vector<double>& q_targets, double power_budget,
                  int iters) {
  const int n = eff.num_info();
  const int m = eff.num_harvest();
  constexpr double kLn2 = std::numbers::ln2;

  std::vector<std::vector<CxMatrix>> grams(m);
  for (int j = 0; j < m; ++j) {
    grams[j].reserve(n);
    for (int i = 0; i < n; ++i) {
      grams[j].push_back(
          hermitize(eff.eff_cross[j][i].adjoint() * eff.eff_cross[j][i]));
    }
  }

  std::vector<CxMatrix> s(n);
  for (int i = 0; i < n; ++i) {
    const int l = static_cast<int>(eff.eff_info[i].cols());
    s[i] = (power_budget / (n * l)) * CxMatrix::Identity(l, l);
  }

  const auto harvested = [&](const std::vector<CxMatrix>& cov,
                             int j) -> double {
    double q = 0.0;
    for (int i = 0; i < n; ++i) q += (grams[j][i] * cov[i]).real().trace();
    return q;
  };
  const auto objective = [&](const std::vector<CxMatrix>& cov) -> double {
    double f = 0.0;
    for (int i = 0; i < n; ++i) f += weights[i] * rate_bits(eff.eff_info[i], cov[i]);
    return f;
  };
  const auto feasible_at = [&](const std::vector<CxMatrix>& cov) -> bool {
    for (int j = 0; j < m; ++j) {
      if (harvested(cov, j) < q_targets[j] - 1e-7 * (1.0 + q_targets[j])) {
        return false;
      }
    }
    return true;
  };

  PgResult best;
  best.objective = -std::numeric_limits<double>::infinity();
  const auto consider = [&](const std::vector<CxMatrix>& cov) {
    if (!feasible_at(cov)) return;
    const double f = objective(cov);
    if (f > best.objective) {
      best.objective = f;
      best.covariances = cov;
      best.feasible = true;
    }
  };
  consider(s);

  constexpr int kStages = 14;
  constexpr double kStageDecay = 0.55;
  double rho = 10.0;
  double alpha = 0.25 * power_budget;
  const int per_stage = std::max(iters / kStages, 1);

  std::vector<CxMatrix> grad(n);
  for (int stage = 0; stage < kStages; ++stage) {
    for (int t = 0; t < per_stage; ++t) {
      std::vector<char> violated(m, 0);
      for (int j = 0; j < m; ++j) {
        violated[j] = harvested(s, j) < q_targets[j] ? 1 : 0;
      }
      double norm_sq = 0.0;
      for (int i = 0; i < n; ++i) {
        const CxMatrix& h = eff.eff_info[i];
        const CxMatrix inner = hermitize(
            CxMatrix::Identity(h.rows(), h.rows()) + h * s[i] * h.adjoint());
        grad[i] = (weights[i] / kLn2) *
                  hermitize(h.adjoint() * inner.inverse() * h);
        for (int j = 0; j < m; ++j) {
          if (violated[j]) grad[i] += rho * grams[j][i];
        }
        norm_sq += grad[i].squaredNorm();
      }
      const double scale = alpha / (std::sqrt(norm_sq) + 1e-30);
      for (int i = 0; i < n; ++i) s[i] = hermitize(s[i] + scale * grad[i]);
      project_blocks(s, power_budget);
      consider(s);
    }
    bool any_violated = false;
    for (int j = 0; j < m; ++j) {
      if (harvested(s, j) < q_targets[j] - 1e-9 * (1.0 + q_targets[j])) {
        any_violated = true;
      }
    }
    if (any_violated) rho = std::min(rho * 10.0, 1e7);
    alpha *= kStageDecay;
  }

  if (!best.feasible) {
    best.objective = objective(s);
    best.covariances = s;
  }
  return best;
}

}  // namespace oracle
