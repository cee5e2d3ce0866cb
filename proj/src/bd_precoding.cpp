#include "swipt/bd_precoding.hpp"

#include <Eigen/SVD>

#include <stdexcept>
#include <string>

#include "linalg_util.hpp"

namespace swipt {

CxMatrix null_space_basis(const CxMatrix& stacked_others) {
  const Eigen::Index n_t = stacked_others.cols();
  if (stacked_others.rows() == 0) {
    return CxMatrix::Identity(n_t, n_t);
  }

  Eigen::JacobiSVD<CxMatrix> svd(stacked_others, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? kNullRankTol * sv.maxCoeff() : 0.0;
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv[rank] > cutoff) ++rank;

  const Eigen::Index null_dim = n_t - rank;
  if (null_dim <= 0) {
    throw std::runtime_error("BD infeasible for this user set: stacked "
                             "channels leave no null space");
  }
  return svd.matrixV().rightCols(null_dim);
}

EffectiveChannels build_effective_channels(const ChannelSet& channels,
                                           const UserSets& sets) {
  EffectiveChannels eff;
  eff.info_ids = sets.info;
  eff.harvest_ids = sets.harvest;

  if (!sets.info.empty()) {
    eff.n_t = channels.of(sets.info.front()).n_tx();
  } else if (!sets.harvest.empty()) {
    eff.n_t = channels.of(sets.harvest.front()).n_tx();
  }

  for (int id : sets.info) {
    const ChannelMatrix& h = channels.of(id);
    if (!h.entries.allFinite()) {
      throw std::invalid_argument("channel of user " + std::to_string(id) +
                                  " has non-finite entries");
    }
    if (h.n_tx() != eff.n_t) {
      throw std::invalid_argument("inconsistent transmit antenna counts");
    }
  }

  for (std::size_t i = 0; i < sets.info.size(); ++i) {
    Eigen::Index rows = 0;
    for (std::size_t k = 0; k < sets.info.size(); ++k) {
      if (k != i) rows += channels.of(sets.info[k]).entries.rows();
    }
    CxMatrix stack(rows, eff.n_t);
    Eigen::Index at = 0;
    for (std::size_t k = 0; k < sets.info.size(); ++k) {
      if (k == i) continue;
      const CxMatrix& hk = channels.of(sets.info[k]).entries;
      stack.middleRows(at, hk.rows()) = hk;
      at += hk.rows();
    }

    CxMatrix basis = null_space_basis(stack);
    eff.eff_info.push_back(channels.of(sets.info[i]).entries * basis);
    eff.null_basis.push_back(std::move(basis));
  }

  for (int j : sets.harvest) {
    const CxMatrix& hj = channels.of(j).entries;
    if (!hj.allFinite()) {
      throw std::invalid_argument("channel of user " + std::to_string(j) +
                                  " has non-finite entries");
    }
    std::vector<CxMatrix> row;
    row.reserve(eff.null_basis.size());
    for (const CxMatrix& basis : eff.null_basis) {
      row.push_back(hj * basis);
    }
    eff.eff_cross.push_back(std::move(row));
  }

  return eff;
}

CxMatrix assemble_precoder(const CxMatrix& a_i, const CxMatrix& v_hat,
                           const Eigen::VectorXd& d_hat,
                           const CxMatrix& null_basis) {
  if (v_hat.cols() != d_hat.size()) {
    throw std::invalid_argument("assemble_precoder: v_hat/d_hat size mismatch");
  }
  CxMatrix a_inv_sqrt;
  if (!detail::inv_sqrt_hermitian(a_i, a_inv_sqrt)) {
    throw std::runtime_error("assemble_precoder: A_i is not positive definite");
  }
  return null_basis * a_inv_sqrt * v_hat *
         d_hat.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace swipt
