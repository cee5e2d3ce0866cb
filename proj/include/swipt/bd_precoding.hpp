/**
 * @file bd_precoding.hpp
 * @brief Block-diagonalization machinery: per-user null-space bases,
 *        the reduced effective channels they induce, and precoder assembly.
 */
#pragma once

#include "swipt/core_model.hpp"

namespace swipt {

/// Singular values below kNullRankTol * sigma_max count as zero when
/// deciding the numerical rank of a stacked channel matrix.
inline constexpr double kNullRankTol = 1e-10;

/// Reduced channels after projecting each info user onto the null space
/// of every other info user's channel. eff_cross[j][i] is harvest user
/// j's channel seen through info user i's basis.
struct EffectiveChannels {
  int n_t = 0;
  std::vector<int> info_ids;
  std::vector<int> harvest_ids;
  std::vector<CxMatrix> null_basis;                // n_T x L_i, orthonormal columns
  std::vector<CxMatrix> eff_info;                  // H_i * basis_i
  std::vector<std::vector<CxMatrix>> eff_cross;    // [harvest j][info i]

  int num_info() const { return static_cast<int>(info_ids.size()); }
  int num_harvest() const { return static_cast<int>(harvest_ids.size()); }

  /// Lift a reduced covariance back to the n_T-dimensional transmit space.
  CxMatrix lift(int info_index, const CxMatrix& reduced) const {
    return null_basis[info_index] * reduced * null_basis[info_index].adjoint();
  }
};

/// Orthonormal basis of the null space of `stacked_others` (rows = the other
/// info users' channels stacked). An empty stack (0 rows) yields the full
/// identity basis. Throws std::runtime_error when the numerical null space
/// is empty, i.e. block diagonalization is impossible for this user set.
CxMatrix null_space_basis(const CxMatrix& stacked_others);

/// Builds bases and reduced channels for sets.info against sets.harvest.
EffectiveChannels build_effective_channels(const ChannelSet& channels,
                                           const UserSets& sets);

/// B_i = basis * a_i^{-1/2} * v_hat * diag(sqrt(d_hat)). Throws
/// std::runtime_error if a_i is not positive definite.
CxMatrix assemble_precoder(const CxMatrix& a_i, const CxMatrix& v_hat,
                           const Eigen::VectorXd& d_hat,
                           const CxMatrix& null_basis);

}  // namespace swipt
