#pragma once

// Proper orthogonal decomposition by the method of snapshots.
//
// Scaling convention: the correlation matrix is the plain Gram matrix
// C_ij = (u_i, u_j), so sum_n ||u_n||^2 = sum_i lambda_i, and modes are
// phi_i = lambda_i^{-1/2} sum_n u_n Q_ni (unit norm in exact arithmetic),
// followed by one modified Gram-Schmidt pass under the weighted product.

#include <Eigen/Dense>
#include <vector>

#include "hemoreduce/snapshot_matrix.hpp"

namespace hemoreduce {

struct PodBasis {
  FieldKind kind = FieldKind::Velocity;
  std::shared_ptr<const DomainMask> domain;
  Eigen::MatrixXd modes;            // record_size x N_r, orthonormal under inner_product
  Eigen::VectorXd eigenvalues;      // all N_s eigenvalues, non-increasing, >= 0
  Eigen::VectorXd energy_fraction;  // cumulative sum(lambda_1..k) / sum(lambda)
  Eigen::MatrixXd coeff_train;      // N_r x N_s
  std::vector<double> times;        // training snapshot times
  bool homogenized = false;

  Eigen::Index n_modes() const noexcept { return modes.cols(); }
  std::span<const double> weights() const noexcept {
    return domain ? domain->weights() : std::span<const double>{};
  }
};

struct EigenPairs {
  Eigen::MatrixXd vectors;  // columns, matching `values`
  Eigen::VectorXd values;   // descending, clipped at 0
};

constexpr double kRankThreshold = 1e-12;

Eigen::MatrixXd correlation_matrix(const SnapshotMatrix& snaps);

/// Symmetric eigendecomposition, descending order. Throws NotSymmetric.
EigenPairs solve_eigen(const Eigen::MatrixXd& c);

/// Throws RankDeficient when lambda_{N_r} <= kRankThreshold * lambda_1.
PodBasis compute_modes(const SnapshotMatrix& snaps, const EigenPairs& eig, Eigen::Index n_modes);

/// correlation_matrix + solve_eigen + compute_modes.
PodBasis compute_pod(const SnapshotMatrix& snaps, Eigen::Index n_modes);

Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd>& field, const PodBasis& basis);
Eigen::VectorXd reconstruct(const PodBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& coeffs);

/// Modified Gram-Schmidt of the columns of `m` under the weighted product.
void orthonormalize(Eigen::MatrixXd& m, std::span<const double> weights);

}  // namespace hemoreduce
