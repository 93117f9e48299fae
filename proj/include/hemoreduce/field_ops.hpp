#pragma once

// Cell-centered discrete differential operators on the fluid cells of a
// DomainMask, used to assemble the Galerkin reduced system.
//
// Every operator acts on an "extended" vector: fluid-cell values followed by
// one ghost value per (cell, boundary face) pair. Ghost values are affine in
// the cell values and in the inlet coefficient g of the field:
//   Dirichlet value b at a face:  q = 8/3 b - 2 f0 + f1/3  (f1: next cell inward)
//                                 q = 2 b - f0             (no inward cell)
//   zero Neumann:                 q = f0
// Velocity components are Dirichlet on walls (0) and inlets (g n_in), Neumann
// on outlets. Pressure is Neumann on walls and inlets, Dirichlet 0 on outlets.
// Derivatives are central differences over the extended vector.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>

#include "hemoreduce/geometry.hpp"

namespace hemoreduce {

class CellOperators {
 public:
  using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  explicit CellOperators(std::shared_ptr<const DomainMask> domain);

  const DomainMask& domain() const noexcept { return *domain_; }
  Eigen::Index n_cells() const noexcept { return n_; }
  Eigen::Index n_ghosts() const noexcept { return n_ghost_; }

  /// Extended vector of one velocity component (0 = x, 1 = y).
  Eigen::VectorXd extend_velocity(int component, const Eigen::Ref<const Eigen::VectorXd>& values,
                                  double inlet_coefficient) const;
  Eigen::VectorXd extend_pressure(const Eigen::Ref<const Eigen::VectorXd>& values) const;

  /// Central x / y differences of an extended vector.
  Eigen::VectorXd ddx(const Eigen::VectorXd& ext) const { return dx_ * ext; }
  Eigen::VectorXd ddy(const Eigen::VectorXd& ext) const { return dy_ * ext; }
  Eigen::VectorXd laplacian(const Eigen::VectorXd& ext) const { return lap_ * ext; }

  /// Pressure gradient, stacked (x block, y block).
  Eigen::VectorXd pressure_gradient(const Eigen::Ref<const Eigen::VectorXd>& p) const;
  /// Component-wise Laplacian of a stacked velocity field.
  Eigen::VectorXd velocity_laplacian(const Eigen::Ref<const Eigen::VectorXd>& u, double g) const;
  /// div(u (x) w): component b is sum_a d_a(u_a w_b); u advects w.
  Eigen::VectorXd convection(const Eigen::Ref<const Eigen::VectorXd>& u, double gu,
                             const Eigen::Ref<const Eigen::VectorXd>& w, double gw) const;
  Eigen::VectorXd divergence(const Eigen::Ref<const Eigen::VectorXd>& u, double g) const;

 private:
  std::shared_ptr<const DomainMask> domain_;
  Eigen::Index n_ = 0, n_ghost_ = 0;
  SpMat ext_p_, ext_v_[2];     // (n + n_ghost) x n
  Eigen::VectorXd inlet_v_[2];  // (n + n_ghost): response to unit inlet coefficient
  SpMat dx_, dy_, lap_;         // n x (n + n_ghost)
  SpMat grad_p_;                // 2n x n
};

}  // namespace hemoreduce
