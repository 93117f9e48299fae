#pragma once

// Intrusive POD-Galerkin ROM with a reduced pressure-Poisson equation.
//
// The velocity is u = zeta u_in(t) + sum_j a_j phi_j. Operators carry an
// augmented velocity index 0 = lifting zeta (coefficient u_in), 1..K = modes;
// row/test indices run over the K modes or the pressure modes only. The
// augmented coefficient vector is abar = [u_in, a].
//
// Momentum projected on phi_i (cell-centered operators):
//   sum_j mass_ij d(abar_j)/dt = nu (diffusion abar)_i - abar^T C_i abar
//                                - (1/rho) (pressure_gradient b)_i
// Pressure: the full-order Poisson problem of the FOM is linear in its
// sources, so its response to every velocity term (viscous, each convective
// pair, inlet acceleration) is solved once offline and projected on chi:
//   (pressure_mass b)_i = nu (pressure_diffusion abar)_i - abar^T G_i abar
//                         + inlet_rate_i du_in/dt
// with G_i(j,k) = (chi_i, P[adv(phi_j, phi_k)]), pressure_diffusion_ij =
// (chi_i, P[lap phi_j]), inlet_rate_i = (chi_i, P[inlet]) and P the FOM
// pressure response on face fields interpolated from the cell modes.

#include <Eigen/Dense>
#include <vector>

#include "hemoreduce/field_ops.hpp"
#include "hemoreduce/fom.hpp"
#include "hemoreduce/pod.hpp"
#include "hemoreduce/snapshots.hpp"

namespace hemoreduce {

struct ReducedOperators {
  double nu = 0.0, rho = 0.0;
  Eigen::MatrixXd mass;                              // K x (K+1): (phi_i, phi_j)
  Eigen::MatrixXd diffusion;                         // K x (K+1): (phi_i, lap phi_j)
  std::vector<Eigen::MatrixXd> convection;           // K of (K+1)^2: (phi_i, div(phi_j phi_k))
  Eigen::MatrixXd pressure_gradient;                 // K x P: (phi_i, grad chi_j)
  Eigen::MatrixXd pressure_mass;                     // P x P: (chi_i, chi_j)
  std::vector<Eigen::MatrixXd> pressure_convection;  // P of (K+1)^2
  Eigen::MatrixXd pressure_diffusion;                // P x (K+1)
  Eigen::VectorXd inlet_rate;                        // P

  Eigen::Index n_velocity() const noexcept { return mass.rows(); }
  Eigen::Index n_pressure() const noexcept { return pressure_mass.rows(); }
  /// Throws BasisMismatch when block shapes disagree, InvalidArgument on non-finite entries.
  void validate() const;
};

/// Velocity basis must be homogenized and both bases must share the domain.
ReducedOperators assemble_operators(const PodBasis& velocity, const PodBasis& pressure,
                                    const LiftingField& lifting, const FluidProps& props);
/// As above with a caller-supplied solver (its Poisson operator is reused).
ReducedOperators assemble_operators(const PodBasis& velocity, const PodBasis& pressure,
                                    const LiftingField& lifting, const FomSolver& solver);

/// Operators of the classical velocity-pressure system, assembled for cross-checks:
/// M da/dt + a^T Q a - L a + P b = 0 with R a = 0 (no lifting).
struct ClassicalOperators {
  Eigen::MatrixXd mass;                  // (phi_i, phi_j)
  std::vector<Eigen::MatrixXd> convection;  // Q_i(j,k) = (phi_i, div(phi_j phi_k))
  Eigen::MatrixXd diffusion;             // L_ij = (phi_i, nu lap phi_j)
  Eigen::MatrixXd pressure_gradient;     // P_ij = (phi_i, grad chi_j) / rho
  Eigen::MatrixXd divergence;            // R_ij = (chi_i, div phi_j)
};

ClassicalOperators assemble_classical(const PodBasis& velocity, const PodBasis& pressure,
                                      const FluidProps& props);

/// Factorized reduced system. Throws SingularPressureSystem when the pressure
/// mass block is singular.
class GalerkinRom {
 public:
  explicit GalerkinRom(ReducedOperators ops);

  const ReducedOperators& operators() const noexcept { return ops_; }

  Eigen::VectorXd solve_pressure(const Eigen::VectorXd& a, double u_in, double du_in_dt) const;
  Eigen::VectorXd rhs(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double u_in,
                      double du_in_dt) const;
  /// rhs with b from solve_pressure.
  Eigen::VectorXd derivative(const Eigen::VectorXd& a, double u_in, double du_in_dt) const;

 private:
  Eigen::VectorXd augmented(const Eigen::VectorXd& a, double u_in) const;
  ReducedOperators ops_;
  Eigen::MatrixXd mass_inv_;
  Eigen::MatrixXd pressure_mass_inv_;
};

struct RomTrajectory {
  std::vector<double> times;
  Eigen::MatrixXd velocity_coeffs;  // K x n_samples
  Eigen::MatrixXd pressure_coeffs;  // P x n_samples
  double wall_seconds = 0.0;
};

/// Classical RK4 from t = 0 to horizon with step dt, sampling every
/// `sample_every` steps including t = 0. Throws BlowUp when ||a|| exceeds
/// 1e6 times max(||a0||, 1).
RomTrajectory integrate_rom(const GalerkinRom& rom, const Eigen::VectorXd& a0,
                            const InletSignal& signal, double horizon, double dt,
                            int sample_every);

}  // namespace hemoreduce
