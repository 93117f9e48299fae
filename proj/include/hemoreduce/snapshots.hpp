#pragma once

// Lifting function and homogenization of velocity snapshots.

#include <Eigen/Dense>

#include "hemoreduce/fom.hpp"
#include "hemoreduce/snapshot_matrix.hpp"

namespace hemoreduce {

/// Steady flow carrying the inlet boundary condition at unit inlet speed.
struct LiftingField {
  Eigen::VectorXd zeta;   // cell-centered, stacked (x block, y block)
  FlowState faces;        // face velocities of the same field; pressure zeroed
  double inlet_trace = 0.0;
};

struct LiftingOptions {
  double reference_speed = 1.0;  // inflow at which the steady state is computed
  double dt = 0.0;               // 0: half of stable_dt at 1.5 x reference speed
  double tolerance = 1e-10;      // per-step ||du||_inf, relative to reference_speed
  long max_steps = 2'000'000;
};

/// Runs the full-order solver with constant inflow to steady state and
/// normalizes the result to unit mean inlet-normal trace.
LiftingField compute_lifting(const FomSolver& solver, const LiftingOptions& options = {});

/// u'(t_n) = u(t_n) - zeta u_in(t_n) for every column.
SnapshotMatrix homogenize(const SnapshotMatrix& snaps, const LiftingField& lifting);

/// Inverse of homogenize.
SnapshotMatrix dehomogenize(const SnapshotMatrix& snaps, const LiftingField& lifting);

/// Face state zeta * u_in, used as a developed initial condition.
FlowState lifted_state(const LiftingField& lifting, double u_in);

}  // namespace hemoreduce
