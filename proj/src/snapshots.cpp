#include "hemoreduce/snapshots.hpp"

#include <algorithm>

#include "hemoreduce/error.hpp"

namespace hemoreduce {

LiftingField compute_lifting(const FomSolver& solver, const LiftingOptions& opt) {
  if (!(opt.reference_speed > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "lifting reference speed must be > 0");
  }
  double dt = opt.dt;
  if (dt <= 0.0) {
    dt = 0.5 * stable_dt(solver.domain(), solver.props(), 1.5 * opt.reference_speed);
  }
  SteadyResult steady = run_to_steady(solver, opt.reference_speed, dt,
                                      opt.tolerance * opt.reference_speed, opt.max_steps);
  const double trace = solver.inlet_trace(steady.state);
  LiftingField lift;
  lift.faces = std::move(steady.state);
  for (double& x : lift.faces.u) x /= trace;
  for (double& x : lift.faces.v) x /= trace;
  std::fill(lift.faces.p.begin(), lift.faces.p.end(), 0.0);
  lift.faces.t = 0.0;
  lift.zeta = solver.cell_velocity(lift.faces);
  lift.inlet_trace = solver.inlet_trace(lift.faces);
  return lift;
}

namespace {

SnapshotMatrix shift(const SnapshotMatrix& snaps, const LiftingField& lifting, double sign) {
  if (snaps.kind != FieldKind::Velocity) {
    throw Error(ErrorCode::InvalidArgument, "only velocity snapshots carry a lifting");
  }
  if (snaps.inlet_values.size() != snaps.n_snapshots()) {
    throw Error(ErrorCode::MissingInletValues, "snapshots lack per-column inlet values");
  }
  if (lifting.zeta.size() != snaps.data.rows()) {
    throw Error(ErrorCode::LengthMismatch, "lifting field does not match snapshot records");
  }
  SnapshotMatrix out = snaps;
  for (Eigen::Index c = 0; c < out.data.cols(); ++c) {
    out.data.col(c) += sign * snaps.inlet_values[static_cast<std::size_t>(c)] * lifting.zeta;
  }
  return out;
}

}  // namespace

SnapshotMatrix homogenize(const SnapshotMatrix& snaps, const LiftingField& lifting) {
  if (snaps.homogenized) throw Error(ErrorCode::AlreadyHomogenized, "snapshots already homogenized");
  SnapshotMatrix out = shift(snaps, lifting, -1.0);
  out.homogenized = true;
  return out;
}

SnapshotMatrix dehomogenize(const SnapshotMatrix& snaps, const LiftingField& lifting) {
  if (!snaps.homogenized) throw Error(ErrorCode::InvalidArgument, "snapshots are not homogenized");
  SnapshotMatrix out = shift(snaps, lifting, +1.0);
  out.homogenized = false;
  return out;
}

FlowState lifted_state(const LiftingField& lifting, double u_in) {
  FlowState s = lifting.faces;
  for (double& x : s.u) x *= u_in;
  for (double& x : s.v) x *= u_in;
  std::fill(s.p.begin(), s.p.end(), 0.0);
  s.t = 0.0;
  return s;
}

}  // namespace hemoreduce
