#pragma once

// Full-order model: unsteady incompressible Newtonian flow on a masked MAC
// grid, advanced with an explicit Chorin projection step.

#include <Eigen/Sparse>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "hemoreduce/geometry.hpp"
#include "hemoreduce/snapshot_matrix.hpp"

namespace hemoreduce {

struct FluidProps {
  double rho = 1060.0;  // kg/m^3
  double mu = 0.106;    // Pa s
  double nu() const noexcept { return mu / rho; }
  void validate() const;
};

struct Harmonic {
  double amplitude = 0.0;  // m/s
  double frequency = 0.0;  // Hz
  double phase = 0.0;      // rad
};

struct InletSignal {
  double u_bar = 0.2;
  std::vector<Harmonic> harmonics;

  /// Throws InvalidArgument if u_bar - sum|A_k| <= 0.
  void validate() const;
};

double inlet_velocity(const InletSignal& signal, double t) noexcept;
double inlet_velocity_rate(const InletSignal& signal, double t) noexcept;

/// Multi-harmonic training waveform. u_bar = 0.2, A ~ U(0.02, 0.05),
/// f ~ U(0.2, 0.5), phi ~ U(0, 2 pi). If sum A_k >= u_bar the amplitudes are
/// rescaled so that sum A_k = 0.18.
InletSignal sample_training_signal(std::uint64_t seed, int harmonic_count);

/// Rescale rule applied by sample_training_signal, exposed for testing.
void enforce_forward_flow(InletSignal& signal);

/// Face velocities (u on x-faces, v on y-faces), cell pressure on fluid cells.
struct FlowState {
  std::vector<double> u;  // (nx + 1) * ny
  std::vector<double> v;  // nx * (ny + 1)
  std::vector<double> p;  // n_fluid, Pa
  double t = 0.0;
};

enum class PoissonSolver : std::uint8_t { Direct, ConjugateGradient };

struct FomOptions {
  double upwind_blend = 0.0;   // 0 = central, 1 = donor cell
  PoissonSolver solver = PoissonSolver::Direct;
  double cg_tolerance = 1e-10;
  int cg_max_iterations = 10000;
};

struct StepDiagnostics {
  double max_divergence = 0.0;  // max |div u| over fluid cells, 1/s
  double cfl = 0.0;
  int poisson_iterations = 0;
};

struct FluxBalance {
  double inflow = 0.0;
  std::vector<double> outflow;  // per outlet group
};

/// Largest explicit step for the advective (CFL <= 1) and diffusive
/// (nu dt / h^2 <= 1/4) limits.
double stable_dt(const DomainMask& domain, const FluidProps& props, double u_max);

class FomSolver {
 public:
  FomSolver(std::shared_ptr<const DomainMask> domain, FluidProps props, FomOptions options = {});

  const DomainMask& domain() const noexcept { return *domain_; }
  std::shared_ptr<const DomainMask> domain_ptr() const noexcept { return domain_; }
  const FluidProps& props() const noexcept { return props_; }
  const FomOptions& options() const noexcept { return options_; }

  FlowState rest_state() const;

  /// One fractional step from state.t to state.t + dt; inlet faces carry
  /// u_in(t + dt). Throws UnstableDt or PoissonNoConvergence.
  FlowState step(const FlowState& state, double dt, const InletSignal& signal,
                 StepDiagnostics* diag = nullptr) const;

  std::vector<double> divergence(const FlowState& s) const;
  double max_divergence(const FlowState& s) const;
  double max_speed(const FlowState& s) const;

  /// Face velocities averaged to fluid cell centers (x block, then y block).
  Eigen::VectorXd cell_velocity(const FlowState& s) const;
  FluxBalance fluxes(const FlowState& s) const;

  /// Face field from a cell-centered velocity: interior faces average their two
  /// cells, wall faces are zero, inlet faces carry inlet_coefficient * n_in and
  /// outlet faces copy their upstream face. Pressure is left empty.
  FlowState interpolate_to_faces(const Eigen::Ref<const Eigen::VectorXd>& cell_velocity,
                                 double inlet_coefficient) const;

  /// Central-difference advection of b by a on interior faces, bilinear in
  /// (a, b); equals the advection of `step` at upwind_blend 0 when a = b.
  /// Non-interior faces are zero.
  FlowState advection_term(const FlowState& a, const FlowState& b) const;
  /// Discrete Laplacian of the face velocities on interior faces (no viscosity factor).
  FlowState laplacian_term(const FlowState& s) const;

  /// Pressure balancing a momentum right-hand side r (face accelerations) and
  /// an inlet acceleration: the solver's own Poisson problem
  /// -Lap p = -rho div r with the inlet flux rate du_in_dt, outlet faces taking
  /// the acceleration of their upstream face. Linear in (r, du_in_dt).
  Eigen::VectorXd pressure_response(const FlowState& r, double du_in_dt) const;
  /// pressure_response of the state's own momentum terms (central advection).
  Eigen::VectorXd consistent_pressure(const FlowState& s, double du_in_dt) const;
  /// Mean of u . n_in over the inlet faces.
  double inlet_trace(const FlowState& s) const;

 private:
  struct Neighbor {
    int idx;
    double sign;
  };
  struct UStencil {
    int self;
    Neighbor e, w, n, s;  // same-component neighbors
    int c1, c2, c3, c4;   // cross-component faces: (lower/left, upper/right) pairs
  };

  int uidx(int i, int j) const noexcept { return i + (domain_->nx() + 1) * j; }
  int vidx(int i, int j) const noexcept { return i + domain_->nx() * j; }
  Neighbor x_neighbor(int i, int j, int self) const;
  Neighbor y_neighbor(int i, int j, int self) const;
  void build_stencils();
  void build_poisson();

  std::shared_ptr<const DomainMask> domain_;
  FluidProps props_;
  FomOptions options_;
  std::vector<UStencil> ustencil_, vstencil_;
  std::vector<std::pair<int, int>> uoutlet_, voutlet_;  // (outlet face, upstream face)
  std::vector<int> uinlet_, vinlet_;
  Eigen::SparseMatrix<double> poisson_;  // h^2 * (-Laplacian) on fluid cells, SPD
  struct Factorization;
  std::shared_ptr<Factorization> factor_;
};

struct RunOptions {
  std::ostream* log = nullptr;   // progress lines `t=<s> div=<max> cfl=<val>`
  double log_every = 1.0;        // seconds of simulated time between log lines
};

struct FomRun {
  SnapshotMatrix velocity;
  SnapshotMatrix pressure;
  FlowState final_state;
  double wall_seconds = 0.0;
  double max_divergence = 0.0;  // over all steps
  double max_cfl = 0.0;
};

/// Advances from `initial` (rest when empty) over [0, horizon], sampling every
/// `sample_every` steps including t = 0. A supplied initial state gets the
/// pressure consistent with its velocity.
FomRun run_fom(const FomSolver& solver, const InletSignal& signal, double horizon, double dt,
               int sample_every, const std::optional<FlowState>& initial = std::nullopt,
               const RunOptions& options = {});

struct SteadyResult {
  FlowState state;
  long steps = 0;
  double last_change = 0.0;  // ||u^{n+1} - u^n||_inf of the final step
  double max_divergence = 0.0;
};

/// Integrates with constant inflow `u_const` until the per-step velocity change
/// drops below `tol`. Throws NoSteadyState after `max_steps`.
SteadyResult run_to_steady(const FomSolver& solver, double u_const, double dt, double tol,
                           long max_steps);

}  // namespace hemoreduce
