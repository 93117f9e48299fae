#include "hemoreduce/galerkin.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "hemoreduce/error.hpp"
#include "hemoreduce/parallel.hpp"

namespace hemoreduce {

namespace {

void check_bases(const PodBasis& velocity, const PodBasis& pressure) {
  if (!velocity.domain || velocity.domain != pressure.domain)
    throw Error(ErrorCode::BasisMismatch, "velocity and pressure bases on different domains");
  if (velocity.kind != FieldKind::Velocity || pressure.kind != FieldKind::Pressure)
    throw Error(ErrorCode::BasisMismatch, "basis field kinds do not match their roles");
  const auto n = static_cast<Eigen::Index>(velocity.domain->n_fluid());
  if (velocity.modes.rows() != 2 * n || pressure.modes.rows() != n)
    throw Error(ErrorCode::BasisMismatch, "basis record length does not match the domain");
}

// (K+1) x (K+1) table of div(f_j f_k), filled in parallel over j.
std::vector<std::vector<Eigen::VectorXd>> convection_fields(const CellOperators& ops,
                                                            const std::vector<Eigen::VectorXd>& f,
                                                            const std::vector<double>& g) {
  const std::size_t m = f.size();
  std::vector<std::vector<Eigen::VectorXd>> out(m, std::vector<Eigen::VectorXd>(m));
  parallel_for(m, [&](std::size_t j) {
    for (std::size_t k = 0; k < m; ++k) out[j][k] = ops.convection(f[j], g[j], f[k], g[k]);
  });
  return out;
}

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

}  // namespace

void ReducedOperators::validate() const {
  const Eigen::Index k = mass.rows(), p = pressure_mass.rows();
  auto fail = [](const char* what) {
    throw Error(ErrorCode::BasisMismatch, std::string("reduced operators: bad shape of ") + what);
  };
  if (mass.cols() != k + 1) fail("mass");
  if (diffusion.rows() != k || diffusion.cols() != k + 1) fail("diffusion");
  if (static_cast<Eigen::Index>(convection.size()) != k) fail("convection");
  for (const auto& c : convection)
    if (c.rows() != k + 1 || c.cols() != k + 1) fail("convection");
  if (pressure_gradient.rows() != k || pressure_gradient.cols() != p) fail("pressure_gradient");
  if (pressure_mass.cols() != p) fail("pressure_mass");
  if (static_cast<Eigen::Index>(pressure_convection.size()) != p) fail("pressure_convection");
  for (const auto& c : pressure_convection)
    if (c.rows() != k + 1 || c.cols() != k + 1) fail("pressure_convection");
  if (pressure_diffusion.rows() != p || pressure_diffusion.cols() != k + 1) fail("pressure_diffusion");
  if (inlet_rate.size() != p) fail("inlet_rate");
  bool finite = all_finite(mass) && all_finite(diffusion) && all_finite(pressure_gradient) &&
                all_finite(pressure_mass) && all_finite(pressure_diffusion) &&
                inlet_rate.allFinite() && std::isfinite(nu) && std::isfinite(rho);
  for (const auto& c : convection) finite = finite && all_finite(c);
  for (const auto& c : pressure_convection) finite = finite && all_finite(c);
  if (!finite) throw Error(ErrorCode::InvalidArgument, "reduced operators contain non-finite entries");
}

ReducedOperators assemble_operators(const PodBasis& velocity, const PodBasis& pressure,
                                    const LiftingField& lifting, const FluidProps& props) {
  check_bases(velocity, pressure);
  return assemble_operators(velocity, pressure, lifting, FomSolver(velocity.domain, props));
}

ReducedOperators assemble_operators(const PodBasis& velocity, const PodBasis& pressure,
                                    const LiftingField& lifting, const FomSolver& solver) {
  check_bases(velocity, pressure);
  if (!velocity.homogenized)
    throw Error(ErrorCode::BasisMismatch, "velocity basis must be built from homogenized snapshots");
  if (lifting.zeta.size() != velocity.modes.rows())
    throw Error(ErrorCode::BasisMismatch, "lifting field does not match the velocity basis");
  if (solver.domain().n_fluid() != velocity.domain->n_fluid())
    throw Error(ErrorCode::BasisMismatch, "solver domain does not match the bases");
  const FluidProps& props = solver.props();

  const CellOperators ops(velocity.domain);
  const auto w = velocity.weights();
  const Eigen::Index k = velocity.n_modes(), p = pressure.n_modes();
  const auto m = static_cast<std::size_t>(k + 1);

  std::vector<Eigen::VectorXd> f(m);
  std::vector<double> g(m, 0.0);
  f[0] = lifting.zeta;
  g[0] = 1.0;
  for (Eigen::Index j = 0; j < k; ++j) f[static_cast<std::size_t>(j + 1)] = velocity.modes.col(j);

  std::vector<Eigen::VectorXd> lap(m), grad(static_cast<std::size_t>(p));
  for (std::size_t j = 0; j < m; ++j) lap[j] = ops.velocity_laplacian(f[j], g[j]);
  for (Eigen::Index i = 0; i < p; ++i)
    grad[static_cast<std::size_t>(i)] = ops.pressure_gradient(pressure.modes.col(i));
  const auto conv = convection_fields(ops, f, g);

  ReducedOperators r;
  r.nu = props.nu();
  r.rho = props.rho;
  r.mass.resize(k, k + 1);
  r.diffusion.resize(k, k + 1);
  r.convection.assign(static_cast<std::size_t>(k), Eigen::MatrixXd(k + 1, k + 1));
  r.pressure_gradient.resize(k, p);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::VectorXd& phi = f[static_cast<std::size_t>(i + 1)];
    for (Eigen::Index j = 0; j <= k; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      r.mass(i, j) = inner_product(phi, f[jj], w);
      r.diffusion(i, j) = inner_product(phi, lap[jj], w);
      for (Eigen::Index q = 0; q <= k; ++q)
        r.convection[static_cast<std::size_t>(i)](j, q) =
            inner_product(phi, conv[jj][static_cast<std::size_t>(q)], w);
    }
    for (Eigen::Index j = 0; j < p; ++j)
      r.pressure_gradient(i, j) = inner_product(phi, grad[static_cast<std::size_t>(j)], w);
  }

  // Full-order pressure responses, projected on the pressure modes.
  std::vector<FlowState> faces(m);
  for (std::size_t j = 0; j < m; ++j) faces[j] = solver.interpolate_to_faces(f[j], g[j]);
  auto project_p = [&](const Eigen::VectorXd& field) {
    Eigen::VectorXd out(p);
    for (Eigen::Index i = 0; i < p; ++i) out[i] = inner_product(pressure.modes.col(i), field, w);
    return out;
  };
  r.pressure_mass.resize(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      r.pressure_mass(i, j) = inner_product(pressure.modes.col(i), pressure.modes.col(j), w);
  r.pressure_diffusion.resize(p, k + 1);
  r.pressure_convection.assign(static_cast<std::size_t>(p), Eigen::MatrixXd(k + 1, k + 1));
  r.inlet_rate = project_p(solver.pressure_response(solver.rest_state(), 1.0));
  for (std::size_t j = 0; j < m; ++j)
    r.pressure_diffusion.col(static_cast<Eigen::Index>(j)) =
        project_p(solver.pressure_response(solver.laplacian_term(faces[j]), 0.0));
  std::vector<Eigen::VectorXd> pc(m * m);
  parallel_for(m * m, [&](std::size_t jk) {
    const std::size_t j = jk / m, q = jk % m;
    pc[jk] = project_p(solver.pressure_response(solver.advection_term(faces[j], faces[q]), 0.0));
  });
  for (std::size_t jk = 0; jk < m * m; ++jk)
    for (Eigen::Index i = 0; i < p; ++i)
      r.pressure_convection[static_cast<std::size_t>(i)](static_cast<Eigen::Index>(jk / m),
                                                         static_cast<Eigen::Index>(jk % m)) = pc[jk][i];
  r.validate();
  return r;
}

ClassicalOperators assemble_classical(const PodBasis& velocity, const PodBasis& pressure,
                                      const FluidProps& props) {
  check_bases(velocity, pressure);
  props.validate();
  const CellOperators ops(velocity.domain);
  const auto w = velocity.weights();
  const Eigen::Index k = velocity.n_modes(), p = pressure.n_modes();
  std::vector<Eigen::VectorXd> f(static_cast<std::size_t>(k));
  for (Eigen::Index j = 0; j < k; ++j) f[static_cast<std::size_t>(j)] = velocity.modes.col(j);
  const auto conv = convection_fields(ops, f, std::vector<double>(f.size(), 0.0));

  ClassicalOperators c;
  c.mass.resize(k, k);
  c.diffusion.resize(k, k);
  c.convection.assign(static_cast<std::size_t>(k), Eigen::MatrixXd(k, k));
  c.pressure_gradient.resize(k, p);
  c.divergence.resize(p, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    const Eigen::VectorXd lap = ops.velocity_laplacian(f[jj], 0.0);
    const Eigen::VectorXd div = ops.divergence(f[jj], 0.0);
    for (Eigen::Index i = 0; i < k; ++i) {
      c.mass(i, j) = inner_product(f[static_cast<std::size_t>(i)], f[jj], w);
      c.diffusion(i, j) = props.nu() * inner_product(f[static_cast<std::size_t>(i)], lap, w);
      for (Eigen::Index q = 0; q < k; ++q)
        c.convection[static_cast<std::size_t>(i)](j, q) =
            inner_product(f[static_cast<std::size_t>(i)], conv[jj][static_cast<std::size_t>(q)], w);
    }
    for (Eigen::Index i = 0; i < p; ++i) c.divergence(i, j) = inner_product(pressure.modes.col(i), div, w);
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    const Eigen::VectorXd grad = ops.pressure_gradient(pressure.modes.col(j));
    for (Eigen::Index i = 0; i < k; ++i)
      c.pressure_gradient(i, j) = inner_product(f[static_cast<std::size_t>(i)], grad, w) / props.rho;
  }
  return c;
}

GalerkinRom::GalerkinRom(ReducedOperators ops) : ops_(std::move(ops)) {
  ops_.validate();
  const Eigen::Index k = ops_.n_velocity();
  const Eigen::MatrixXd mh = ops_.mass.rightCols(k);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(mh);
  if (!lu.isInvertible()) throw Error(ErrorCode::BasisMismatch, "reduced mass matrix is singular");
  mass_inv_ = lu.inverse();

  Eigen::FullPivLU<Eigen::MatrixXd> plu(ops_.pressure_mass);
  if (ops_.n_pressure() > 0 && !plu.isInvertible())
    throw Error(ErrorCode::SingularPressureSystem, "pressure mode Gram matrix is singular");
  pressure_mass_inv_ = ops_.n_pressure() > 0 ? Eigen::MatrixXd(plu.inverse()) : Eigen::MatrixXd(0, 0);
}

Eigen::VectorXd GalerkinRom::augmented(const Eigen::VectorXd& a, double u_in) const {
  if (a.size() != ops_.n_velocity())
    throw Error(ErrorCode::LengthMismatch, "coefficient vector length does not match the ROM");
  Eigen::VectorXd ab(a.size() + 1);
  ab[0] = u_in;
  ab.tail(a.size()) = a;
  return ab;
}

Eigen::VectorXd GalerkinRom::solve_pressure(const Eigen::VectorXd& a, double u_in,
                                            double du_in_dt) const {
  const Eigen::VectorXd ab = augmented(a, u_in);
  const Eigen::Index p = ops_.n_pressure();
  Eigen::VectorXd rhs = ops_.nu * (ops_.pressure_diffusion * ab) + ops_.inlet_rate * du_in_dt;
  for (Eigen::Index i = 0; i < p; ++i)
    rhs[i] -= ab.dot(ops_.pressure_convection[static_cast<std::size_t>(i)] * ab);
  return pressure_mass_inv_ * rhs;
}

Eigen::VectorXd GalerkinRom::rhs(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double u_in,
                                 double du_in_dt) const {
  const Eigen::VectorXd ab = augmented(a, u_in);
  if (b.size() != ops_.n_pressure())
    throw Error(ErrorCode::LengthMismatch, "pressure coefficient length does not match the ROM");
  const Eigen::Index k = ops_.n_velocity();
  Eigen::VectorXd f = ops_.nu * (ops_.diffusion * ab) - ops_.pressure_gradient * b / ops_.rho -
                      ops_.mass.col(0) * du_in_dt;
  for (Eigen::Index i = 0; i < k; ++i)
    f[i] -= ab.dot(ops_.convection[static_cast<std::size_t>(i)] * ab);
  return mass_inv_ * f;
}

Eigen::VectorXd GalerkinRom::derivative(const Eigen::VectorXd& a, double u_in,
                                        double du_in_dt) const {
  return rhs(a, solve_pressure(a, u_in, du_in_dt), u_in, du_in_dt);
}

RomTrajectory integrate_rom(const GalerkinRom& rom, const Eigen::VectorXd& a0,
                            const InletSignal& signal, double horizon, double dt,
                            int sample_every) {
  if (!(dt > 0.0) || !(horizon >= 0.0) || sample_every < 1)
    throw Error(ErrorCode::InvalidArgument, "integrate_rom: need dt > 0, horizon >= 0, sample_every >= 1");
  if (!a0.allFinite()) throw Error(ErrorCode::InvalidArgument, "integrate_rom: non-finite a0");
  const auto t_start = std::chrono::steady_clock::now();
  const long steps = std::lround(horizon / dt);
  const long samples = steps / sample_every + 1;
  const Eigen::Index k = rom.operators().n_velocity(), p = rom.operators().n_pressure();

  RomTrajectory out;
  out.velocity_coeffs.resize(k, samples);
  out.pressure_coeffs.resize(p, samples);
  out.times.reserve(static_cast<std::size_t>(samples));
  const double limit = 1e6 * std::max(a0.norm(), 1.0);

  auto deriv = [&](const Eigen::VectorXd& a, double t) {
    return rom.derivative(a, inlet_velocity(signal, t), inlet_velocity_rate(signal, t));
  };
  auto record = [&](const Eigen::VectorXd& a, double t) {
    const auto col = static_cast<Eigen::Index>(out.times.size());
    out.velocity_coeffs.col(col) = a;
    out.pressure_coeffs.col(col) =
        rom.solve_pressure(a, inlet_velocity(signal, t), inlet_velocity_rate(signal, t));
    out.times.push_back(t);
  };

  Eigen::VectorXd a = a0;
  record(a, 0.0);
  for (long n = 0; n < steps; ++n) {
    const double t = static_cast<double>(n) * dt;
    const Eigen::VectorXd k1 = deriv(a, t);
    const Eigen::VectorXd k2 = deriv(a + 0.5 * dt * k1, t + 0.5 * dt);
    const Eigen::VectorXd k3 = deriv(a + 0.5 * dt * k2, t + 0.5 * dt);
    const Eigen::VectorXd k4 = deriv(a + dt * k3, t + dt);
    a += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double nrm = a.norm();
    if (!std::isfinite(nrm) || nrm > limit) {
      throw Error(ErrorCode::BlowUp, "ROM coefficients diverged at t=" +
                                         std::to_string(t + dt) + " (||a||=" + std::to_string(nrm) + ")");
    }
    if ((n + 1) % sample_every == 0) record(a, static_cast<double>(n + 1) * dt);
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

}  // namespace hemoreduce
