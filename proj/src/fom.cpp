#include "hemoreduce/fom.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

#include "hemoreduce/error.hpp"

namespace hemoreduce {

void FluidProps::validate() const {
  if (!(rho > 0.0) || !(mu > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "fluid density and viscosity must be > 0");
  }
}

void InletSignal::validate() const {
  double amp = 0.0;
  for (const auto& hmn : harmonics) amp += std::abs(hmn.amplitude);
  if (!(u_bar - amp > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "inlet signal reverses: u_bar - sum|A_k| <= 0");
  }
}

double inlet_velocity(const InletSignal& s, double t) noexcept {
  double u = s.u_bar;
  for (const auto& hmn : s.harmonics) {
    u += hmn.amplitude * std::sin(2.0 * std::numbers::pi * hmn.frequency * t + hmn.phase);
  }
  return u;
}

double inlet_velocity_rate(const InletSignal& s, double t) noexcept {
  double du = 0.0;
  for (const auto& hmn : s.harmonics) {
    const double w = 2.0 * std::numbers::pi * hmn.frequency;
    du += w * hmn.amplitude * std::cos(w * t + hmn.phase);
  }
  return du;
}

void enforce_forward_flow(InletSignal& signal) {
  double sum = 0.0;
  for (const auto& hmn : signal.harmonics) sum += std::abs(hmn.amplitude);
  if (sum >= signal.u_bar) {
    const double scale = 0.18 / sum;
    for (auto& hmn : signal.harmonics) hmn.amplitude *= scale;
  }
}

InletSignal sample_training_signal(std::uint64_t seed, int harmonic_count) {
  if (harmonic_count < 2 || harmonic_count > 5) {
    throw Error(ErrorCode::HOutOfRange,
                "harmonic count must be in {2,3,4,5}, got " + std::to_string(harmonic_count));
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(0.02, 0.05), freq(0.20, 0.50),
      phase(0.0, 2.0 * std::numbers::pi);
  InletSignal s;
  s.u_bar = 0.2;
  for (int k = 0; k < harmonic_count; ++k) {
    Harmonic hmn;
    hmn.amplitude = amp(rng);
    hmn.frequency = freq(rng);
    hmn.phase = phase(rng);
    s.harmonics.push_back(hmn);
  }
  enforce_forward_flow(s);
  s.validate();
  return s;
}

double stable_dt(const DomainMask& domain, const FluidProps& props, double u_max) {
  const double h = domain.h();
  double dt = 0.25 * h * h / props.nu();
  if (u_max > 0.0) dt = std::min(dt, h / u_max);
  return dt;
}

struct FomSolver::Factorization {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> direct;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
};

FomSolver::FomSolver(std::shared_ptr<const DomainMask> domain, FluidProps props, FomOptions options)
    : domain_(std::move(domain)), props_(props), options_(options) {
  if (!domain_) throw Error(ErrorCode::InvalidArgument, "null domain");
  props_.validate();
  build_stencils();
  build_poisson();
}

FomSolver::Neighbor FomSolver::x_neighbor(int i, int j, int self) const {
  const DomainMask& d = *domain_;
  if (d.x_face_kind(i, j) != FaceKind::None) return {uidx(i, j), 1.0};
  bool outlet = d.kind(i - 1, j) == CellKind::OutletGhost || d.kind(i, j) == CellKind::OutletGhost;
  return {self, outlet ? 1.0 : -1.0};
}

FomSolver::Neighbor FomSolver::y_neighbor(int i, int j, int self) const {
  const DomainMask& d = *domain_;
  if (d.y_face_kind(i, j) != FaceKind::None) return {vidx(i, j), 1.0};
  bool outlet = d.kind(i, j - 1) == CellKind::OutletGhost || d.kind(i, j) == CellKind::OutletGhost;
  return {self, outlet ? 1.0 : -1.0};
}

void FomSolver::build_stencils() {
  const DomainMask& d = *domain_;
  const int nx = d.nx(), ny = d.ny();
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      if (d.x_face_kind(i, j) != FaceKind::Interior) continue;
      int self = uidx(i, j);
      UStencil st{self,
                  {uidx(i + 1, j), 1.0},
                  {uidx(i - 1, j), 1.0},
                  x_neighbor(i, j + 1, self),
                  x_neighbor(i, j - 1, self),
                  vidx(i - 1, j),
                  vidx(i, j),
                  vidx(i - 1, j + 1),
                  vidx(i, j + 1)};
      ustencil_.push_back(st);
    }
  }
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (d.y_face_kind(i, j) != FaceKind::Interior) continue;
      int self = vidx(i, j);
      UStencil st{self,
                  y_neighbor(i + 1, j, self),
                  y_neighbor(i - 1, j, self),
                  {vidx(i, j + 1), 1.0},
                  {vidx(i, j - 1), 1.0},
                  uidx(i, j - 1),
                  uidx(i + 1, j - 1),
                  uidx(i, j),
                  uidx(i + 1, j)};
      vstencil_.push_back(st);
    }
  }
  for (const auto& f : d.outlet_faces()) {
    if (f.axis == Axis::X) {
      int up = f.outward > 0 ? f.i - 1 : f.i + 1;
      uoutlet_.emplace_back(uidx(f.i, f.j), uidx(up, f.j));
    } else {
      int up = f.outward > 0 ? f.j - 1 : f.j + 1;
      voutlet_.emplace_back(vidx(f.i, f.j), vidx(f.i, up));
    }
  }
  for (const auto& f : d.inlet_faces()) {
    if (f.axis == Axis::X) {
      uinlet_.push_back(uidx(f.i, f.j));
    } else {
      vinlet_.push_back(vidx(f.i, f.j));
    }
  }
}

void FomSolver::build_poisson() {
  const DomainMask& d = *domain_;
  const int n = static_cast<int>(d.n_fluid());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 5);
  for (int k = 0; k < n; ++k) {
    int c = d.fluid_cell(k);
    int i = c % d.nx(), j = c / d.nx();
    double diag = 0.0;
    auto face = [&](FaceKind fk, int ni, int nj) {
      if (fk == FaceKind::Interior) {
        diag += 1.0;
        trip.emplace_back(k, d.fluid_id(ni, nj), -1.0);
      } else if (fk == FaceKind::Outlet) {
        diag += 2.0;  // p = 0 on the outlet face, half a cell away
      }
    };
    face(d.x_face_kind(i + 1, j), i + 1, j);
    face(d.x_face_kind(i, j), i - 1, j);
    face(d.y_face_kind(i, j + 1), i, j + 1);
    face(d.y_face_kind(i, j), i, j - 1);
    trip.emplace_back(k, k, diag);
  }
  poisson_.resize(n, n);
  poisson_.setFromTriplets(trip.begin(), trip.end());
  factor_ = std::make_shared<Factorization>();
  if (options_.solver == PoissonSolver::Direct) {
    factor_->direct.compute(poisson_);
    if (factor_->direct.info() != Eigen::Success) {
      throw Error(ErrorCode::InvalidArgument, "pressure Poisson factorization failed");
    }
  } else {
    factor_->cg.setTolerance(options_.cg_tolerance);
    factor_->cg.setMaxIterations(options_.cg_max_iterations);
    factor_->cg.compute(poisson_);
  }
}

FlowState FomSolver::rest_state() const {
  FlowState s;
  s.u.assign(static_cast<std::size_t>(domain_->nx() + 1) * domain_->ny(), 0.0);
  s.v.assign(static_cast<std::size_t>(domain_->nx()) * (domain_->ny() + 1), 0.0);
  s.p.assign(domain_->n_fluid(), 0.0);
  s.t = 0.0;
  return s;
}

double FomSolver::max_speed(const FlowState& s) const {
  double m = 0.0;
  for (double x : s.u) m = std::max(m, std::abs(x));
  for (double x : s.v) m = std::max(m, std::abs(x));
  return m;
}

FlowState FomSolver::interpolate_to_faces(const Eigen::Ref<const Eigen::VectorXd>& cv,
                                          double inlet_coefficient) const {
  const DomainMask& d = *domain_;
  const auto n = static_cast<Eigen::Index>(d.n_fluid());
  if (cv.size() != 2 * n) throw Error(ErrorCode::LengthMismatch, "interpolate_to_faces: bad length");
  FlowState f = rest_state();
  f.p.clear();
  for (const auto& st : ustencil_) {
    const int i = st.self % (d.nx() + 1), j = st.self / (d.nx() + 1);
    f.u[st.self] = 0.5 * (cv[d.fluid_id(i - 1, j)] + cv[d.fluid_id(i, j)]);
  }
  for (const auto& st : vstencil_) {
    const int i = st.self % d.nx(), j = st.self / d.nx();
    f.v[st.self] = 0.5 * (cv[n + d.fluid_id(i, j - 1)] + cv[n + d.fluid_id(i, j)]);
  }
  for (auto [face, up] : uoutlet_) f.u[face] = f.u[up];
  for (auto [face, up] : voutlet_) f.v[face] = f.v[up];
  const double g = inlet_coefficient * d.inlet_direction();
  for (int k : uinlet_) f.u[k] = g;
  for (int k : vinlet_) f.v[k] = g;
  return f;
}

FlowState FomSolver::advection_term(const FlowState& a, const FlowState& b) const {
  FlowState r = rest_state();
  r.p.clear();
  const double inv_h = 1.0 / domain_->h();
  for (const auto& st : ustencil_) {
    const double ac = a.u[st.self], bc = b.u[st.self];
    const double ae = 0.5 * (ac + a.u[st.e.idx] * st.e.sign), aw = 0.5 * (a.u[st.w.idx] * st.w.sign + ac);
    const double be = 0.5 * (bc + b.u[st.e.idx] * st.e.sign), bw = 0.5 * (b.u[st.w.idx] * st.w.sign + bc);
    const double vn = 0.5 * (a.v[st.c3] + a.v[st.c4]), vs = 0.5 * (a.v[st.c1] + a.v[st.c2]);
    const double bn = 0.5 * (bc + b.u[st.n.idx] * st.n.sign), bs = 0.5 * (b.u[st.s.idx] * st.s.sign + bc);
    r.u[st.self] = (ae * be - aw * bw + vn * bn - vs * bs) * inv_h;
  }
  for (const auto& st : vstencil_) {
    const double ac = a.v[st.self], bc = b.v[st.self];
    const double an = 0.5 * (ac + a.v[st.n.idx] * st.n.sign), as = 0.5 * (a.v[st.s.idx] * st.s.sign + ac);
    const double bn = 0.5 * (bc + b.v[st.n.idx] * st.n.sign), bs = 0.5 * (b.v[st.s.idx] * st.s.sign + bc);
    const double ue = 0.5 * (a.u[st.c2] + a.u[st.c4]), uw = 0.5 * (a.u[st.c1] + a.u[st.c3]);
    const double be = 0.5 * (bc + b.v[st.e.idx] * st.e.sign), bw = 0.5 * (b.v[st.w.idx] * st.w.sign + bc);
    r.v[st.self] = (an * bn - as * bs + ue * be - uw * bw) * inv_h;
  }
  return r;
}

FlowState FomSolver::laplacian_term(const FlowState& s) const {
  FlowState r = rest_state();
  r.p.clear();
  const double inv_h2 = 1.0 / (domain_->h() * domain_->h());
  for (const auto& st : ustencil_) {
    const double c = s.u[st.self];
    r.u[st.self] = (s.u[st.e.idx] * st.e.sign + s.u[st.w.idx] * st.w.sign + s.u[st.n.idx] * st.n.sign +
                    s.u[st.s.idx] * st.s.sign - 4.0 * c) * inv_h2;
  }
  for (const auto& st : vstencil_) {
    const double c = s.v[st.self];
    r.v[st.self] = (s.v[st.e.idx] * st.e.sign + s.v[st.w.idx] * st.w.sign + s.v[st.n.idx] * st.n.sign +
                    s.v[st.s.idx] * st.s.sign - 4.0 * c) * inv_h2;
  }
  return r;
}

Eigen::VectorXd FomSolver::pressure_response(const FlowState& r, double du_in_dt) const {
  const DomainMask& d = *domain_;
  const int n = static_cast<int>(d.n_fluid());
  const double h = d.h();
  // Source -h sum_f n_f . r_f per cell; outlet faces carry their upstream
  // face value, inlet faces the inflow acceleration du_in_dt.
  Eigen::VectorXd src = Eigen::VectorXd::Zero(n);
  for (const auto& st : ustencil_) {
    const int i = st.self % (d.nx() + 1), j = st.self / (d.nx() + 1);
    src[d.fluid_id(i - 1, j)] -= h * r.u[st.self];
    src[d.fluid_id(i, j)] += h * r.u[st.self];
  }
  for (const auto& st : vstencil_) {
    const int i = st.self % d.nx(), j = st.self / d.nx();
    src[d.fluid_id(i, j - 1)] -= h * r.v[st.self];
    src[d.fluid_id(i, j)] += h * r.v[st.self];
  }
  std::size_t ku = 0, kv = 0;
  for (const auto& f : d.outlet_faces()) {
    const double up = f.axis == Axis::X ? r.u[uoutlet_[ku++].second] : r.v[voutlet_[kv++].second];
    src[d.fluid_id(f.cell)] -= f.outward * h * up;
  }
  for (const auto& f : d.inlet_faces()) src[d.fluid_id(f.cell)] += h * du_in_dt;
  src *= props_.rho;
  if (options_.solver == PoissonSolver::Direct) return factor_->direct.solve(src);
  Eigen::VectorXd p = factor_->cg.solve(src);
  if (factor_->cg.info() != Eigen::Success) {
    throw Error(ErrorCode::PoissonNoConvergence,
                "iterations=" + std::to_string(factor_->cg.iterations()) +
                    " residual=" + std::to_string(factor_->cg.error()));
  }
  return p;
}

Eigen::VectorXd FomSolver::consistent_pressure(const FlowState& s, double du_in_dt) const {
  FlowState r = laplacian_term(s);
  const FlowState adv = advection_term(s, s);
  const double nu = props_.nu();
  for (std::size_t k = 0; k < r.u.size(); ++k) r.u[k] = nu * r.u[k] - adv.u[k];
  for (std::size_t k = 0; k < r.v.size(); ++k) r.v[k] = nu * r.v[k] - adv.v[k];
  return pressure_response(r, du_in_dt);
}

FlowState FomSolver::step(const FlowState& s, double dt, const InletSignal& signal,
                          StepDiagnostics* diag) const {
  const DomainMask& d = *domain_;
  const double h = d.h(), nu = props_.nu(), gamma = options_.upwind_blend;
  const double umax = max_speed(s);
  if (!(dt > 0.0) || dt * umax / h > 1.0 || nu * dt / (h * h) > 0.25) {
    throw Error(ErrorCode::UnstableDt, "dt=" + std::to_string(dt) + " exceeds the stable bound " +
                                           std::to_string(stable_dt(d, props_, umax)));
  }

  FlowState out;
  out.t = s.t + dt;
  out.u = s.u;
  out.v = s.v;
  const std::vector<double>& u = s.u;
  const std::vector<double>& v = s.v;
  const double inv_h = 1.0 / h, inv_h2 = 1.0 / (h * h);

  for (const auto& st : ustencil_) {
    const double uc = u[st.self];
    const double ue = u[st.e.idx] * st.e.sign, uw = u[st.w.idx] * st.w.sign;
    const double un = u[st.n.idx] * st.n.sign, us = u[st.s.idx] * st.s.sign;
    const double ua_e = 0.5 * (uc + ue), ua_w = 0.5 * (uw + uc);
    const double vn = 0.5 * (v[st.c3] + v[st.c4]), vs = 0.5 * (v[st.c1] + v[st.c2]);
    const double du2dx = (ua_e * ua_e - ua_w * ua_w +
                          gamma * (std::abs(ua_e) * 0.5 * (uc - ue) - std::abs(ua_w) * 0.5 * (uw - uc))) *
                         inv_h;
    const double duvdy = (vn * 0.5 * (uc + un) - vs * 0.5 * (us + uc) +
                          gamma * (std::abs(vn) * 0.5 * (uc - un) - std::abs(vs) * 0.5 * (us - uc))) *
                         inv_h;
    const double lap = (ue + uw + un + us - 4.0 * uc) * inv_h2;
    out.u[st.self] = uc + dt * (nu * lap - du2dx - duvdy);
  }
  for (const auto& st : vstencil_) {
    const double vc = v[st.self];
    const double ve = v[st.e.idx] * st.e.sign, vw = v[st.w.idx] * st.w.sign;
    const double vn = v[st.n.idx] * st.n.sign, vs = v[st.s.idx] * st.s.sign;
    const double va_n = 0.5 * (vc + vn), va_s = 0.5 * (vs + vc);
    const double ue = 0.5 * (u[st.c2] + u[st.c4]), uw = 0.5 * (u[st.c1] + u[st.c3]);
    const double dv2dy = (va_n * va_n - va_s * va_s +
                          gamma * (std::abs(va_n) * 0.5 * (vc - vn) - std::abs(va_s) * 0.5 * (vs - vc))) *
                         inv_h;
    const double duvdx = (ue * 0.5 * (vc + ve) - uw * 0.5 * (vw + vc) +
                          gamma * (std::abs(ue) * 0.5 * (vc - ve) - std::abs(uw) * 0.5 * (vw - vc))) *
                         inv_h;
    const double lap = (ve + vw + vn + vs - 4.0 * vc) * inv_h2;
    out.v[st.self] = vc + dt * (nu * lap - dv2dy - duvdx);
  }
  for (auto [face, up] : uoutlet_) out.u[face] = out.u[up];
  for (auto [face, up] : voutlet_) out.v[face] = out.v[up];
  const double uin = inlet_velocity(signal, out.t) * d.inlet_direction();
  for (int f : uinlet_) out.u[f] = uin;
  for (int f : vinlet_) out.v[f] = uin;

  // Pressure: h^2 (-Lap) p = -h^2 (rho / dt) div u*.
  const int n = static_cast<int>(d.n_fluid());
  Eigen::VectorXd rhs(n);
  const double scale = -h * props_.rho / dt;
  for (int k = 0; k < n; ++k) {
    int c = d.fluid_cell(k);
    int i = c % d.nx(), j = c / d.nx();
    rhs[k] = scale * (out.u[uidx(i + 1, j)] - out.u[uidx(i, j)] + out.v[vidx(i, j + 1)] -
                      out.v[vidx(i, j)]);
  }
  Eigen::VectorXd p;
  int iterations = 0;
  if (options_.solver == PoissonSolver::Direct) {
    p = factor_->direct.solve(rhs);
  } else {
    Eigen::Map<const Eigen::VectorXd> guess(s.p.data(), n);
    p = factor_->cg.solveWithGuess(rhs, guess);
    iterations = static_cast<int>(factor_->cg.iterations());
    if (factor_->cg.info() != Eigen::Success) {
      throw Error(ErrorCode::PoissonNoConvergence,
                  "iterations=" + std::to_string(iterations) +
                      " residual=" + std::to_string(factor_->cg.error()));
    }
  }
  out.p.assign(p.data(), p.data() + n);

  // Projection on interior and outlet faces; wall and inlet faces keep their values.
  const double corr = dt / (props_.rho * h);
  for (const auto& st : ustencil_) {
    int i = st.self % (d.nx() + 1), j = st.self / (d.nx() + 1);
    out.u[st.self] -= corr * (p[d.fluid_id(i, j)] - p[d.fluid_id(i - 1, j)]);
  }
  for (const auto& st : vstencil_) {
    int i = st.self % d.nx(), j = st.self / d.nx();
    out.v[st.self] -= corr * (p[d.fluid_id(i, j)] - p[d.fluid_id(i, j - 1)]);
  }
  for (const auto& f : d.outlet_faces()) {
    const double grad = f.outward * (0.0 - p[d.fluid_id(f.cell)]) * 2.0;
    if (f.axis == Axis::X) {
      out.u[uidx(f.i, f.j)] -= corr * grad;
    } else {
      out.v[vidx(f.i, f.j)] -= corr * grad;
    }
  }

  if (diag) {
    diag->max_divergence = max_divergence(out);
    diag->cfl = max_speed(out) * dt / h;
    diag->poisson_iterations = iterations;
  }
  return out;
}

std::vector<double> FomSolver::divergence(const FlowState& s) const {
  const DomainMask& d = *domain_;
  std::vector<double> div(d.n_fluid());
  for (std::size_t k = 0; k < d.n_fluid(); ++k) {
    int c = d.fluid_cell(static_cast<int>(k));
    int i = c % d.nx(), j = c / d.nx();
    div[k] = (s.u[uidx(i + 1, j)] - s.u[uidx(i, j)] + s.v[vidx(i, j + 1)] - s.v[vidx(i, j)]) / d.h();
  }
  return div;
}

double FomSolver::max_divergence(const FlowState& s) const {
  double m = 0.0;
  for (double x : divergence(s)) m = std::max(m, std::abs(x));
  return m;
}

Eigen::VectorXd FomSolver::cell_velocity(const FlowState& s) const {
  const DomainMask& d = *domain_;
  const auto n = static_cast<Eigen::Index>(d.n_fluid());
  Eigen::VectorXd out(2 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    int c = d.fluid_cell(static_cast<int>(k));
    int i = c % d.nx(), j = c / d.nx();
    out[k] = 0.5 * (s.u[uidx(i, j)] + s.u[uidx(i + 1, j)]);
    out[n + k] = 0.5 * (s.v[vidx(i, j)] + s.v[vidx(i, j + 1)]);
  }
  return out;
}

FluxBalance FomSolver::fluxes(const FlowState& s) const {
  const DomainMask& d = *domain_;
  auto face_value = [&](const BoundaryFace& f) {
    return f.axis == Axis::X ? s.u[uidx(f.i, f.j)] : s.v[vidx(f.i, f.j)];
  };
  FluxBalance fb;
  for (const auto& f : d.inlet_faces()) fb.inflow -= f.outward * face_value(f) * d.h();
  for (const auto& group : d.outlet_groups()) {
    double q = 0.0;
    for (std::size_t k : group) {
      const auto& f = d.outlet_faces()[k];
      q += f.outward * face_value(f) * d.h();
    }
    fb.outflow.push_back(q);
  }
  return fb;
}

double FomSolver::inlet_trace(const FlowState& s) const {
  const DomainMask& d = *domain_;
  double sum = 0.0;
  for (const auto& f : d.inlet_faces()) {
    double val = f.axis == Axis::X ? s.u[uidx(f.i, f.j)] : s.v[vidx(f.i, f.j)];
    sum += -f.outward * val;
  }
  return sum / static_cast<double>(d.inlet_faces().size());
}

FomRun run_fom(const FomSolver& solver, const InletSignal& signal, double horizon, double dt,
               int sample_every, const std::optional<FlowState>& initial,
               const RunOptions& options) {
  if (horizon < 0.0) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 0");
  if (sample_every < 1) throw Error(ErrorCode::InvalidArgument, "sample_every must be >= 1");
  if (!(dt > 0.0)) throw Error(ErrorCode::UnstableDt, "dt must be > 0");
  const DomainMask& d = solver.domain();
  const long nsteps = std::lround(horizon / dt);
  const long nsamples = nsteps / sample_every + 1;
  const auto n = static_cast<Eigen::Index>(d.n_fluid());

  FomRun run;
  run.velocity.kind = FieldKind::Velocity;
  run.pressure.kind = FieldKind::Pressure;
  for (SnapshotMatrix* m : {&run.velocity, &run.pressure}) {
    m->domain = solver.domain_ptr();
    m->dt_sample = dt * sample_every;
    m->times.reserve(nsamples);
    m->inlet_values.reserve(nsamples);
  }
  run.velocity.data.resize(2 * n, nsamples);
  run.pressure.data.resize(n, nsamples);

  FlowState state = initial ? *initial : solver.rest_state();
  state.t = 0.0;
  if (initial) {
    const Eigen::VectorXd p0 = solver.consistent_pressure(state, inlet_velocity_rate(signal, 0.0));
    state.p.assign(p0.data(), p0.data() + n);
  }
  long sample = 0;
  auto record = [&](const FlowState& s) {
    run.velocity.data.col(sample) = solver.cell_velocity(s);
    run.pressure.data.col(sample) = Eigen::Map<const Eigen::VectorXd>(s.p.data(), n);
    const double uin = inlet_velocity(signal, s.t);
    for (SnapshotMatrix* m : {&run.velocity, &run.pressure}) {
      m->times.push_back(s.t);
      m->inlet_values.push_back(uin);
    }
    ++sample;
  };

  const auto start = std::chrono::steady_clock::now();
  record(state);
  double next_log = options.log_every;
  for (long step = 1; step <= nsteps; ++step) {
    StepDiagnostics diag;
    state = solver.step(state, dt, signal, &diag);
    state.t = static_cast<double>(step) * dt;
    run.max_divergence = std::max(run.max_divergence, diag.max_divergence);
    run.max_cfl = std::max(run.max_cfl, diag.cfl);
    if (step % sample_every == 0) {
      record(state);
      if (options.log && state.t + 0.5 * dt >= next_log) {
        *options.log << "t=" << state.t << " div=" << diag.max_divergence << " cfl=" << diag.cfl
                     << '\n';
        next_log += options.log_every;
      }
    }
  }
  run.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  run.final_state = std::move(state);
  return run;
}

SteadyResult run_to_steady(const FomSolver& solver, double u_const, double dt, double tol,
                           long max_steps) {
  InletSignal constant;
  constant.u_bar = u_const;
  SteadyResult res;
  res.state = solver.rest_state();
  for (long k = 1; k <= max_steps; ++k) {
    StepDiagnostics diag;
    FlowState next = solver.step(res.state, dt, constant, &diag);
    double change = 0.0;
    for (std::size_t q = 0; q < next.u.size(); ++q)
      change = std::max(change, std::abs(next.u[q] - res.state.u[q]));
    for (std::size_t q = 0; q < next.v.size(); ++q)
      change = std::max(change, std::abs(next.v[q] - res.state.v[q]));
    res.state = std::move(next);
    res.steps = k;
    res.last_change = change;
    res.max_divergence = std::max(res.max_divergence, diag.max_divergence);
    if (change < tol) return res;
  }
  throw Error(ErrorCode::NoSteadyState, "velocity change " + std::to_string(res.last_change) +
                                            " still above " + std::to_string(tol) + " after " +
                                            std::to_string(max_steps) + " steps");
}

}  // namespace hemoreduce
