#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <numbers>

#include "hemoreduce/fom.hpp"
#include "test_util.hpp"

using namespace hemoreduce;
using testutil::code_of;

namespace {

const FluidProps kProps{1.0, 0.01};

InletSignal constant_inflow(double u) {
  InletSignal s;
  s.u_bar = u;
  return s;
}

// Faces whose stencils only touch fluid cells: all cells in a 4 x 3 box around
// the face are fluid.
bool deep_x_face(const DomainMask& d, int i, int j) {
  for (int jj = j - 1; jj <= j + 1; ++jj)
    for (int ii = i - 2; ii <= i + 1; ++ii)
      if (ii < 0 || jj < 0 || ii >= d.nx() || jj >= d.ny() || !d.is_fluid(ii, jj)) return false;
  return true;
}
bool deep_y_face(const DomainMask& d, int i, int j) {
  for (int jj = j - 2; jj <= j + 1; ++jj)
    for (int ii = i - 1; ii <= i + 1; ++ii)
      if (ii < 0 || jj < 0 || ii >= d.nx() || jj >= d.ny() || !d.is_fluid(ii, jj)) return false;
  return true;
}

FlowState sample_faces(const DomainMask& d, const std::function<double(double, double)>& fu,
                       const std::function<double(double, double)>& fv) {
  FlowState s;
  s.u.resize(static_cast<std::size_t>((d.nx() + 1) * d.ny()));
  s.v.resize(static_cast<std::size_t>(d.nx() * (d.ny() + 1)));
  for (int j = 0; j < d.ny(); ++j)
    for (int i = 0; i <= d.nx(); ++i)
      s.u[static_cast<std::size_t>(i + (d.nx() + 1) * j)] = fu(d.x0() + i * d.h(), d.y0() + (j + 0.5) * d.h());
  for (int j = 0; j <= d.ny(); ++j)
    for (int i = 0; i < d.nx(); ++i)
      s.v[static_cast<std::size_t>(i + d.nx() * j)] = fv(d.x0() + (i + 0.5) * d.h(), d.y0() + j * d.h());
  return s;
}

}  // namespace

TEST_CASE("inlet waveform matches its closed form and derivative") {
  InletSignal s;
  s.u_bar = 0.2;
  s.harmonics = {{0.04, 0.3, 0.0}, {0.01, 0.45, 1.2}};
  for (double t : {0.0, 0.37, 2.5, 11.0}) {
    const double want = 0.2 + 0.04 * std::sin(2 * std::numbers::pi * 0.3 * t) +
                        0.01 * std::sin(2 * std::numbers::pi * 0.45 * t + 1.2);
    CHECK(inlet_velocity(s, t) == doctest::Approx(want).epsilon(1e-14));
    const double e = 1e-5;
    const double fd = (inlet_velocity(s, t + e) - inlet_velocity(s, t - e)) / (2 * e);
    CHECK(inlet_velocity_rate(s, t) == doctest::Approx(fd).epsilon(1e-8));
  }
}

TEST_CASE("training signal sampling") {
  const InletSignal a = sample_training_signal(42, 3), b = sample_training_signal(42, 3);
  REQUIRE(a.harmonics.size() == 3u);
  double sum = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(a.harmonics[k].amplitude == b.harmonics[k].amplitude);
    CHECK(a.harmonics[k].frequency == b.harmonics[k].frequency);
    CHECK(a.harmonics[k].phase == b.harmonics[k].phase);
    CHECK(a.harmonics[k].frequency >= 0.2);
    CHECK(a.harmonics[k].frequency <= 0.5);
    CHECK(a.harmonics[k].phase >= 0.0);
    CHECK(a.harmonics[k].phase <= 2 * std::numbers::pi);
    sum += a.harmonics[k].amplitude;
  }
  CHECK(a.u_bar == 0.2);
  CHECK(sum < 0.2);
  const InletSignal c = sample_training_signal(43, 3);
  CHECK(c.harmonics[0].amplitude != a.harmonics[0].amplitude);
  for (int h : {2, 5}) CHECK(sample_training_signal(1, h).harmonics.size() == static_cast<std::size_t>(h));
  CHECK(code_of([] { sample_training_signal(1, 1); }) == ErrorCode::HOutOfRange);
  CHECK(code_of([] { sample_training_signal(1, 6); }) == ErrorCode::HOutOfRange);
}

TEST_CASE("forward-flow rescale") {
  InletSignal s;
  s.u_bar = 0.2;
  s.harmonics = {{0.05, 0.3, 0.0}, {0.05, 0.3, 0.0}, {0.05, 0.3, 0.0}, {0.05, 0.3, 0.0}, {0.05, 0.3, 0.0}};
  enforce_forward_flow(s);
  double sum = 0.0;
  for (const auto& h : s.harmonics) sum += h.amplitude;
  CHECK(sum == doctest::Approx(0.18).epsilon(1e-14));
  InletSignal bad;
  bad.u_bar = 0.1;
  bad.harmonics = {{0.2, 1.0, 0.0}};
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("stable step bound") {
  const auto d = testutil::small_channel();
  const double h = d->h();
  CHECK(stable_dt(*d, kProps, 0.0) == doctest::Approx(0.25 * h * h / kProps.nu()));
  CHECK(stable_dt(*d, kProps, 10.0) == doctest::Approx(h / 10.0));
  const FomSolver solver(d, kProps);
  CHECK(code_of([&] { solver.step(solver.rest_state(), 1.0, constant_inflow(1.0)); }) == ErrorCode::UnstableDt);
  CHECK(code_of([&] { solver.step(solver.rest_state(), 0.0, constant_inflow(1.0)); }) == ErrorCode::UnstableDt);
}

TEST_CASE("rest is a fixed point without inflow") {
  const auto d = testutil::small_tee();
  const FomSolver solver(d, kProps);
  InletSignal zero;
  zero.u_bar = 0.0;
  const FlowState s = solver.step(solver.rest_state(), 0.01, zero);
  for (double x : s.u) CHECK(x == 0.0);
  for (double x : s.v) CHECK(x == 0.0);
  for (double x : s.p) CHECK(std::abs(x) < 1e-14);
}

TEST_CASE("projection enforces discrete incompressibility and flux balance") {
  const auto d = testutil::small_tee();
  for (PoissonSolver ps : {PoissonSolver::Direct, PoissonSolver::ConjugateGradient}) {
    FomOptions opt;
    opt.solver = ps;
    opt.cg_tolerance = 1e-13;
    const FomSolver solver(d, kProps, opt);
    InletSignal sig;
    sig.u_bar = 1.0;
    sig.harmonics = {{0.2, 0.5, 0.0}};
    FlowState s = solver.rest_state();
    for (int k = 0; k < 40; ++k) {
      StepDiagnostics diag;
      s = solver.step(s, 0.01, sig, &diag);
      REQUIRE(diag.max_divergence < 1e-9);
      const FluxBalance fb = solver.fluxes(s);
      REQUIRE(fb.outflow.size() == 2u);
      CHECK(fb.outflow[0] + fb.outflow[1] == doctest::Approx(fb.inflow).epsilon(1e-10));
      // Mirror-symmetric tee: both branches carry the same flow.
      CHECK(fb.outflow[0] == doctest::Approx(fb.outflow[1]).epsilon(1e-8));
    }
    CHECK(solver.inlet_trace(s) == doctest::Approx(inlet_velocity(sig, s.t)).epsilon(1e-14));
  }
}

TEST_CASE("direct and conjugate-gradient Poisson solves agree") {
  const auto d = testutil::small_tee();
  FomOptions cg;
  cg.solver = PoissonSolver::ConjugateGradient;
  cg.cg_tolerance = 1e-14;
  const FomSolver a(d, kProps), b(d, kProps, cg);
  FlowState sa = a.rest_state(), sb = b.rest_state();
  const InletSignal sig = constant_inflow(1.0);
  for (int k = 0; k < 10; ++k) {
    sa = a.step(sa, 0.01, sig);
    sb = b.step(sb, 0.01, sig);
  }
  for (std::size_t k = 0; k < sa.u.size(); ++k) CHECK(sa.u[k] == doctest::Approx(sb.u[k]).epsilon(1e-8).scale(1.0));
  for (std::size_t k = 0; k < sa.p.size(); ++k) CHECK(sa.p[k] == doctest::Approx(sb.p[k]).epsilon(1e-7).scale(1.0));
}

TEST_CASE("CG iteration cap raises PoissonNoConvergence") {
  const auto d = testutil::small_tee();
  FomOptions cg;
  cg.solver = PoissonSolver::ConjugateGradient;
  cg.cg_tolerance = 1e-15;
  cg.cg_max_iterations = 1;
  const FomSolver s(d, kProps, cg);
  CHECK(code_of([&] { s.step(s.rest_state(), 0.01, constant_inflow(1.0)); }) == ErrorCode::PoissonNoConvergence);
}

TEST_CASE("central advection is exact on linear fields away from walls") {
  const auto d = std::make_shared<const DomainMask>(build_channel(2.0, 1.0, 16));
  const FomSolver solver(d, kProps);
  // u = 1 + x, v = 0.5 - y is divergence free.
  // x: d(uu)/dx + d(uv)/dy = 2u - u = u;  y: d(uv)/dx + d(vv)/dy = v - 2v = -v.
  auto fu = [](double x, double) { return 1.0 + x; };
  auto fv = [](double, double y) { return 0.5 - y; };
  const FlowState s = sample_faces(*d, fu, fv);
  const FlowState adv = solver.advection_term(s, s);
  int checked = 0;
  for (int j = 0; j < d->ny(); ++j)
    for (int i = 0; i <= d->nx(); ++i)
      if (deep_x_face(*d, i, j)) {
        const double x = d->x0() + i * d->h(), y = d->y0() + (j + 0.5) * d->h();
        CHECK(adv.u[static_cast<std::size_t>(i + (d->nx() + 1) * j)] == doctest::Approx(fu(x, y)).epsilon(1e-11));
        ++checked;
      }
  for (int j = 0; j <= d->ny(); ++j)
    for (int i = 0; i < d->nx(); ++i)
      if (deep_y_face(*d, i, j)) {
        const double x = d->x0() + (i + 0.5) * d->h(), y = d->y0() + j * d->h();
        CHECK(adv.v[static_cast<std::size_t>(i + d->nx() * j)] == doctest::Approx(-fv(x, y)).epsilon(1e-11).scale(1.0));
        ++checked;
      }
  CHECK(checked > 400);
}

TEST_CASE("five-point Laplacian is exact on quadratics away from walls") {
  const auto d = std::make_shared<const DomainMask>(build_channel(2.0, 1.0, 16));
  const FomSolver solver(d, kProps);
  const FlowState s = sample_faces(
      *d, [](double x, double y) { return x * x + 3 * y * y - x * y; }, [](double x, double y) { return 2 * x * x - y * y; });
  const FlowState lap = solver.laplacian_term(s);
  for (int j = 0; j < d->ny(); ++j)
    for (int i = 0; i <= d->nx(); ++i)
      if (deep_x_face(*d, i, j)) CHECK(lap.u[static_cast<std::size_t>(i + (d->nx() + 1) * j)] == doctest::Approx(8.0).epsilon(1e-9));
  for (int j = 0; j <= d->ny(); ++j)
    for (int i = 0; i < d->nx(); ++i)
      if (deep_y_face(*d, i, j)) CHECK(lap.v[static_cast<std::size_t>(i + d->nx() * j)] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("advection term is bilinear") {
  const auto d = testutil::small_tee();
  const FomSolver solver(d, kProps);
  const InletSignal sig = constant_inflow(1.0);
  FlowState s = solver.rest_state();
  for (int k = 0; k < 5; ++k) s = solver.step(s, 0.01, sig);
  FlowState t = s;
  for (std::size_t k = 0; k < t.u.size(); ++k) t.u[k] = std::sin(0.1 * static_cast<double>(k));
  for (std::size_t k = 0; k < t.v.size(); ++k) t.v[k] = std::cos(0.07 * static_cast<double>(k));
  FlowState comb = s;
  for (std::size_t k = 0; k < comb.u.size(); ++k) comb.u[k] = s.u[k] + 2.0 * t.u[k];
  for (std::size_t k = 0; k < comb.v.size(); ++k) comb.v[k] = s.v[k] + 2.0 * t.v[k];
  const FlowState a1 = solver.advection_term(s, s), a2 = solver.advection_term(s, t), ac = solver.advection_term(s, comb);
  for (std::size_t k = 0; k < ac.u.size(); ++k) CHECK(ac.u[k] == doctest::Approx(a1.u[k] + 2.0 * a2.u[k]).scale(1.0).epsilon(1e-12));
  for (std::size_t k = 0; k < ac.v.size(); ++k) CHECK(ac.v[k] == doctest::Approx(a1.v[k] + 2.0 * a2.v[k]).scale(1.0).epsilon(1e-12));

}

TEST_CASE("pressure response is linear and vanishes for zero forcing") {
  const auto d = testutil::small_tee();
  const FomSolver solver(d, kProps);
  FlowState r = solver.rest_state();
  CHECK(solver.pressure_response(r, 0.0).norm() == 0.0);
  FlowState r1 = r, r2 = r;
  for (std::size_t k = 0; k < r.u.size(); ++k) {
    r1.u[k] = std::sin(0.3 * static_cast<double>(k));
    r2.u[k] = std::cos(0.2 * static_cast<double>(k));
  }
  for (std::size_t k = 0; k < r.v.size(); ++k) {
    r1.v[k] = std::cos(0.5 * static_cast<double>(k));
    r2.v[k] = std::sin(0.1 * static_cast<double>(k));
  }
  FlowState rc = r;
  for (std::size_t k = 0; k < r.u.size(); ++k) rc.u[k] = r1.u[k] - 3.0 * r2.u[k];
  for (std::size_t k = 0; k < r.v.size(); ++k) rc.v[k] = r1.v[k] - 3.0 * r2.v[k];
  const Eigen::VectorXd p = solver.pressure_response(rc, 0.7);
  const Eigen::VectorXd q = solver.pressure_response(r1, 0.7) - 3.0 * solver.pressure_response(r2, 0.0);
  CHECK((p - q).norm() <= 1e-10 * q.norm());
}

TEST_CASE("face interpolation honors each boundary class") {
  const auto d = testutil::small_tee();
  const FomSolver solver(d, kProps);
  const auto n = static_cast<Eigen::Index>(d->n_fluid());
  const Eigen::VectorXd cv = testutil::random_matrix(2 * n, 1, 5);
  const FlowState f = solver.interpolate_to_faces(cv, 0.8);
  for (const auto& w : d->wall_faces())
    CHECK((w.axis == Axis::X ? f.u[static_cast<std::size_t>(w.i + (d->nx() + 1) * w.j)]
                             : f.v[static_cast<std::size_t>(w.i + d->nx() * w.j)]) == 0.0);
  for (const auto& in : d->inlet_faces()) CHECK(f.u[static_cast<std::size_t>(in.i + (d->nx() + 1) * in.j)] == 0.8);
  for (const auto& o : d->outlet_faces()) {
    REQUIRE(o.axis == Axis::Y);
    CHECK(f.v[static_cast<std::size_t>(o.i + d->nx() * o.j)] ==
          f.v[static_cast<std::size_t>(o.i + d->nx() * (o.j - o.outward))]);
  }
  const int i = 4, j = d->ny() / 2;
  CHECK(f.u[static_cast<std::size_t>(i + (d->nx() + 1) * j)] ==
        doctest::Approx(0.5 * (cv[d->fluid_id(i - 1, j)] + cv[d->fluid_id(i, j)])));
}

TEST_CASE("run_fom sample cadence and initial-state pressure") {
  const auto d = testutil::small_tee();
  const FomSolver solver(d, kProps);
  const InletSignal sig = constant_inflow(1.0);
  const FomRun run = run_fom(solver, sig, 0.5, 0.01, 10);
  CHECK(run.velocity.n_snapshots() == 6u);
  CHECK(run.pressure.n_snapshots() == 6u);
  CHECK(run.velocity.times.back() == doctest::Approx(0.5));
  CHECK(run.velocity.dt_sample == doctest::Approx(0.1));
  CHECK(run.velocity.inlet_values[3] == 1.0);
  CHECK(run.velocity.data.col(0).norm() == 0.0);
  CHECK(run.max_divergence < 1e-9);
  // A developed initial state gets the pressure balancing its momentum terms.
  const FomRun again = run_fom(solver, sig, 0.1, 0.01, 10, run.final_state);
  const Eigen::VectorXd expected = solver.consistent_pressure(run.final_state, 0.0);
  CHECK((again.pressure.data.col(0) - expected).norm() == 0.0);
  CHECK(code_of([&] { run_fom(solver, sig, 0.1, 0.01, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("steady channel run converges or reports NoSteadyState") {
  const auto d = testutil::small_channel();
  const FomSolver solver(d, kProps);
  CHECK(code_of([&] { run_to_steady(solver, 1.0, 0.01, 1e-14, 3); }) == ErrorCode::NoSteadyState);
  const SteadyResult r = run_to_steady(solver, 1.0, 0.02, 1e-9, 200000);
  CHECK(r.last_change < 1e-9);
  CHECK(r.max_divergence < 1e-9);
  const FluxBalance fb = solver.fluxes(r.state);
  CHECK(fb.outflow[0] == doctest::Approx(fb.inflow).epsilon(1e-10));
}
