#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <iterator>

#include "hemoreduce/io.hpp"
#include "test_util.hpp"

using namespace hemoreduce;
using testutil::code_of;
namespace fs = std::filesystem;

namespace {

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

// Every corruption of the header and every truncation must be rejected.
template <class Reader>
void check_corruption(const fs::path& file, const char* magic, Reader read) {
  const std::vector<char> good = slurp(file);
  const fs::path bad = file.string() + ".bad";
  std::vector<char> b = good;
  b[0] = 'X';
  spit(bad, b);
  CHECK(code_of([&] { read(bad); }) == ErrorCode::BadMagic);
  b = good;
  const std::string m(magic);
  b[m.size() - 1] = m.back() == '9' ? '8' : static_cast<char>(m.back() + 1);
  spit(bad, b);
  CHECK(code_of([&] { read(bad); }) == ErrorCode::VersionMismatch);
  for (std::size_t cut : {std::size_t{4}, std::size_t{12}, good.size() / 2, good.size() - 1}) {
    CAPTURE(cut);
    spit(bad, std::vector<char>(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(cut)));
    CHECK(code_of([&] { read(bad); }) == ErrorCode::TruncatedPayload);
  }
  CHECK(code_of([&] { read(file.string() + ".missing"); }) == ErrorCode::IoFailure);
}

SnapshotMatrix sample_snapshots(std::shared_ptr<const DomainMask> d) {
  SnapshotMatrix s;
  s.kind = FieldKind::Velocity;
  s.domain = d;
  s.data = testutil::random_matrix(2 * static_cast<Eigen::Index>(d->n_fluid()), 5, 1);
  s.data(0, 0) = -0.0;
  s.data(1, 0) = std::numeric_limits<double>::denorm_min();
  s.times = {0.0, 0.05, 0.1, 0.15, 0.2};
  s.inlet_values = {0.2, 0.21, 0.22, 0.2, 0.19};
  s.dt_sample = 0.05;
  s.homogenized = true;
  return s;
}

}  // namespace

TEST_CASE("snapshot round trip is bitwise") {
  const auto dir = testutil::scratch_dir("io_snap");
  const auto d = testutil::small_tee();
  const SnapshotMatrix s = sample_snapshots(d);
  write_snapshots(dir / "v.hrsnap", s);
  const SnapshotMatrix r = read_snapshots(dir / "v.hrsnap");
  CHECK(r.kind == s.kind);
  CHECK(r.homogenized);
  CHECK(r.times == s.times);
  CHECK(r.inlet_values == s.inlet_values);
  CHECK(r.dt_sample == s.dt_sample);
  CHECK(std::memcmp(r.data.data(), s.data.data(), sizeof(double) * static_cast<std::size_t>(s.data.size())) == 0);
  CHECK(same_geometry(*r.domain, *d));
  CHECK(r.domain->n_fluid() == d->n_fluid());
  CHECK(r.domain->outlet_faces().size() == d->outlet_faces().size());

  SnapshotMatrix p = s;
  p.kind = FieldKind::Pressure;
  p.data = s.data.topRows(static_cast<Eigen::Index>(d->n_fluid()));
  p.inlet_values.clear();
  p.homogenized = false;
  write_snapshots(dir / "p.hrsnap", p);
  const SnapshotMatrix rp = read_snapshots(dir / "p.hrsnap");
  CHECK(rp.kind == FieldKind::Pressure);
  CHECK(rp.inlet_values.empty());
  CHECK(rp.data == p.data);
  check_corruption(dir / "v.hrsnap", "HRSNAP01", [](const fs::path& f) { read_snapshots(f); });
}

TEST_CASE("geometry encoding distinguishes masks") {
  const auto a = testutil::small_tee();
  CHECK(same_geometry(*a, *testutil::small_tee()));
  CHECK(!same_geometry(*a, *testutil::small_channel()));
  CHECK(encode_geometry(*a) == encode_geometry(*testutil::small_tee()));
}

TEST_CASE("basis round trip") {
  const auto dir = testutil::scratch_dir("io_basis");
  const auto d = testutil::small_tee();
  PodBasis b = testutil::random_basis(d, FieldKind::Velocity, 3, 2);
  b.eigenvalues = Eigen::VectorXd::LinSpaced(5, 5.0, 1.0);
  b.energy_fraction = Eigen::VectorXd::LinSpaced(5, 0.3, 1.0);
  b.coeff_train = testutil::random_matrix(3, 5, 3);
  b.times = {1.0, 1.05, 1.1, 1.15, 1.2};
  write_basis(dir / "b.hrbase", b);
  const PodBasis r = read_basis(dir / "b.hrbase");
  CHECK(r.kind == b.kind);
  CHECK(r.homogenized == b.homogenized);
  CHECK(r.modes == b.modes);
  CHECK(r.eigenvalues == b.eigenvalues);
  CHECK(r.energy_fraction == b.energy_fraction);
  CHECK(r.coeff_train == b.coeff_train);
  CHECK(r.times == b.times);
  CHECK(same_geometry(*r.domain, *d));
  // A supplied domain is reused when it matches and rejected otherwise.
  CHECK(read_basis(dir / "b.hrbase", d).domain == d);
  CHECK(code_of([&] { read_basis(dir / "b.hrbase", testutil::small_channel()); }) == ErrorCode::BasisMismatch);
  check_corruption(dir / "b.hrbase", "HRBASE01", [](const fs::path& f) { read_basis(f); });

  write_basis_spectrum_csv(dir / "s.csv", b);
  const auto spec = read_lines(dir / "s.csv");
  REQUIRE(spec.size() == 6u);
  CHECK(spec[0] == "k,eigenvalue,energy_fraction");
  CHECK(spec[1] == "1,5,0.3");
  write_basis_coefficients_csv(dir / "c.csv", b);
  const auto coef = read_lines(dir / "c.csv");
  REQUIRE(coef.size() == 6u);
  CHECK(coef[0] == "t,c1,c2,c3");
  CHECK(std::stod(coef[3].substr(coef[3].rfind(',') + 1)) == b.coeff_train(2, 2));
}

TEST_CASE("lifting round trip") {
  const auto dir = testutil::scratch_dir("io_lift");
  const auto d = testutil::small_tee();
  const FomSolver solver(d, FluidProps{1.0, 0.05});
  LiftingField l;
  l.faces = solver.rest_state();
  for (std::size_t k = 0; k < l.faces.u.size(); ++k) l.faces.u[k] = std::sin(static_cast<double>(k));
  for (std::size_t k = 0; k < l.faces.v.size(); ++k) l.faces.v[k] = std::cos(static_cast<double>(k));
  l.zeta = solver.cell_velocity(l.faces);
  l.inlet_trace = 1.0;
  write_lifting(dir / "l.hrlift", l);
  const LiftingField r = read_lifting(dir / "l.hrlift", d);
  CHECK(r.zeta == l.zeta);
  CHECK(r.faces.u == l.faces.u);
  CHECK(r.faces.v == l.faces.v);
  CHECK(r.inlet_trace == l.inlet_trace);
  check_corruption(dir / "l.hrlift", "HRLIFT01", [&](const fs::path& f) { read_lifting(f, d); });
}

TEST_CASE("operator archive round trip") {
  const auto dir = testutil::scratch_dir("io_ops");
  ReducedOperators o;
  o.nu = 1e-4;
  o.rho = 1060.0;
  o.mass = testutil::random_matrix(2, 3, 1);
  o.diffusion = testutil::random_matrix(2, 3, 2);
  o.convection = {testutil::random_matrix(3, 3, 3), testutil::random_matrix(3, 3, 4)};
  o.pressure_gradient = testutil::random_matrix(2, 3, 5);
  o.pressure_mass = Eigen::MatrixXd::Identity(3, 3);
  o.pressure_convection = {testutil::random_matrix(3, 3, 6), testutil::random_matrix(3, 3, 7), testutil::random_matrix(3, 3, 8)};
  o.pressure_diffusion = testutil::random_matrix(3, 3, 9);
  o.inlet_rate = testutil::random_matrix(3, 1, 10);
  write_operators(dir / "o.hrops", o);
  const ReducedOperators r = read_operators(dir / "o.hrops");
  CHECK(r.nu == o.nu);
  CHECK(r.rho == o.rho);
  CHECK(r.mass == o.mass);
  CHECK(r.diffusion == o.diffusion);
  REQUIRE(r.convection.size() == 2u);
  for (std::size_t i = 0; i < 2; ++i) CHECK(r.convection[i] == o.convection[i]);
  CHECK(r.pressure_gradient == o.pressure_gradient);
  CHECK(r.pressure_mass == o.pressure_mass);
  REQUIRE(r.pressure_convection.size() == 3u);
  for (std::size_t i = 0; i < 3; ++i) CHECK(r.pressure_convection[i] == o.pressure_convection[i]);
  CHECK(r.pressure_diffusion == o.pressure_diffusion);
  CHECK(r.inlet_rate == o.inlet_rate);
  check_corruption(dir / "o.hrops", "HROPS001", [](const fs::path& f) { read_operators(f); });
}

TEST_CASE("echo-state model round trip predicts identically") {
  const auto dir = testutil::scratch_dir("io_esn");
  EsnConfig c;
  c.n_reservoir = 60;
  c.density = 0.1;
  c.washout = 0.5;
  InletSignal sig;
  sig.u_bar = 0.2;
  sig.harmonics = {{0.03, 0.4, 0.1}};
  const Eigen::MatrixXd targets = testutil::random_matrix(3, 41, 1);
  const TrainedEsn m = train_esn(c, sig, targets, 0.05);
  write_esn(dir / "m.hresn", m);
  const TrainedEsn r = read_esn(dir / "m.hresn");
  CHECK(r.config.n_reservoir == c.n_reservoir);
  CHECK(r.config.seed == c.seed);
  CHECK(r.config.leak_rate == c.leak_rate);
  CHECK(r.sample_dt == m.sample_dt);
  CHECK(Eigen::MatrixXd(r.reservoir.w) == Eigen::MatrixXd(m.reservoir.w));
  CHECK(r.reservoir.w_in == m.reservoir.w_in);
  CHECK(r.reservoir.bias == m.reservoir.bias);
  CHECK(r.readout.w_out == m.readout.w_out);
  CHECK(r.readout.b_out == m.readout.b_out);
  CHECK(r.readout.training_error == m.readout.training_error);
  CHECK(predict(r, sig, 2.0).coeffs == predict(m, sig, 2.0).coeffs);
  check_corruption(dir / "m.hresn", "HRESN001", [](const fs::path& f) { read_esn(f); });
}

TEST_CASE("trajectory round trip and CSV") {
  const auto dir = testutil::scratch_dir("io_traj");
  CoefficientTrajectory t;
  t.method = "galerkin";
  t.times = {0.0, 0.05, 0.1};
  t.velocity_coeffs = testutil::random_matrix(3, 3, 1);
  t.pressure_coeffs = testutil::random_matrix(2, 3, 2);
  write_trajectory(dir / "t.hrtraj", t);
  const CoefficientTrajectory r = read_trajectory(dir / "t.hrtraj");
  CHECK(r.method == t.method);
  CHECK(r.times == t.times);
  CHECK(r.velocity_coeffs == t.velocity_coeffs);
  CHECK(r.pressure_coeffs == t.pressure_coeffs);
  check_corruption(dir / "t.hrtraj", "HRTRAJ01", [](const fs::path& f) { read_trajectory(f); });

  write_trajectory_csv(dir / "t.csv", t);
  const auto lines = read_lines(dir / "t.csv");
  REQUIRE(lines.size() == 4u);
  CHECK(lines[0] == "t,a1,a2,a3,b1,b2");
  std::vector<double> row;
  std::stringstream ss(lines[2]);
  for (std::string cell; std::getline(ss, cell, ',');) row.push_back(std::stod(cell));
  REQUIRE(row.size() == 6u);
  CHECK(row[0] == 0.05);
  for (int i = 0; i < 3; ++i) CHECK(row[static_cast<std::size_t>(1 + i)] == t.velocity_coeffs(i, 1));
  for (int i = 0; i < 2; ++i) CHECK(row[static_cast<std::size_t>(4 + i)] == t.pressure_coeffs(i, 1));
  CoefficientTrajectory bad = t;
  bad.times.pop_back();
  CHECK(code_of([&] { write_trajectory_csv(dir / "bad.csv", bad); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("legacy VTK export parses back to the written values") {
  const auto dir = testutil::scratch_dir("io_vtk");
  const auto d = testutil::small_tee();
  const auto n = static_cast<Eigen::Index>(d->n_fluid());
  const Eigen::VectorXd vel = testutil::random_matrix(2 * n, 1, 4) * 1e-3;
  export_vtk(dir / "v.vtk", *d, "velocity", vel, 2, "t=4");
  const VtkField f = read_vtk(dir / "v.vtk");
  CHECK(f.title == "t=4");
  CHECK(f.name == "velocity");
  CHECK(f.components == 2);
  CHECK(f.nx == d->nx());
  CHECK(f.ny == d->ny());
  CHECK(f.h == d->h());
  CHECK(f.x0 == d->x0());
  for (int j = 0; j < d->ny(); ++j)
    for (int i = 0; i < d->nx(); ++i) {
      const int k = d->fluid_id(i, j);
      const Eigen::Index row = i + d->nx() * j;
      if (k < 0) {
        CHECK(f.values(row, 0) == kVtkBlank);
      } else {
        CHECK(f.values(row, 0) == vel[k]);
        CHECK(f.values(row, 1) == vel[n + k]);
      }
    }
  const auto lines = read_lines(dir / "v.vtk");
  CHECK(lines[0] == "# vtk DataFile Version 3.0");
  CHECK(lines[2] == "ASCII");
  CHECK(lines[3] == "DATASET STRUCTURED_POINTS");
  CHECK(lines[8] == "VECTORS velocity double");
  const std::string& fluid_line = lines[9 + static_cast<std::size_t>(d->fluid_cell(0))];
  CHECK(fluid_line.substr(fluid_line.size() - 2) == " 0");

  const Eigen::VectorXd p = testutil::random_matrix(n, 1, 5);
  export_vtk(dir / "p.vtk", *d, "pressure", p, 1);
  const VtkField fp = read_vtk(dir / "p.vtk");
  CHECK(fp.components == 1);
  CHECK(fp.values(d->fluid_cell(7), 0) == p[7]);
  CHECK(code_of([&] { export_vtk(dir / "x.vtk", *d, "two words", p, 1); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { export_vtk(dir / "x.vtk", *d, "p", p, 2); }) == ErrorCode::LengthMismatch);
  spit(dir / "junk.vtk", {'n', 'o', '\n'});
  CHECK(code_of([&] { read_vtk(dir / "junk.vtk"); }) == ErrorCode::IoFailure);
}
