#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Eigenvalues>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>

#include "hemoreduce/esn.hpp"
#include "test_util.hpp"

using namespace hemoreduce;
using testutil::code_of;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

InletSignal test_signal() {
  InletSignal s;
  s.u_bar = 0.2;
  s.harmonics = {{0.04, 0.3, 0.0}};
  return s;
}

// Gaussian elimination with partial pivoting in 50-digit arithmetic.
std::vector<Big> solve_big(std::vector<std::vector<Big>> a, std::vector<Big> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (abs(a[r][c]) > abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const Big f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<Big> x(n);
  for (std::size_t r = n; r-- > 0;) {
    Big s = b[r];
    for (std::size_t k = r + 1; k < n; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return x;
}

}  // namespace

TEST_CASE("config invariants") {
  EsnConfig c;
  CHECK_NOTHROW(c.validate());
  auto bad = [](auto mutate) {
    EsnConfig c;
    mutate(c);
    return code_of([&] { c.validate(); });
  };
  CHECK(bad([](EsnConfig& c) { c.n_reservoir = 0; }) == ErrorCode::InvalidArgument);
  CHECK(bad([](EsnConfig& c) { c.density = 0.0; }) == ErrorCode::InvalidArgument);
  CHECK(bad([](EsnConfig& c) { c.density = 1.5; }) == ErrorCode::InvalidArgument);
  CHECK(bad([](EsnConfig& c) { c.leak_rate = 0.0; }) == ErrorCode::InvalidArgument);
  CHECK(bad([](EsnConfig& c) { c.leak_rate = 1.1; }) == ErrorCode::InvalidArgument);
  CHECK(bad([](EsnConfig& c) { c.ridge_lambda = -1.0; }) == ErrorCode::InvalidArgument);
  CHECK(bad([](EsnConfig& c) { c.spectral_radius = 0.0; }) == ErrorCode::InvalidArgument);
}

TEST_CASE("reservoir construction is seeded, sparse and scaled") {
  EsnConfig c;
  c.n_reservoir = 200;
  c.density = 0.05;
  const Reservoir a = init_reservoir(c, 1), b = init_reservoir(c, 1);
  CHECK(Eigen::MatrixXd(a.w) == Eigen::MatrixXd(b.w));
  CHECK(a.w_in == b.w_in);
  CHECK(a.bias == b.bias);
  CHECK(a.state.norm() == 0.0);
  const double nnz = static_cast<double>(a.w.nonZeros());
  CHECK(std::abs(nnz / (200.0 * 200.0) - c.density) <= 0.1 * c.density);
  const Eigen::VectorXcd ev = Eigen::ComplexEigenSolver<Eigen::MatrixXcd>(Eigen::MatrixXcd(c.gain * Eigen::MatrixXd(a.w))).eigenvalues();
  CHECK(ev.cwiseAbs().maxCoeff() == doctest::Approx(c.spectral_radius).epsilon(1e-9));
  CHECK(a.w_in.cwiseAbs().maxCoeff() <= 1.0);
  c.seed = 8;
  CHECK(init_reservoir(c, 1).w_in != a.w_in);
}

TEST_CASE("a reservoir without recurrent weights skips scaling") {
  EsnConfig c;
  c.n_reservoir = 1;
  c.density = 1e-9;
  const Reservoir r = init_reservoir(c, 1);
  CHECK(r.w.nonZeros() == 0);
  CHECK(r.zero_matrix);
}

TEST_CASE("spectral radius of known matrices") {
  CHECK(spectral_radius(Eigen::Matrix2d{{0.0, -2.0}, {2.0, 0.0}}) == doctest::Approx(2.0));
  CHECK(spectral_radius(Eigen::Matrix3d{{0.5, 1.0, 0.0}, {0.0, -0.7, 0.0}, {0.0, 0.0, 0.1}}) == doctest::Approx(0.7));
  CHECK(code_of([] { spectral_radius(Eigen::MatrixXd::Zero(2, 3)); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("leaky update by hand in three dimensions") {
  EsnConfig c;
  c.leak_rate = 0.4;
  c.gain = 1.5;
  c.input_scaling = 0.7;
  c.bias_scaling = 0.2;
  Reservoir r;
  r.w_in = Eigen::MatrixXd{{0.5}, {-1.0}, {0.25}};
  Eigen::MatrixXd w{{0.0, 0.3, 0.0}, {-0.2, 0.0, 0.1}, {0.0, 0.0, 0.4}};
  r.w = w.sparseView();
  r.bias = Eigen::Vector3d{0.1, -0.3, 0.2};
  r.state = Eigen::Vector3d{0.2, -0.1, 0.05};
  const Eigen::Vector3d s0 = r.state;
  advance(r, Eigen::VectorXd::Constant(1, 0.8), c);
  for (int i = 0; i < 3; ++i) {
    double pre = 0.7 * r.w_in(i, 0) * 0.8 + 0.2 * r.bias[i];
    for (int j = 0; j < 3; ++j) pre += w(i, j) * s0[j];
    const double want = 0.6 * s0[i] + 0.4 * std::tanh(1.5 * pre);
    CHECK(r.state[i] == doctest::Approx(want).epsilon(1e-15));
  }
}

TEST_CASE("collect_states keeps every stride-th state") {
  EsnConfig c;
  c.n_reservoir = 20;
  c.density = 0.3;
  Reservoir a = init_reservoir(c, 1), b = a;
  const Eigen::MatrixXd in = inlet_inputs(test_signal(), 0.01, 12);
  CHECK(in(0, 0) == doctest::Approx(inlet_velocity(test_signal(), 0.01)));
  const Eigen::MatrixXd all = collect_states(a, in, c, 1), every3 = collect_states(b, in, c, 3);
  REQUIRE(every3.rows() == 4);
  for (int k = 0; k < 4; ++k) CHECK(every3.row(k) == all.row(3 * k + 2));
  CHECK(code_of([&] { collect_states(b, Eigen::MatrixXd::Zero(3, 2), c); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("ridge readout matches 50-digit normal equations") {
  const Eigen::Index m = 40, n = 6, d_out = 2;
  const Eigen::MatrixXd r = testutil::random_matrix(m, n, 1), y = testutil::random_matrix(m, d_out, 2);
  for (double lambda : {1e-6, 1e-2, 1.0}) {
    const Readout out = train_readout(r, y, lambda, 5);
    // Unknowns [w; b] per output, intercept unpenalized, rows 5..m-1.
    for (Eigen::Index o = 0; o < d_out; ++o) {
      std::vector<std::vector<Big>> a(n + 1, std::vector<Big>(n + 1, Big(0)));
      std::vector<Big> rhs(n + 1, Big(0));
      for (Eigen::Index t = 5; t < m; ++t) {
        std::vector<Big> row(n + 1);
        for (Eigen::Index i = 0; i < n; ++i) row[i] = Big(r(t, i));
        row[n] = 1;
        for (Eigen::Index i = 0; i <= n; ++i) {
          for (Eigen::Index j = 0; j <= n; ++j) a[i][j] += row[i] * row[j];
          rhs[i] += row[i] * Big(y(t, o));
        }
      }
      for (Eigen::Index i = 0; i < n; ++i) a[i][i] += Big(lambda);
      const auto x = solve_big(a, rhs);
      for (Eigen::Index i = 0; i < n; ++i) CHECK(out.w_out(o, i) == doctest::Approx(x[i].convert_to<double>()).epsilon(1e-10));
      CHECK(out.b_out[o] == doctest::Approx(x[n].convert_to<double>()).epsilon(1e-10));
    }
  }
}

TEST_CASE("lambda = 0 fits a square full-rank system exactly") {
  const Eigen::MatrixXd r = testutil::random_matrix(8, 8, 3), y = testutil::random_matrix(8, 3, 4);
  const Readout out = train_readout(r, y, 0.0, 0);
  const Eigen::MatrixXd fit = (r * out.w_out.transpose()).rowwise() + out.b_out.transpose();
  CHECK((fit - y).norm() <= 1e-10 * y.norm());
  CHECK(out.training_error <= 1e-10);
  Eigen::MatrixXd deficient = testutil::random_matrix(12, 4, 5);
  deficient.col(3) = deficient.col(0) + deficient.col(1);
  CHECK(code_of([&] { train_readout(deficient, testutil::random_matrix(12, 1, 6), 0.0, 0); }) ==
        ErrorCode::SingularNormalEquations);
}

TEST_CASE("ridge penalty shrinks the readout") {
  const Eigen::MatrixXd r = testutil::random_matrix(50, 10, 7), y = testutil::random_matrix(50, 2, 8);
  double prev = INFINITY;
  for (double lambda : {1e-8, 1e-2, 1.0, 100.0, 1e4}) {
    const double nrm = train_readout(r, y, lambda, 0).w_out.norm();
    CHECK(nrm < prev);
    prev = nrm;
  }
  CHECK(code_of([&] { train_readout(r, y, 1.0, 50); }) == ErrorCode::HorizonTooShort);
  CHECK(code_of([&] { train_readout(r, y.topRows(10), 1.0, 0); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("echo-state property at the default spectral radius") {
  EsnConfig c;
  Reservoir a = init_reservoir(c, 1), b = a;
  b.state = testutil::random_matrix(c.n_reservoir, 1, 9).array().tanh().matrix();
  const long steps = std::lround(3.0 / c.step_dt);
  const Eigen::MatrixXd in = inlet_inputs(test_signal(), c.step_dt, steps);
  for (long k = 0; k < steps; ++k) {
    advance(a, in.row(k).transpose(), c);
    advance(b, in.row(k).transpose(), c);
  }
  CHECK((a.state - b.state).norm() < 1e-6);
}

TEST_CASE("training and prediction on the same signal reproduce the fit") {
  EsnConfig c;
  c.n_reservoir = 100;
  c.density = 0.1;
  c.washout = 1.0;
  const double dt_s = 0.05;
  const InletSignal sig = test_signal();
  const Eigen::Index samples = 161;
  Eigen::MatrixXd targets(2, samples);
  for (Eigen::Index k = 0; k < samples; ++k) {
    const double t = static_cast<double>(k) * dt_s;
    targets(0, k) = inlet_velocity(sig, t);
    targets(1, k) = std::pow(inlet_velocity(sig, t), 2);
  }
  const TrainedEsn model = train_esn(c, sig, targets, dt_s);
  CHECK(model.readout.training_error < 1e-2);
  const EsnPrediction pr = predict(model, sig, 8.0);
  REQUIRE(pr.times.size() == static_cast<std::size_t>(samples - 20));
  CHECK(pr.times.front() == doctest::Approx(1.0));
  CHECK(pr.times.back() == doctest::Approx(8.0));
  const Eigen::MatrixXd y = targets.rightCols(samples - 20);
  CHECK((pr.coeffs - y).norm() / y.norm() == doctest::Approx(model.readout.training_error).epsilon(1e-9));
  const EsnPrediction again = predict(model, sig, 8.0);
  CHECK(again.coeffs == pr.coeffs);
  CHECK(code_of([&] { predict(model, sig, 0.5); }) == ErrorCode::HorizonTooShort);
  CHECK(code_of([&] { train_esn(c, sig, targets, 0.051); }) == ErrorCode::InvalidArgument);
}
