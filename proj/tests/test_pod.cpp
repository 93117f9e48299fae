#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "hemoreduce/pod.hpp"
#include "test_util.hpp"

using namespace hemoreduce;
using testutil::code_of;

namespace {

// One row of 12 fluid cells between an inlet and an outlet ghost.
std::shared_ptr<const DomainMask> strip12() {
  std::vector<CellKind> k(14 * 3, CellKind::Solid);
  k[0 + 14] = CellKind::InletGhost;
  k[13 + 14] = CellKind::OutletGhost;
  for (int i = 1; i <= 12; ++i) k[i + 14] = CellKind::Fluid;
  return std::make_shared<const DomainMask>(14, 3, 0.5, 0.0, 0.0, std::move(k));
}

SnapshotMatrix make_snaps(std::shared_ptr<const DomainMask> d, FieldKind kind, const Eigen::MatrixXd& data) {
  SnapshotMatrix s;
  s.kind = kind;
  s.domain = d;
  s.data = data;
  for (Eigen::Index c = 0; c < data.cols(); ++c) s.times.push_back(static_cast<double>(c));
  s.dt_sample = 1.0;
  return s;
}

double projection_residual(const Eigen::MatrixXd& data, const Eigen::MatrixXd& basis, std::span<const double> w) {
  double e = 0.0;
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    Eigen::VectorXd r = data.col(c);
    for (Eigen::Index i = 0; i < basis.cols(); ++i) r -= inner_product(data.col(c), basis.col(i), w) * basis.col(i);
    e += inner_product(r, r, w);
  }
  return e;
}

// Low-rank-plus-noise velocity snapshots on the small tee.
SnapshotMatrix tee_snaps(Eigen::Index cols) {
  const auto d = testutil::small_tee();
  const Eigen::Index rows = 2 * static_cast<Eigen::Index>(d->n_fluid());
  const Eigen::MatrixXd space = testutil::random_matrix(rows, 4, 11);
  Eigen::MatrixXd time(4, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (int k = 0; k < 4; ++k) time(k, c) = std::pow(0.3, k) * std::sin((k + 1) * 0.2 * static_cast<double>(c) + k);
  return make_snaps(d, FieldKind::Velocity, space * time + 1e-3 * testutil::random_matrix(rows, cols, 12));
}

}  // namespace

TEST_CASE("correlation matrix is the weighted Gram matrix") {
  const SnapshotMatrix s = tee_snaps(8);
  const Eigen::MatrixXd c = correlation_matrix(s);
  for (Eigen::Index i = 0; i < 8; ++i)
    for (Eigen::Index j = 0; j < 8; ++j)
      CHECK(c(i, j) == doctest::Approx(inner_product(s.data.col(i), s.data.col(j), s.weights())).epsilon(1e-13));
}

TEST_CASE("eigenpairs are descending and satisfy C v = lambda v") {
  const SnapshotMatrix s = tee_snaps(10);
  const Eigen::MatrixXd c = correlation_matrix(s);
  const EigenPairs e = solve_eigen(c);
  for (Eigen::Index k = 0; k < e.values.size(); ++k) {
    CHECK((c * e.vectors.col(k) - e.values[k] * e.vectors.col(k)).norm() <= 1e-11 * e.values[0]);
    if (k > 0) CHECK(e.values[k] <= e.values[k - 1]);
    CHECK(e.values[k] >= 0.0);
  }
  Eigen::MatrixXd asym = c;
  asym(0, 1) += 1e-6 * c.norm();
  CHECK(code_of([&] { solve_eigen(asym); }) == ErrorCode::NotSymmetric);
  CHECK(code_of([&] { solve_eigen(Eigen::MatrixXd::Zero(2, 3)); }) == ErrorCode::NotSymmetric);
}

TEST_CASE("eigenvalues match the singular values of the weighted snapshot matrix") {
  const SnapshotMatrix s = tee_snaps(9);
  Eigen::MatrixXd scaled = s.data;
  const auto n = static_cast<Eigen::Index>(s.n_cells());
  for (Eigen::Index r = 0; r < scaled.rows(); ++r) scaled.row(r) *= std::sqrt(s.weights()[static_cast<std::size_t>(r % n)]);
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(scaled).singularValues();
  const PodBasis b = compute_pod(s, 4);
  for (Eigen::Index k = 0; k < 9; ++k) CHECK(b.eigenvalues[k] == doctest::Approx(sv[k] * sv[k]).epsilon(1e-9).scale(sv[0] * sv[0]));
  CHECK(b.eigenvalues.sum() == doctest::Approx(scaled.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("modes are orthonormal and full rank reconstructs exactly") {
  const SnapshotMatrix s = tee_snaps(6);
  const PodBasis b = compute_pod(s, 6);
  Eigen::MatrixXd gram(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) gram(i, j) = inner_product(b.modes.col(i), b.modes.col(j), b.weights());
  CHECK((gram - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-10);
  for (Eigen::Index c = 0; c < 6; ++c) {
    const Eigen::VectorXd r = reconstruct(b, project(s.data.col(c), b));
    CHECK((r - s.data.col(c)).norm() <= 1e-8 * s.data.col(c).norm());
    CHECK((b.coeff_train.col(c) - project(s.data.col(c), b)).norm() == 0.0);
  }
  CHECK(b.energy_fraction[5] == doctest::Approx(1.0).epsilon(1e-14));
  for (Eigen::Index k = 1; k < 6; ++k) CHECK(b.energy_fraction[k] >= b.energy_fraction[k - 1]);
  CHECK(b.times == s.times);
}

TEST_CASE("truncated POD beats random orthonormal bases at every rank") {
  const auto d = strip12();
  REQUIRE(d->n_fluid() == 12u);
  const Eigen::MatrixXd data = testutil::random_matrix(12, 4, 21);
  const SnapshotMatrix s = make_snaps(d, FieldKind::Pressure, data);
  const PodBasis full = compute_pod(s, 4);
  for (Eigen::Index r = 1; r <= 4; ++r) {
    const double pod_err = projection_residual(data, full.modes.leftCols(r), d->weights());
    // Residual equals the discarded eigenvalue tail.
    CHECK(pod_err == doctest::Approx(full.eigenvalues.tail(4 - r).sum()).epsilon(1e-9).scale(full.eigenvalues[0]));
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
      Eigen::MatrixXd q = testutil::random_matrix(12, r, 1000 + 10 * trial + static_cast<std::uint64_t>(r));
      orthonormalize(q, d->weights());
      REQUIRE(pod_err <= projection_residual(data, q, d->weights()) + 1e-12);
    }
  }
}

TEST_CASE("rank deficiency is reported") {
  const auto d = strip12();
  Eigen::MatrixXd data = testutil::random_matrix(12, 4, 3);
  data.col(3) = 2.0 * data.col(1);
  const SnapshotMatrix s = make_snaps(d, FieldKind::Pressure, data);
  CHECK_NOTHROW(compute_pod(s, 3));
  CHECK(code_of([&] { compute_pod(s, 4); }) == ErrorCode::RankDeficient);
  CHECK(code_of([&] { compute_pod(s, 5); }) == ErrorCode::RankDeficient);
  CHECK(code_of([&] { compute_pod(s, 0); }) == ErrorCode::RankDeficient);
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(12, 2);
  CHECK(code_of([&] { orthonormalize(z, d->weights()); }) == ErrorCode::RankDeficient);
}

TEST_CASE("projection checks lengths") {
  const SnapshotMatrix s = tee_snaps(4);
  const PodBasis b = compute_pod(s, 2);
  CHECK(code_of([&] { project(Eigen::VectorXd::Zero(3), b); }) == ErrorCode::LengthMismatch);
  CHECK(code_of([&] { reconstruct(b, Eigen::VectorXd::Zero(3)); }) == ErrorCode::LengthMismatch);
}
