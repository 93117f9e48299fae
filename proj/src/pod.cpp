#include "hemoreduce/pod.hpp"

#include <cmath>
#include <string>

#include "hemoreduce/error.hpp"
#include "hemoreduce/parallel.hpp"

namespace hemoreduce {

Eigen::MatrixXd correlation_matrix(const SnapshotMatrix& snaps) {
  snaps.validate();
  const Eigen::Index ns = snaps.data.cols();
  const auto w = snaps.weights();
  // Weighted copy so that each entry is one dot product; entries are filled
  // once per unordered pair.
  Eigen::MatrixXd ws = snaps.data;
  const auto n = static_cast<Eigen::Index>(w.size());
  for (Eigen::Index r = 0; r < ws.rows(); ++r) ws.row(r) *= w[static_cast<std::size_t>(r % n)];
  Eigen::MatrixXd c(ns, ns);
  parallel_for(static_cast<std::size_t>(ns), [&](std::size_t i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = ii; j < ns; ++j) {
      double v = ws.col(ii).dot(snaps.data.col(j));
      c(ii, j) = v;
      c(j, ii) = v;
    }
  });
  return c;
}

EigenPairs solve_eigen(const Eigen::MatrixXd& c) {
  if (c.rows() != c.cols()) throw Error(ErrorCode::NotSymmetric, "correlation matrix not square");
  const double scale = std::max(c.cwiseAbs().maxCoeff(), 1e-300);
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorCode::NotSymmetric, "correlation matrix not symmetric within 1e-12");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::NotSymmetric, "eigensolver failed");
  const Eigen::Index n = c.rows();
  EigenPairs out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    // Eigen returns ascending order.
    out.values[k] = std::max(es.eigenvalues()[n - 1 - k], 0.0);
    out.vectors.col(k) = es.eigenvectors().col(n - 1 - k);
  }
  return out;
}

void orthonormalize(Eigen::MatrixXd& m, std::span<const double> w) {
  for (Eigen::Index k = 0; k < m.cols(); ++k) {
    for (Eigen::Index q = 0; q < k; ++q) {
      m.col(k) -= inner_product(m.col(k), m.col(q), w) * m.col(q);
    }
    const double nrm = std::sqrt(inner_product(m.col(k), m.col(k), w));
    if (!(nrm > 0.0)) throw Error(ErrorCode::RankDeficient, "zero column in Gram-Schmidt");
    m.col(k) /= nrm;
  }
}

PodBasis compute_modes(const SnapshotMatrix& snaps, const EigenPairs& eig, Eigen::Index n_modes) {
  const Eigen::Index ns = snaps.data.cols();
  if (n_modes < 1 || n_modes > ns) {
    throw Error(ErrorCode::RankDeficient, "requested " + std::to_string(n_modes) + " modes from " +
                                              std::to_string(ns) + " snapshots");
  }
  const double l1 = eig.values[0];
  if (!(eig.values[n_modes - 1] > kRankThreshold * l1)) {
    throw Error(ErrorCode::RankDeficient,
                "eigenvalue " + std::to_string(n_modes) + " below rank threshold");
  }
  PodBasis b;
  b.kind = snaps.kind;
  b.domain = snaps.domain;
  b.homogenized = snaps.homogenized;
  b.times = snaps.times;
  b.eigenvalues = eig.values;
  b.modes.resize(snaps.data.rows(), n_modes);
  for (Eigen::Index i = 0; i < n_modes; ++i) {
    b.modes.col(i) = snaps.data * eig.vectors.col(i) / std::sqrt(eig.values[i]);
  }
  orthonormalize(b.modes, b.weights());
  const double total = eig.values.sum();
  b.energy_fraction.resize(eig.values.size());
  double acc = 0.0;
  for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
    acc += eig.values[k];
    b.energy_fraction[k] = total > 0.0 ? acc / total : 0.0;
  }
  b.coeff_train.resize(n_modes, ns);
  for (Eigen::Index c = 0; c < ns; ++c) b.coeff_train.col(c) = project(snaps.data.col(c), b);
  return b;
}

PodBasis compute_pod(const SnapshotMatrix& snaps, Eigen::Index n_modes) {
  return compute_modes(snaps, solve_eigen(correlation_matrix(snaps)), n_modes);
}

Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd>& field, const PodBasis& basis) {
  if (field.size() != basis.modes.rows()) {
    throw Error(ErrorCode::LengthMismatch, "field length does not match the basis");
  }
  Eigen::VectorXd a(basis.n_modes());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    a[i] = inner_product(field, basis.modes.col(i), basis.weights());
  }
  return a;
}

Eigen::VectorXd reconstruct(const PodBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& coeffs) {
  if (coeffs.size() > basis.n_modes()) {
    throw Error(ErrorCode::LengthMismatch, "more coefficients than modes");
  }
  return basis.modes.leftCols(coeffs.size()) * coeffs;
}

}  // namespace hemoreduce
