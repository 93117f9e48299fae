#include "hemoreduce/snapshot_matrix.hpp"

#include <string>

#include "hemoreduce/error.hpp"

namespace hemoreduce {

void SnapshotMatrix::validate() const {
  if (!domain) throw Error(ErrorCode::InvalidArgument, "snapshot matrix without geometry");
  const auto expected = static_cast<Eigen::Index>(components(kind) * domain->n_fluid());
  if (data.rows() != expected) {
    throw Error(ErrorCode::LengthMismatch, "snapshot record size " + std::to_string(data.rows()) +
                                               " != " + std::to_string(expected));
  }
  if (times.size() != n_snapshots()) {
    throw Error(ErrorCode::LengthMismatch, "one timestamp per snapshot required");
  }
  if (!inlet_values.empty() && inlet_values.size() != n_snapshots()) {
    throw Error(ErrorCode::LengthMismatch, "one inlet value per snapshot required");
  }
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) {
      throw Error(ErrorCode::InvalidArgument, "snapshot times must be strictly increasing");
    }
  }
}

SnapshotMatrix SnapshotMatrix::select_from(double t_min) const {
  SnapshotMatrix out;
  out.kind = kind;
  out.domain = domain;
  out.dt_sample = dt_sample;
  out.homogenized = homogenized;
  std::vector<Eigen::Index> keep;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] >= t_min - 1e-12) keep.push_back(static_cast<Eigen::Index>(k));
  }
  out.data.resize(data.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    out.data.col(static_cast<Eigen::Index>(c)) = data.col(keep[c]);
    out.times.push_back(times[keep[c]]);
    if (!inlet_values.empty()) out.inlet_values.push_back(inlet_values[keep[c]]);
  }
  return out;
}

double inner_product(std::span<const double> f, std::span<const double> g,
                     std::span<const double> w) {
  if (f.size() != g.size() || w.empty() || f.size() % w.size() != 0) {
    throw Error(ErrorCode::LengthMismatch,
                "inner product of lengths " + std::to_string(f.size()) + " and " +
                    std::to_string(g.size()) + " with " + std::to_string(w.size()) + " weights");
  }
  const std::size_t n = w.size();
  double sum = 0.0;
  for (std::size_t c = 0; c < f.size(); c += n) {
    for (std::size_t k = 0; k < n; ++k) sum += w[k] * f[c + k] * g[c + k];
  }
  return sum;
}

}  // namespace hemoreduce
