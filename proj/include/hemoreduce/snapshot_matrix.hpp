#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "hemoreduce/geometry.hpp"

namespace hemoreduce {

enum class FieldKind : std::uint8_t { Velocity = 0, Pressure = 1 };

inline int components(FieldKind k) noexcept { return k == FieldKind::Velocity ? 2 : 1; }

/// Time-ordered field samples over the fluid cells of one domain. Velocity
/// columns stack the x components of every fluid cell followed by the y
/// components; pressure columns hold one value per fluid cell.
struct SnapshotMatrix {
  FieldKind kind = FieldKind::Velocity;
  std::shared_ptr<const DomainMask> domain;
  Eigen::MatrixXd data;               // rows = components * n_fluid, cols = N_s
  std::vector<double> times;          // strictly increasing
  std::vector<double> inlet_values;   // u_in(t_n) per column, empty when unknown
  double dt_sample = 0.0;
  bool homogenized = false;

  std::size_t n_cells() const noexcept { return domain ? domain->n_fluid() : 0; }
  std::size_t n_snapshots() const noexcept { return static_cast<std::size_t>(data.cols()); }
  std::size_t record_size() const noexcept { return static_cast<std::size_t>(data.rows()); }
  std::span<const double> weights() const noexcept {
    return domain ? domain->weights() : std::span<const double>{};
  }

  /// Throws LengthMismatch / InvalidArgument when invariants are broken.
  void validate() const;

  /// New matrix holding the columns whose time is >= t_min.
  SnapshotMatrix select_from(double t_min) const;
};

/// Weighted discrete L2 inner product sum_c w_c f_c g_c. Vector fields stacked
/// component-wise are accepted when their length is a multiple of the weight count.
double inner_product(std::span<const double> f, std::span<const double> g,
                     std::span<const double> weights);

inline double inner_product(const Eigen::Ref<const Eigen::VectorXd>& f,
                            const Eigen::Ref<const Eigen::VectorXd>& g,
                            std::span<const double> weights) {
  return inner_product(std::span<const double>(f.data(), static_cast<std::size_t>(f.size())),
                       std::span<const double>(g.data(), static_cast<std::size_t>(g.size())),
                       weights);
}

}  // namespace hemoreduce
