#pragma once

// Rasterized 2D domains on a uniform Cartesian grid.
//
// Cells are indexed (i, j) with i along x and j along y; cell (i, j) spans
// [x0 + i h, x0 + (i + 1) h] x [y0 + j h, y0 + (j + 1) h]. Faces follow the
// MAC convention: x-face (i, j) separates cells (i - 1, j) and (i, j), y-face
// (i, j) separates cells (i, j - 1) and (i, j).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hemoreduce {

enum class CellKind : std::uint8_t { Fluid = 0, Solid = 1, InletGhost = 2, OutletGhost = 3 };

enum class FaceKind : std::uint8_t { None = 0, Interior, Wall, Inlet, Outlet };

enum class Axis : std::uint8_t { X = 0, Y = 1 };

/// A face on the boundary of the fluid region.
struct BoundaryFace {
  Axis axis;        // X: x-face (carries u), Y: y-face (carries v)
  int i, j;         // face index
  int cell;         // adjacent fluid cell (grid index)
  int outward;      // +1 or -1: outward normal along `axis`
};

class DomainMask {
 public:
  DomainMask() = default;

  /// Builds faces and derived data from a cell classification. Throws if the
  /// fluid region is empty, disconnected from the inlet, or the inlet faces do
  /// not share one normal.
  DomainMask(int nx, int ny, double h, double x0, double y0, std::vector<CellKind> kinds);

  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  double h() const noexcept { return h_; }
  double x0() const noexcept { return x0_; }
  double y0() const noexcept { return y0_; }

  int cell_index(int i, int j) const noexcept { return i + nx_ * j; }
  CellKind kind(int i, int j) const noexcept;
  std::span<const CellKind> kinds() const noexcept { return kinds_; }
  bool is_fluid(int i, int j) const noexcept { return kind(i, j) == CellKind::Fluid; }

  /// Compact fluid numbering: grid index -> [0, n_fluid) or -1.
  int fluid_id(int cell) const noexcept { return fluid_id_[cell]; }
  int fluid_id(int i, int j) const noexcept;
  /// Grid index of the k-th fluid cell.
  int fluid_cell(int k) const noexcept { return fluid_cells_[k]; }
  std::size_t n_fluid() const noexcept { return fluid_cells_.size(); }

  FaceKind x_face_kind(int i, int j) const noexcept;
  FaceKind y_face_kind(int i, int j) const noexcept;

  std::span<const BoundaryFace> inlet_faces() const noexcept { return inlet_; }
  std::span<const BoundaryFace> outlet_faces() const noexcept { return outlet_; }
  std::span<const BoundaryFace> wall_faces() const noexcept { return wall_; }

  /// Inflow direction (opposite to the outward normal of every inlet face).
  Axis inlet_axis() const noexcept { return inlet_axis_; }
  int inlet_direction() const noexcept { return inlet_dir_; }

  /// Quadrature weight per fluid cell (h^2), in compact fluid order.
  std::span<const double> weights() const noexcept { return weights_; }
  double fluid_area() const noexcept;

  /// Outlet faces grouped by connected OutletGhost region (one group per branch).
  const std::vector<std::vector<std::size_t>>& outlet_groups() const noexcept {
    return outlet_groups_;
  }

  double cell_center_x(int i) const noexcept { return x0_ + (i + 0.5) * h_; }
  double cell_center_y(int j) const noexcept { return y0_ + (j + 0.5) * h_; }

 private:
  void classify_faces();
  void check_connectivity() const;
  void group_outlets();

  int nx_ = 0, ny_ = 0;
  double h_ = 0.0, x0_ = 0.0, y0_ = 0.0;
  std::vector<CellKind> kinds_;
  std::vector<int> fluid_id_;
  std::vector<int> fluid_cells_;
  std::vector<FaceKind> xface_, yface_;
  std::vector<BoundaryFace> inlet_, outlet_, wall_;
  std::vector<std::vector<std::size_t>> outlet_groups_;
  std::vector<double> weights_;
  Axis inlet_axis_ = Axis::X;
  int inlet_dir_ = 1;
};

struct BifurcationParams {
  double parent_length = 0.125;
  double parent_width = 0.05;
  double branch_length = 0.1;
  double branch_width = 0.05;
  int resolution = 32;  // cells across the parent width
};

/// T-junction: parent channel entering from the left (inlet at x = 0), two
/// vertical branches at its right end leaving upward and downward. The parent
/// occupies [0, Lp] x [0, Wp]; branches occupy [Lp - Wb, Lp] above and below.
DomainMask build_bifurcation(const BifurcationParams& params);

/// Straight channel [0, length] x [0, width], inlet on the left, outlet on the right.
DomainMask build_channel(double length, double width, int resolution);

/// Number of fluid cells reachable from the inlet by face-connected flood fill.
std::size_t flood_fill_count(const DomainMask& domain);

}  // namespace hemoreduce
