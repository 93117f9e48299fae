#include "hemoreduce/geometry.hpp"

#include <cmath>
#include <queue>
#include <string>

#include "hemoreduce/error.hpp"

namespace hemoreduce {

namespace {

FaceKind boundary_kind(CellKind other) {
  switch (other) {
    case CellKind::Fluid: return FaceKind::Interior;
    case CellKind::InletGhost: return FaceKind::Inlet;
    case CellKind::OutletGhost: return FaceKind::Outlet;
    case CellKind::Solid: break;
  }
  return FaceKind::Wall;
}

int cells_for(double length, double h) {
  // Tolerate round-off when the length is an integer multiple of h.
  return static_cast<int>(std::ceil(length / h - 1e-9));
}

}  // namespace

DomainMask::DomainMask(int nx, int ny, double h, double x0, double y0, std::vector<CellKind> kinds)
    : nx_(nx), ny_(ny), h_(h), x0_(x0), y0_(y0), kinds_(std::move(kinds)) {
  if (nx <= 0 || ny <= 0 || !(h > 0.0)) {
    throw Error(ErrorCode::NonPositiveDimension, "grid dimensions must be positive");
  }
  if (kinds_.size() != static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny)) {
    throw Error(ErrorCode::LengthMismatch, "cell kind count does not match nx*ny");
  }
  fluid_id_.assign(kinds_.size(), -1);
  for (int j = 0; j < ny_; ++j) {
    for (int i = 0; i < nx_; ++i) {
      int c = cell_index(i, j);
      if (kinds_[c] == CellKind::Fluid) {
        fluid_id_[c] = static_cast<int>(fluid_cells_.size());
        fluid_cells_.push_back(c);
      }
    }
  }
  if (fluid_cells_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "domain has no fluid cells");
  }
  weights_.assign(fluid_cells_.size(), h_ * h_);
  classify_faces();
  check_connectivity();
  group_outlets();
}

CellKind DomainMask::kind(int i, int j) const noexcept {
  if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return CellKind::Solid;
  return kinds_[cell_index(i, j)];
}

int DomainMask::fluid_id(int i, int j) const noexcept {
  if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return -1;
  return fluid_id_[cell_index(i, j)];
}

FaceKind DomainMask::x_face_kind(int i, int j) const noexcept {
  if (i < 0 || i > nx_ || j < 0 || j >= ny_) return FaceKind::None;
  return xface_[i + (nx_ + 1) * j];
}

FaceKind DomainMask::y_face_kind(int i, int j) const noexcept {
  if (i < 0 || i >= nx_ || j < 0 || j > ny_) return FaceKind::None;
  return yface_[i + nx_ * j];
}

double DomainMask::fluid_area() const noexcept {
  double a = 0.0;
  for (double w : weights_) a += w;
  return a;
}

void DomainMask::classify_faces() {
  xface_.assign(static_cast<std::size_t>(nx_ + 1) * ny_, FaceKind::None);
  yface_.assign(static_cast<std::size_t>(nx_) * (ny_ + 1), FaceKind::None);

  auto classify = [&](Axis axis, int fi, int fj, int ia, int ja, int ib, int jb) {
    CellKind a = kind(ia, ja);
    CellKind b = kind(ib, jb);
    FaceKind fk = FaceKind::None;
    BoundaryFace bf{axis, fi, fj, -1, 0};
    if (a == CellKind::Fluid && b == CellKind::Fluid) {
      fk = FaceKind::Interior;
    } else if (a == CellKind::Fluid) {
      fk = boundary_kind(b);
      bf.cell = cell_index(ia, ja);
      bf.outward = +1;
    } else if (b == CellKind::Fluid) {
      fk = boundary_kind(a);
      bf.cell = cell_index(ib, jb);
      bf.outward = -1;
    }
    if (fk == FaceKind::Inlet) inlet_.push_back(bf);
    if (fk == FaceKind::Outlet) outlet_.push_back(bf);
    if (fk == FaceKind::Wall) wall_.push_back(bf);
    return fk;
  };

  for (int j = 0; j < ny_; ++j)
    for (int i = 0; i <= nx_; ++i)
      xface_[i + (nx_ + 1) * j] = classify(Axis::X, i, j, i - 1, j, i, j);
  for (int j = 0; j <= ny_; ++j)
    for (int i = 0; i < nx_; ++i)
      yface_[i + nx_ * j] = classify(Axis::Y, i, j, i, j - 1, i, j);

  if (inlet_.empty()) throw Error(ErrorCode::InvalidArgument, "domain has no inlet faces");
  if (outlet_.empty()) throw Error(ErrorCode::InvalidArgument, "domain has no outlet faces");
  inlet_axis_ = inlet_.front().axis;
  inlet_dir_ = -inlet_.front().outward;
  for (const auto& f : inlet_) {
    if (f.axis != inlet_axis_ || -f.outward != inlet_dir_) {
      throw Error(ErrorCode::InvalidArgument, "inlet faces do not share one normal");
    }
  }
}

void DomainMask::check_connectivity() const {
  std::size_t reached = flood_fill_count(*this);
  if (reached != fluid_cells_.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "fluid region is not connected to the inlet (" + std::to_string(reached) + " of " +
                    std::to_string(fluid_cells_.size()) + " cells reachable)");
  }
}

void DomainMask::group_outlets() {
  // Connected components of OutletGhost cells; each must present one normal.
  std::vector<int> comp(kinds_.size(), -1);
  int ncomp = 0;
  for (std::size_t c = 0; c < kinds_.size(); ++c) {
    if (kinds_[c] != CellKind::OutletGhost || comp[c] >= 0) continue;
    std::queue<int> q;
    q.push(static_cast<int>(c));
    comp[c] = ncomp;
    while (!q.empty()) {
      int cur = q.front();
      q.pop();
      int ci = cur % nx_, cj = cur / nx_;
      const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
      for (int d = 0; d < 4; ++d) {
        int ni = ci + di[d], nj = cj + dj[d];
        if (kind(ni, nj) != CellKind::OutletGhost) continue;
        int n = cell_index(ni, nj);
        if (comp[n] < 0) {
          comp[n] = ncomp;
          q.push(n);
        }
      }
    }
    ++ncomp;
  }
  outlet_groups_.assign(ncomp, {});
  for (std::size_t k = 0; k < outlet_.size(); ++k) {
    const auto& f = outlet_[k];
    int gi = f.i, gj = f.j;
    // The ghost cell sits on the outward side of the face.
    if (f.axis == Axis::X) {
      gi = f.outward > 0 ? f.i : f.i - 1;
    } else {
      gj = f.outward > 0 ? f.j : f.j - 1;
    }
    outlet_groups_[comp[cell_index(gi, gj)]].push_back(k);
  }
  for (const auto& g : outlet_groups_) {
    for (std::size_t k : g) {
      if (outlet_[k].axis != outlet_[g.front()].axis ||
          outlet_[k].outward != outlet_[g.front()].outward) {
        throw Error(ErrorCode::InvalidArgument, "outlet branch without a uniform normal");
      }
    }
  }
}

std::size_t flood_fill_count(const DomainMask& d) {
  std::vector<char> seen(static_cast<std::size_t>(d.nx()) * d.ny(), 0);
  std::queue<int> q;
  for (const auto& f : d.inlet_faces()) {
    if (!seen[f.cell]) {
      seen[f.cell] = 1;
      q.push(f.cell);
    }
  }
  std::size_t count = 0;
  while (!q.empty()) {
    int cur = q.front();
    q.pop();
    ++count;
    int ci = cur % d.nx(), cj = cur / d.nx();
    const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      int ni = ci + di[k], nj = cj + dj[k];
      if (!d.is_fluid(ni, nj)) continue;
      int n = d.cell_index(ni, nj);
      if (!seen[n]) {
        seen[n] = 1;
        q.push(n);
      }
    }
  }
  return count;
}

DomainMask build_bifurcation(const BifurcationParams& p) {
  if (!(p.parent_length > 0.0) || !(p.parent_width > 0.0) || !(p.branch_length > 0.0) ||
      !(p.branch_width > 0.0)) {
    throw Error(ErrorCode::NonPositiveDimension, "all bifurcation lengths must be > 0");
  }
  if (p.branch_width > p.parent_length) {
    throw Error(ErrorCode::InvalidArgument, "branch_width must not exceed parent_length");
  }
  const double h = p.parent_width / p.resolution;
  if (p.resolution < 8 || p.branch_width / h < 8.0 - 1e-9) {
    throw Error(ErrorCode::ResolutionTooCoarse, "fewer than 8 cells across a channel");
  }
  const double Lp = p.parent_length, Wp = p.parent_width;
  const double Lb = p.branch_length, Wb = p.branch_width;
  const int nx = cells_for(Lp, h) + 2;
  const int ny = cells_for(Wp + 2.0 * Lb, h) + 2;
  const double x0 = -h, y0 = -Lb - h;

  auto in_branch_x = [&](double x) { return x > Lp - Wb && x < Lp; };
  auto fluid_at = [&](double x, double y) {
    bool parent = x > 0.0 && x < Lp && y > 0.0 && y < Wp;
    bool up = in_branch_x(x) && y >= Wp && y < Wp + Lb;
    bool down = in_branch_x(x) && y > -Lb && y <= 0.0;
    return parent || up || down;
  };

  std::vector<CellKind> kinds(static_cast<std::size_t>(nx) * ny, CellKind::Solid);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double x = x0 + (i + 0.5) * h, y = y0 + (j + 0.5) * h;
      CellKind k = CellKind::Solid;
      if (fluid_at(x, y)) {
        k = CellKind::Fluid;
      } else if (x < 0.0 && x > -h && y > 0.0 && y < Wp) {
        k = CellKind::InletGhost;
      } else if (in_branch_x(x) && ((y >= Wp + Lb && y < Wp + Lb + h) ||
                                    (y <= -Lb && y > -Lb - h))) {
        k = CellKind::OutletGhost;
      }
      kinds[i + nx * j] = k;
    }
  }
  return DomainMask(nx, ny, h, x0, y0, std::move(kinds));
}

DomainMask build_channel(double length, double width, int resolution) {
  if (!(length > 0.0) || !(width > 0.0)) {
    throw Error(ErrorCode::NonPositiveDimension, "channel length and width must be > 0");
  }
  if (resolution < 8) throw Error(ErrorCode::ResolutionTooCoarse, "fewer than 8 cells across");
  const double h = width / resolution;
  const int nxf = cells_for(length, h);
  const int nx = nxf + 2, ny = resolution + 2;
  std::vector<CellKind> kinds(static_cast<std::size_t>(nx) * ny, CellKind::Solid);
  for (int j = 1; j <= resolution; ++j) {
    kinds[0 + nx * j] = CellKind::InletGhost;
    kinds[(nx - 1) + nx * j] = CellKind::OutletGhost;
    for (int i = 1; i <= nxf; ++i) kinds[i + nx * j] = CellKind::Fluid;
  }
  return DomainMask(nx, ny, h, -h, -h, std::move(kinds));
}

}  // namespace hemoreduce
