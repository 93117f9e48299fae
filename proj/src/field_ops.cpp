#include "hemoreduce/field_ops.hpp"

#include <array>
#include <vector>

#include "hemoreduce/error.hpp"

namespace hemoreduce {

namespace {

using Triplet = Eigen::Triplet<double>;

struct Ghost {
  int cell;   // compact id of the owning cell
  int inner;  // compact id of the next cell inward, -1 if none
  FaceKind kind;
};

// Direction order: E, W, N, S.
constexpr int kDi[4] = {1, -1, 0, 0};
constexpr int kDj[4] = {0, 0, 1, -1};

FaceKind face_between(const DomainMask& d, int i, int j, int dir) {
  switch (dir) {
    case 0: return d.x_face_kind(i + 1, j);
    case 1: return d.x_face_kind(i, j);
    case 2: return d.y_face_kind(i, j + 1);
    default: return d.y_face_kind(i, j);
  }
}

}  // namespace

CellOperators::CellOperators(std::shared_ptr<const DomainMask> domain) : domain_(std::move(domain)) {
  if (!domain_) throw Error(ErrorCode::InvalidArgument, "CellOperators: null domain");
  const DomainMask& d = *domain_;
  n_ = static_cast<Eigen::Index>(d.n_fluid());
  const double h = d.h();

  // columns[k][dir]: extended index of the neighbor value in direction dir.
  std::vector<std::array<int, 4>> columns(static_cast<std::size_t>(n_));
  std::vector<Ghost> ghosts;
  for (Eigen::Index k = 0; k < n_; ++k) {
    const int cell = d.fluid_cell(static_cast<int>(k));
    const int i = cell % d.nx(), j = cell / d.nx();
    for (int dir = 0; dir < 4; ++dir) {
      const FaceKind fk = face_between(d, i, j, dir);
      if (fk == FaceKind::Interior) {
        columns[k][dir] = d.fluid_id(i + kDi[dir], j + kDj[dir]);
        continue;
      }
      const int opposite = dir ^ 1;
      int inner = -1;
      if (face_between(d, i, j, opposite) == FaceKind::Interior)
        inner = d.fluid_id(i + kDi[opposite], j + kDj[opposite]);
      columns[k][dir] = static_cast<int>(n_ + static_cast<Eigen::Index>(ghosts.size()));
      ghosts.push_back({static_cast<int>(k), inner, fk});
    }
  }
  n_ghost_ = static_cast<Eigen::Index>(ghosts.size());
  const Eigen::Index m = n_ + n_ghost_;

  auto dirichlet_rows = [&](std::vector<Triplet>& t, Eigen::Index row, const Ghost& g) {
    if (g.inner >= 0) {
      t.emplace_back(row, g.cell, -2.0);
      t.emplace_back(row, g.inner, 1.0 / 3.0);
    } else {
      t.emplace_back(row, g.cell, -1.0);
    }
  };

  std::vector<Triplet> tp, tv;
  const double in_dir = static_cast<double>(d.inlet_direction());
  const int in_axis = d.inlet_axis() == Axis::X ? 0 : 1;
  for (Eigen::Index k = 0; k < n_; ++k) tp.emplace_back(k, k, 1.0);
  for (Eigen::Index s = 0; s < n_ghost_; ++s) {
    const Ghost& g = ghosts[static_cast<std::size_t>(s)];
    if (g.kind == FaceKind::Outlet) dirichlet_rows(tp, n_ + s, g);
    else tp.emplace_back(n_ + s, g.cell, 1.0);
  }
  ext_p_.resize(m, n_);
  ext_p_.setFromTriplets(tp.begin(), tp.end());

  for (int c = 0; c < 2; ++c) {
    tv.clear();
    inlet_v_[c] = Eigen::VectorXd::Zero(m);
    for (Eigen::Index k = 0; k < n_; ++k) tv.emplace_back(k, k, 1.0);
    for (Eigen::Index s = 0; s < n_ghost_; ++s) {
      const Ghost& g = ghosts[static_cast<std::size_t>(s)];
      if (g.kind == FaceKind::Outlet) {
        tv.emplace_back(n_ + s, g.cell, 1.0);
        continue;
      }
      dirichlet_rows(tv, n_ + s, g);
      if (g.kind == FaceKind::Inlet && c == in_axis)
        inlet_v_[c][n_ + s] = (g.inner >= 0 ? 8.0 / 3.0 : 2.0) * in_dir;
    }
    ext_v_[c].resize(m, n_);
    ext_v_[c].setFromTriplets(tv.begin(), tv.end());
  }

  std::vector<Triplet> tx, ty, tl;
  const double c1 = 0.5 / h, c2 = 1.0 / (h * h);
  for (Eigen::Index k = 0; k < n_; ++k) {
    const auto& col = columns[static_cast<std::size_t>(k)];
    tx.emplace_back(k, col[0], c1);
    tx.emplace_back(k, col[1], -c1);
    ty.emplace_back(k, col[2], c1);
    ty.emplace_back(k, col[3], -c1);
    for (int dir = 0; dir < 4; ++dir) tl.emplace_back(k, col[dir], c2);
    tl.emplace_back(k, k, -4.0 * c2);
  }
  dx_.resize(n_, m);
  dy_.resize(n_, m);
  lap_.resize(n_, m);
  dx_.setFromTriplets(tx.begin(), tx.end());
  dy_.setFromTriplets(ty.begin(), ty.end());
  lap_.setFromTriplets(tl.begin(), tl.end());

  SpMat gx = dx_ * ext_p_, gy = dy_ * ext_p_;
  std::vector<Triplet> tg;
  for (Eigen::Index r = 0; r < n_; ++r) {
    for (SpMat::InnerIterator it(gx, r); it; ++it) tg.emplace_back(r, it.col(), it.value());
    for (SpMat::InnerIterator it(gy, r); it; ++it) tg.emplace_back(n_ + r, it.col(), it.value());
  }
  grad_p_.resize(2 * n_, n_);
  grad_p_.setFromTriplets(tg.begin(), tg.end());
}

Eigen::VectorXd CellOperators::extend_velocity(int component,
                                               const Eigen::Ref<const Eigen::VectorXd>& values,
                                               double inlet_coefficient) const {
  if (component < 0 || component > 1 || values.size() != n_)
    throw Error(ErrorCode::LengthMismatch, "extend_velocity: bad component or length");
  Eigen::VectorXd e = ext_v_[component] * values;
  if (inlet_coefficient != 0.0) e += inlet_coefficient * inlet_v_[component];
  return e;
}

Eigen::VectorXd CellOperators::extend_pressure(const Eigen::Ref<const Eigen::VectorXd>& values) const {
  if (values.size() != n_) throw Error(ErrorCode::LengthMismatch, "extend_pressure: bad length");
  return ext_p_ * values;
}

Eigen::VectorXd CellOperators::pressure_gradient(const Eigen::Ref<const Eigen::VectorXd>& p) const {
  if (p.size() != n_) throw Error(ErrorCode::LengthMismatch, "pressure_gradient: bad length");
  return grad_p_ * p;
}

Eigen::VectorXd CellOperators::velocity_laplacian(const Eigen::Ref<const Eigen::VectorXd>& u,
                                                  double g) const {
  if (u.size() != 2 * n_) throw Error(ErrorCode::LengthMismatch, "velocity_laplacian: bad length");
  Eigen::VectorXd out(2 * n_);
  for (int c = 0; c < 2; ++c)
    out.segment(c * n_, n_) = lap_ * extend_velocity(c, u.segment(c * n_, n_), g);
  return out;
}

Eigen::VectorXd CellOperators::convection(const Eigen::Ref<const Eigen::VectorXd>& u, double gu,
                                          const Eigen::Ref<const Eigen::VectorXd>& w,
                                          double gw) const {
  if (u.size() != 2 * n_ || w.size() != 2 * n_)
    throw Error(ErrorCode::LengthMismatch, "convection: bad length");
  const Eigen::VectorXd ux = extend_velocity(0, u.head(n_), gu);
  const Eigen::VectorXd uy = extend_velocity(1, u.tail(n_), gu);
  Eigen::VectorXd out(2 * n_);
  for (int b = 0; b < 2; ++b) {
    const Eigen::VectorXd wb = extend_velocity(b, w.segment(b * n_, n_), gw);
    out.segment(b * n_, n_) = dx_ * ux.cwiseProduct(wb) + dy_ * uy.cwiseProduct(wb);
  }
  return out;
}

Eigen::VectorXd CellOperators::divergence(const Eigen::Ref<const Eigen::VectorXd>& u,
                                          double g) const {
  if (u.size() != 2 * n_) throw Error(ErrorCode::LengthMismatch, "divergence: bad length");
  return dx_ * extend_velocity(0, u.head(n_), g) + dy_ * extend_velocity(1, u.tail(n_), g);
}

}  // namespace hemoreduce
