#pragma once

// Binary artifact formats (little-endian, 64-bit) and legacy VTK export.
//
// Snapshot file "HRSNAP01":
//   magic[8] | geometry | u8 field_kind | u8 flags (1 homogenized, 2 inlet values)
//   | u64 N_s | u64 record_size | f64 dt_sample | f64 times[N_s]
//   | f64 inlet[N_s] (flag 2) | f64 data[record_size * N_s] (column-major)
// geometry: u64 nx | u64 ny | f64 h | f64 x0 | f64 y0 | u64 runs | (u8 kind, u64 count)[runs]
//
// Archives "HRBASE01", "HRLIFT01", "HROPS001", "HRESN001", "HRTRAJ01":
//   magic[8] | u64 entries | (u32 name_len, name, u8 type, u64 rows, u64 cols, payload)[entries]
// with type 0 = f64, 1 = i64, column-major payload. Bases and liftings start
// with a "geometry" i64 entry holding the raw geometry block.

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "hemoreduce/esn.hpp"
#include "hemoreduce/galerkin.hpp"
#include "hemoreduce/pod.hpp"
#include "hemoreduce/snapshot_matrix.hpp"
#include "hemoreduce/snapshots.hpp"

namespace hemoreduce {

using Path = std::filesystem::path;

void write_snapshots(const Path& path, const SnapshotMatrix& snaps);
/// Throws BadMagic, VersionMismatch, TruncatedPayload (with byte offset) or IoFailure.
SnapshotMatrix read_snapshots(const Path& path);

void write_basis(const Path& path, const PodBasis& basis);
/// The result shares `domain` when its geometry matches the file.
PodBasis read_basis(const Path& path, std::shared_ptr<const DomainMask> domain = nullptr);

void write_lifting(const Path& path, const LiftingField& lifting);
LiftingField read_lifting(const Path& path, std::shared_ptr<const DomainMask> domain = nullptr);

void write_operators(const Path& path, const ReducedOperators& ops);
ReducedOperators read_operators(const Path& path);

void write_esn(const Path& path, const TrainedEsn& model);
TrainedEsn read_esn(const Path& path);

struct CoefficientTrajectory {
  std::string method;
  std::vector<double> times;
  Eigen::MatrixXd velocity_coeffs;  // K x n
  Eigen::MatrixXd pressure_coeffs;  // P x n
};

void write_trajectory(const Path& path, const CoefficientTrajectory& traj);
CoefficientTrajectory read_trajectory(const Path& path);

/// `k,eigenvalue,energy_fraction`, one row per eigenvalue.
void write_basis_spectrum_csv(const Path& path, const PodBasis& basis);
/// `t,c1..cN`, one row per training snapshot.
void write_basis_coefficients_csv(const Path& path, const PodBasis& basis);
/// `t,a1..aK,b1..bP`, one row per sample.
void write_trajectory_csv(const Path& path, const CoefficientTrajectory& traj);

/// Serialized geometry block (also used for config hashing and equality checks).
std::vector<std::uint8_t> encode_geometry(const DomainMask& domain);
bool same_geometry(const DomainMask& a, const DomainMask& b);

/// Legacy ASCII VTK structured points with cell data over the full grid.
/// `values` has components * n_fluid entries (stacked by component); solid
/// and ghost cells are written as -1e30. Throws IoFailure.
void export_vtk(const Path& path, const DomainMask& domain, const std::string& name,
                const Eigen::Ref<const Eigen::VectorXd>& values, int components,
                const std::string& title = "hemoreduce");

constexpr double kVtkBlank = -1e30;

struct VtkField {
  std::string title;
  std::string name;
  int nx = 0, ny = 0, components = 1;
  double x0 = 0.0, y0 = 0.0, h = 0.0;
  Eigen::MatrixXd values;  // (nx * ny) x components, grid order
};

VtkField read_vtk(const Path& path);

}  // namespace hemoreduce
