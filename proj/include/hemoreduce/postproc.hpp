#pragma once

// Field reconstruction, wall shear stress, error series and timing tables.

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hemoreduce/fom.hpp"
#include "hemoreduce/pod.hpp"
#include "hemoreduce/snapshots.hpp"

namespace hemoreduce {

struct FieldSeries {
  std::vector<double> times;
  Eigen::MatrixXd velocity;  // 2 n_fluid x n
  Eigen::MatrixXd pressure;  // n_fluid x n
};

/// u = zeta u_in + sum a_i phi_i, p = sum b_i chi_i per column. Throws LengthMismatch.
FieldSeries reconstruct_full(const PodBasis& velocity, const PodBasis& pressure,
                             const LiftingField& lifting, const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& b, std::span<const double> u_in,
                             std::span<const double> times);

/// mu |du_t/dn| at every wall face (DomainMask::wall_faces order) from the
/// cell-centered velocity, one-sided second order with the no-slip wall value.
Eigen::VectorXd wall_shear_stress(const Eigen::Ref<const Eigen::VectorXd>& velocity,
                                  const FluidProps& props, const DomainMask& domain);

/// Pointwise speed of a stacked (x block, y block) velocity.
Eigen::VectorXd speed(const Eigen::Ref<const Eigen::VectorXd>& velocity);

/// 100 ||ref - approx|| / ||ref|| under the weighted norm (weights empty:
/// unit weights). `demean` subtracts each field's weighted mean first.
/// Throws ZeroReferenceNorm.
double relative_l2_error(const Eigen::Ref<const Eigen::VectorXd>& reference,
                         const Eigen::Ref<const Eigen::VectorXd>& approx,
                         std::span<const double> weights, bool demean = false);

/// Percent errors per time; undefined samples (zero reference) hold NaN.
struct ErrorSeries {
  std::vector<double> times;
  std::vector<double> e_p, e_U, e_wss;
};

struct ErrorSummary {
  double max = 0.0;
  double mean = 0.0;
  double drift_ratio = 0.0;  // mean over the final quarter / mean over the second quarter
  std::size_t defined = 0;
};

/// E_U on the speed, E_p on de-meaned pressure, E_WSS on the wall-face vector.
/// ROM times must coincide with FOM sample times.
ErrorSeries error_series(const SnapshotMatrix& fom_velocity, const SnapshotMatrix& fom_pressure,
                         const FieldSeries& rom, const FluidProps& props);

/// Aggregates over defined samples; quarters split [0, horizon].
ErrorSummary summarize(std::span<const double> times, std::span<const double> values,
                       double horizon);

void write_error_csv(std::ostream& out, const ErrorSeries& series);

struct PhaseRecord {
  std::string method;  // "fom" or a ROM name
  std::string phase;   // "run", "offline" or "online"
  double seconds = 0.0;
};

struct MethodTiming {
  std::string method;
  double offline_seconds = 0.0;
  double online_seconds = 0.0;
  double speedup = 0.0;
};

struct TimingReport {
  double fom_seconds = 0.0;
  std::vector<MethodTiming> methods;
};

/// Throws MissingPhase when the FOM run or any method's offline/online record is absent.
TimingReport build_timing_report(std::span<const PhaseRecord> records,
                                 std::span<const std::string> methods);

void write_timing_table(std::ostream& out, const TimingReport& report);
void write_timing_csv(std::ostream& out, const TimingReport& report);

}  // namespace hemoreduce
