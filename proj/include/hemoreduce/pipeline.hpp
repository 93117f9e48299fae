#pragma once

// Offline/online workflow behind the CLI: generate -> pod -> rom -> evaluate.
// Every stage reads and writes artifacts in one output directory.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "hemoreduce/esn.hpp"
#include "hemoreduce/fom.hpp"
#include "hemoreduce/geometry.hpp"
#include "hemoreduce/postproc.hpp"

namespace hemoreduce {

struct FomSection {
  double dt = 1e-3;
  int sample_every = 50;
  double horizon = 24.0;
  double upwind_blend = 0.0;
  PoissonSolver poisson = PoissonSolver::Direct;
  double cg_tolerance = 1e-10;
  int cg_max_iterations = 10000;
  double lifting_speed = 0.2;  // steady inflow the lifting is computed at
  double lifting_dt = 1e-3;
};

struct TrainSignalSection {
  std::uint64_t seed = 42;
  int harmonic_count = 3;
};

struct PodSection {
  int velocity_modes = 3;
  int pressure_modes = 3;
  double t_min = 1.0;  // snapshots before this time are left out of the basis
};

struct GalerkinSection {
  double dt = 1e-3;
};

struct OutputSection {
  std::string dir = "out";
  std::vector<double> vtk_times{4.0, 9.0, 14.0, 23.0};
};

struct PipelineConfig {
  BifurcationParams geometry;
  FluidProps fluid;
  TrainSignalSection train;
  InletSignal test{0.2, {{0.04, 0.3, 0.0}}};
  FomSection fom;
  PodSection pod;
  GalerkinSection galerkin;
  EsnConfig esn;
  OutputSection output;

  /// Throws ConfigError.
  void validate() const;
};

/// Strict parse: unknown keys and wrong types throw ConfigError.
PipelineConfig parse_config(const std::string& json_text);
/// Throws ConfigError naming the path when the file is missing or unreadable.
PipelineConfig load_config(const std::filesystem::path& path);
/// Canonical JSON of every field (sorted keys).
std::string config_to_json(const PipelineConfig& config);

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

/// Artifact file names inside the output directory.
namespace artifact {
inline constexpr const char* kTrainVelocity = "train_velocity.hrsnap";
inline constexpr const char* kTrainPressure = "train_pressure.hrsnap";
inline constexpr const char* kTestVelocity = "test_velocity.hrsnap";
inline constexpr const char* kTestPressure = "test_pressure.hrsnap";
inline constexpr const char* kLifting = "lifting.hrlift";
inline constexpr const char* kVelocityBasis = "velocity_basis.hrbase";
inline constexpr const char* kPressureBasis = "pressure_basis.hrbase";
inline constexpr const char* kOperators = "galerkin_operators.hrops";
inline constexpr const char* kEsnModel = "esn_model.hresn";
inline constexpr const char* kVelocitySpectrum = "velocity_basis_spectrum.csv";
inline constexpr const char* kPressureSpectrum = "pressure_basis_spectrum.csv";
inline constexpr const char* kVelocityTrainCoeffs = "velocity_basis_coefficients.csv";
inline constexpr const char* kPressureTrainCoeffs = "pressure_basis_coefficients.csv";
std::string trajectory(const std::string& method);  // trajectory_<method>.hrtraj
std::string trajectory_csv(const std::string& method);  // trajectory_<method>.csv
std::string timing(const std::string& method);      // timing_<method>.json
std::string errors(const std::string& method);      // errors_<method>.csv
}  // namespace artifact

struct StageResult {
  std::vector<std::string> artifacts;  // relative to the output directory
};

struct PodStageResult : StageResult {
  Eigen::VectorXd velocity_energy, pressure_energy;  // cumulative fractions
};

struct MethodEvaluation {
  std::string method;
  ErrorSeries series;
  ErrorSummary e_U, e_p, e_wss;
};

struct EvaluateStageResult : StageResult {
  std::vector<MethodEvaluation> methods;
  TimingReport timing;
};

StageResult run_generate(const PipelineConfig& config, const std::filesystem::path& out,
                         std::ostream* log = nullptr);
PodStageResult run_pod(const PipelineConfig& config, const std::filesystem::path& out,
                       std::ostream* log = nullptr);
/// method: "galerkin" or "esn".
StageResult run_rom(const PipelineConfig& config, const std::filesystem::path& out,
                    const std::string& method, std::ostream* log = nullptr);
EvaluateStageResult run_evaluate(const PipelineConfig& config, const std::filesystem::path& out,
                                 std::ostream* log = nullptr);

/// Writes manifest_<stage>.json: config hash, seeds, version, artifact hashes.
void write_manifest(const PipelineConfig& config, const std::filesystem::path& out,
                    const std::string& stage, const StageResult& result);

const char* version_string() noexcept;

}  // namespace hemoreduce
