#pragma once

// Leaky echo-state network mapping the inlet speed to POD coefficients.
//   r <- (1 - leak) r + leak tanh(gain (input_scaling W_in u + W r + bias_scaling b))
//   y = W_out r + b_out

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <vector>

#include "hemoreduce/fom.hpp"

namespace hemoreduce {

struct EsnConfig {
  int n_reservoir = 500;
  double density = 0.02;
  double spectral_radius = 0.95;  // target for gain * W
  double input_scaling = 0.5;
  double bias_scaling = 0.1;
  double gain = 1.0;
  double leak_rate = 0.3;
  double ridge_lambda = 1e-6;
  std::uint64_t seed = 7;
  double washout = 3.0;    // s
  double step_dt = 0.0025;  // s between reservoir updates

  /// Throws InvalidArgument when an invariant is broken.
  void validate() const;
};

struct Reservoir {
  Eigen::MatrixXd w_in;                      // N x d_in
  Eigen::SparseMatrix<double, Eigen::RowMajor> w;  // N x N, already scaled
  Eigen::VectorXd bias;                      // N
  Eigen::VectorXd state;                     // N
  double spectral_radius = 0.0;              // of gain * w after scaling
  bool zero_matrix = false;                  // no recurrent weights; scaling skipped

  Eigen::Index size() const noexcept { return bias.size(); }
};

struct Readout {
  Eigen::MatrixXd w_out;  // d_out x N
  Eigen::VectorXd b_out;  // d_out
  double training_error = 0.0;  // ||R W^T + b - Y||_F / ||Y||_F over the fitted rows
};

/// Spectral radius (largest eigenvalue modulus) of a square matrix.
/// Throws PowerIterationNoConvergence when the eigenvalue iteration fails.
double spectral_radius(const Eigen::MatrixXd& m);

Reservoir init_reservoir(const EsnConfig& config, int d_in);

/// One update of reservoir.state with input u (length d_in).
void advance(Reservoir& reservoir, const Eigen::Ref<const Eigen::VectorXd>& u,
             const EsnConfig& config);

/// Drives from the current state through the rows of `inputs` (steps x d_in),
/// returning the post-update state after every `stride`-th step as a row.
Eigen::MatrixXd collect_states(Reservoir& reservoir, const Eigen::MatrixXd& inputs,
                               const EsnConfig& config, int stride = 1);

/// Ridge regression on rows [washout_rows, end). lambda > 0 uses mean-centered
/// normal equations; lambda = 0 returns the minimum-norm least-squares fit and
/// throws SingularNormalEquations when R is rank deficient.
Readout train_readout(const Eigen::MatrixXd& states, const Eigen::MatrixXd& targets,
                      double lambda, Eigen::Index washout_rows);

/// Inlet speed at t = k step_dt for k = 1..steps (one row per step).
Eigen::MatrixXd inlet_inputs(const InletSignal& signal, double step_dt, long steps);

struct EsnPrediction {
  std::vector<double> times;
  Eigen::MatrixXd coeffs;  // d_out x n_samples (t >= washout)
  double wall_seconds = 0.0;
};

struct TrainedEsn {
  EsnConfig config;
  Reservoir reservoir;  // state after construction (zero)
  Readout readout;
  double sample_dt = 0.0;
  double wall_seconds = 0.0;
};

/// Samples of the target trajectory are at n * sample_dt, n = 0..cols-1.
/// Rows with t < washout are excluded from the fit.
TrainedEsn train_esn(const EsnConfig& config, const InletSignal& signal,
                     const Eigen::MatrixXd& targets, double sample_dt);

/// Drives a zeroed copy of the reservoir with the test signal over [0, horizon]
/// and emits predictions at the sample cadence for t >= washout. Throws
/// HorizonTooShort when horizon < washout.
EsnPrediction predict(const TrainedEsn& model, const InletSignal& signal, double horizon);

}  // namespace hemoreduce
