#include "hemoreduce/esn.hpp"

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <random>
#include <string>

#include "hemoreduce/error.hpp"

namespace hemoreduce {

void EsnConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "esn: " + what); };
  if (n_reservoir < 1) bad("n_reservoir must be >= 1");
  if (!(density > 0.0 && density <= 1.0)) bad("density must be in (0, 1]");
  if (!(spectral_radius > 0.0)) bad("spectral_radius must be > 0");
  if (!(leak_rate > 0.0 && leak_rate <= 1.0)) bad("leak_rate must be in (0, 1]");
  if (!(ridge_lambda >= 0.0)) bad("ridge_lambda must be >= 0");
  if (!(washout >= 0.0)) bad("washout must be >= 0");
  if (!(step_dt > 0.0)) bad("step_dt must be > 0");
  if (!std::isfinite(input_scaling) || !std::isfinite(bias_scaling) || !std::isfinite(gain))
    bad("scalings must be finite");
}

double spectral_radius(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::InvalidArgument, "spectral_radius: not square");
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  if (es.info() != Eigen::Success)
    throw Error(ErrorCode::PowerIterationNoConvergence, "eigenvalue iteration did not converge");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Reservoir init_reservoir(const EsnConfig& config, int d_in) {
  config.validate();
  if (d_in < 1) throw Error(ErrorCode::InvalidArgument, "esn: d_in must be >= 1");
  const int n = config.n_reservoir;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0), sym(-1.0, 1.0);

  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (unit(rng) < config.density) trip.emplace_back(i, j, sym(rng));

  Reservoir r;
  r.w.resize(n, n);
  r.w.setFromTriplets(trip.begin(), trip.end());
  r.w_in.resize(n, d_in);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d_in; ++j) r.w_in(i, j) = sym(rng);
  r.bias.resize(n);
  for (int i = 0; i < n; ++i) r.bias[i] = sym(rng);
  r.state = Eigen::VectorXd::Zero(n);

  const double rho = r.w.nonZeros() > 0 ? spectral_radius(config.gain * Eigen::MatrixXd(r.w)) : 0.0;
  if (!(rho > 0.0)) {
    r.zero_matrix = true;
    r.spectral_radius = 0.0;
  } else {
    r.w *= config.spectral_radius / rho;
    r.spectral_radius = config.spectral_radius;
  }
  return r;
}

void advance(Reservoir& res, const Eigen::Ref<const Eigen::VectorXd>& u, const EsnConfig& config) {
  const Eigen::VectorXd pre =
      config.gain * (config.input_scaling * (res.w_in * u) + res.w * res.state + config.bias_scaling * res.bias);
  res.state = (1.0 - config.leak_rate) * res.state + config.leak_rate * pre.array().tanh().matrix();
}

Eigen::MatrixXd collect_states(Reservoir& res, const Eigen::MatrixXd& inputs, const EsnConfig& config,
                               int stride) {
  if (stride < 1) throw Error(ErrorCode::InvalidArgument, "collect_states: stride must be >= 1");
  if (inputs.cols() != res.w_in.cols())
    throw Error(ErrorCode::LengthMismatch, "collect_states: input width does not match W_in");
  const Eigen::Index rows = inputs.rows() / stride;
  Eigen::MatrixXd out(rows, res.size());
  Eigen::Index row = 0;
  for (Eigen::Index k = 0; k < inputs.rows(); ++k) {
    advance(res, inputs.row(k).transpose(), config);
    if ((k + 1) % stride == 0 && row < rows) out.row(row++) = res.state.transpose();
  }
  return out;
}

Readout train_readout(const Eigen::MatrixXd& states, const Eigen::MatrixXd& targets, double lambda,
                      Eigen::Index washout_rows) {
  if (states.rows() != targets.rows())
    throw Error(ErrorCode::LengthMismatch, "train_readout: state and target row counts differ");
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "train_readout: lambda must be >= 0");
  if (washout_rows < 0 || washout_rows >= states.rows())
    throw Error(ErrorCode::HorizonTooShort, "train_readout: no rows left after washout");
  const Eigen::Index m = states.rows() - washout_rows, n = states.cols();
  const Eigen::MatrixXd r = states.bottomRows(m);
  const Eigen::MatrixXd y = targets.bottomRows(m);

  Readout out;
  if (lambda > 0.0) {
    const Eigen::RowVectorXd rm = r.colwise().mean(), ym = y.colwise().mean();
    const Eigen::MatrixXd rc = r.rowwise() - rm, yc = y.rowwise() - ym;
    Eigen::MatrixXd a = rc.transpose() * rc;
    a.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
      throw Error(ErrorCode::SingularNormalEquations, "ridge normal equations are not positive definite");
    const Eigen::MatrixXd wt = llt.solve(rc.transpose() * yc);  // N x d_out
    out.w_out = wt.transpose();
    out.b_out = (ym - rm * wt).transpose();
  } else {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> rank_check(r);
    if (rank_check.rank() < std::min(m, n))
      throw Error(ErrorCode::SingularNormalEquations,
                  "state matrix rank " + std::to_string(rank_check.rank()) + " is deficient at lambda = 0");
    Eigen::MatrixXd aug(m, n + 1);
    aug.leftCols(n) = r;
    aug.col(n).setOnes();
    const Eigen::MatrixXd sol = aug.completeOrthogonalDecomposition().solve(y);  // (N+1) x d_out
    out.w_out = sol.topRows(n).transpose();
    out.b_out = sol.row(n).transpose();
  }
  const Eigen::MatrixXd fit = (r * out.w_out.transpose()).rowwise() + out.b_out.transpose();
  const double ny = y.norm();
  out.training_error = ny > 0.0 ? (fit - y).norm() / ny : (fit - y).norm();
  return out;
}

Eigen::MatrixXd inlet_inputs(const InletSignal& signal, double step_dt, long steps) {
  Eigen::MatrixXd in(steps, 1);
  for (long k = 0; k < steps; ++k) in(k, 0) = inlet_velocity(signal, static_cast<double>(k + 1) * step_dt);
  return in;
}

namespace {

int sample_stride(const EsnConfig& config, double sample_dt) {
  if (!(sample_dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "esn: sample_dt must be > 0");
  const long stride = std::lround(sample_dt / config.step_dt);
  if (stride < 1 || std::abs(static_cast<double>(stride) * config.step_dt - sample_dt) > 1e-9 * sample_dt)
    throw Error(ErrorCode::InvalidArgument, "esn: step_dt must divide the sample interval");
  return static_cast<int>(stride);
}

// States at n * sample_dt for n = 0..samples-1; row 0 is the zero initial state.
Eigen::MatrixXd drive(Reservoir& res, const EsnConfig& config, const InletSignal& signal, int stride,
                      Eigen::Index samples) {
  const Eigen::MatrixXd in = inlet_inputs(signal, config.step_dt, static_cast<long>(samples - 1) * stride);
  Eigen::MatrixXd states(samples, res.size());
  states.row(0) = res.state.transpose();
  if (samples > 1) states.bottomRows(samples - 1) = collect_states(res, in, config, stride);
  return states;
}

Eigen::Index washout_rows(const EsnConfig& config, double sample_dt) {
  return static_cast<Eigen::Index>(std::ceil(config.washout / sample_dt - 1e-9));
}

}  // namespace

TrainedEsn train_esn(const EsnConfig& config, const InletSignal& signal, const Eigen::MatrixXd& targets,
                     double sample_dt) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const int stride = sample_stride(config, sample_dt);
  TrainedEsn model;
  model.config = config;
  model.sample_dt = sample_dt;
  model.reservoir = init_reservoir(config, 1);
  Reservoir work = model.reservoir;
  const Eigen::MatrixXd states = drive(work, config, signal, stride, targets.cols());
  model.readout = train_readout(states, targets.transpose(), config.ridge_lambda, washout_rows(config, sample_dt));
  model.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return model;
}

EsnPrediction predict(const TrainedEsn& model, const InletSignal& signal, double horizon) {
  const EsnConfig& config = model.config;
  if (!(horizon >= config.washout))
    throw Error(ErrorCode::HorizonTooShort, "test horizon " + std::to_string(horizon) +
                                                " s is shorter than the washout " +
                                                std::to_string(config.washout) + " s");
  const auto start = std::chrono::steady_clock::now();
  const int stride = sample_stride(config, model.sample_dt);
  const auto samples = static_cast<Eigen::Index>(std::lround(horizon / model.sample_dt)) + 1;
  Reservoir res = model.reservoir;
  res.state.setZero();
  const Eigen::MatrixXd states = drive(res, config, signal, stride, samples);
  const Eigen::Index first = washout_rows(config, model.sample_dt);
  EsnPrediction out;
  out.coeffs = (model.readout.w_out * states.bottomRows(samples - first).transpose()).colwise() +
               model.readout.b_out;
  for (Eigen::Index n = first; n < samples; ++n) out.times.push_back(static_cast<double>(n) * model.sample_dt);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace hemoreduce
