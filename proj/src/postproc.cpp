#include "hemoreduce/postproc.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "hemoreduce/error.hpp"
#include "number_text.hpp"

namespace hemoreduce {

FieldSeries reconstruct_full(const PodBasis& velocity, const PodBasis& pressure,
                             const LiftingField& lifting, const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& b, std::span<const double> u_in,
                             std::span<const double> times) {
  const auto n = static_cast<Eigen::Index>(times.size());
  if (a.cols() != n || b.cols() != n || static_cast<Eigen::Index>(u_in.size()) != n)
    throw Error(ErrorCode::LengthMismatch, "reconstruct_full: coefficient, inlet and time series differ in length");
  if (a.rows() != velocity.n_modes() || b.rows() != pressure.n_modes())
    throw Error(ErrorCode::LengthMismatch, "reconstruct_full: coefficient rows do not match the bases");
  if (lifting.zeta.size() != velocity.modes.rows())
    throw Error(ErrorCode::LengthMismatch, "reconstruct_full: lifting does not match the velocity basis");
  FieldSeries out;
  out.times.assign(times.begin(), times.end());
  out.velocity = velocity.modes * a;
  for (Eigen::Index c = 0; c < n; ++c) out.velocity.col(c) += lifting.zeta * u_in[static_cast<std::size_t>(c)];
  out.pressure = pressure.modes * b;
  return out;
}

Eigen::VectorXd wall_shear_stress(const Eigen::Ref<const Eigen::VectorXd>& velocity,
                                  const FluidProps& props, const DomainMask& domain) {
  const auto n = static_cast<Eigen::Index>(domain.n_fluid());
  if (velocity.size() != 2 * n) throw Error(ErrorCode::LengthMismatch, "wall_shear_stress: bad velocity length");
  const auto walls = domain.wall_faces();
  Eigen::VectorXd tau(static_cast<Eigen::Index>(walls.size()));
  const double h = domain.h();
  for (std::size_t f = 0; f < walls.size(); ++f) {
    const BoundaryFace& w = walls[f];
    const int ci = w.cell % domain.nx(), cj = w.cell / domain.nx();
    // Tangential component: v on x-faces, u on y-faces.
    const Eigen::Index offset = w.axis == Axis::X ? n : 0;
    const int ni = w.axis == Axis::X ? ci - w.outward : ci;
    const int nj = w.axis == Axis::X ? cj : cj - w.outward;
    const double u0 = velocity[offset + domain.fluid_id(w.cell)];
    const int next = domain.fluid_id(ni, nj);
    const double dudn = next >= 0 ? (9.0 * u0 - velocity[offset + next]) / (3.0 * h) : 2.0 * u0 / h;
    tau[static_cast<Eigen::Index>(f)] = props.mu * std::abs(dudn);
  }
  return tau;
}

Eigen::VectorXd speed(const Eigen::Ref<const Eigen::VectorXd>& velocity) {
  const Eigen::Index n = velocity.size() / 2;
  return (velocity.head(n).array().square() + velocity.tail(n).array().square()).sqrt();
}

double relative_l2_error(const Eigen::Ref<const Eigen::VectorXd>& reference,
                         const Eigen::Ref<const Eigen::VectorXd>& approx, std::span<const double> weights,
                         bool demean) {
  if (reference.size() != approx.size())
    throw Error(ErrorCode::LengthMismatch, "relative_l2_error: fields differ in length");
  if (!weights.empty() && static_cast<Eigen::Index>(weights.size()) != reference.size())
    throw Error(ErrorCode::LengthMismatch, "relative_l2_error: weight count does not match the field");
  Eigen::VectorXd w = weights.empty() ? Eigen::VectorXd::Ones(reference.size())
                                      : Eigen::Map<const Eigen::VectorXd>(weights.data(), reference.size()).eval();
  Eigen::VectorXd r = reference, q = approx;
  if (demean) {
    const double wsum = w.sum();
    r.array() -= r.dot(w) / wsum;
    q.array() -= q.dot(w) / wsum;
  }
  const double ref = std::sqrt(r.cwiseProduct(r).dot(w));
  if (!(ref > 0.0)) throw Error(ErrorCode::ZeroReferenceNorm, "relative_l2_error: reference field has zero norm");
  const Eigen::VectorXd d = r - q;
  return 100.0 * std::sqrt(d.cwiseProduct(d).dot(w)) / ref;
}

namespace {

double guarded(const Eigen::Ref<const Eigen::VectorXd>& ref, const Eigen::Ref<const Eigen::VectorXd>& approx,
               std::span<const double> weights, bool demean) {
  try {
    return relative_l2_error(ref, approx, weights, demean);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ZeroReferenceNorm) throw;
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

ErrorSeries error_series(const SnapshotMatrix& fom_velocity, const SnapshotMatrix& fom_pressure,
                         const FieldSeries& rom, const FluidProps& props) {
  if (!fom_velocity.domain) throw Error(ErrorCode::InvalidArgument, "error_series: snapshots without a domain");
  const DomainMask& d = *fom_velocity.domain;
  if (fom_velocity.times != fom_pressure.times)
    throw Error(ErrorCode::LengthMismatch, "error_series: velocity and pressure sample times differ");
  if (rom.velocity.cols() != static_cast<Eigen::Index>(rom.times.size()) ||
      rom.pressure.cols() != static_cast<Eigen::Index>(rom.times.size()) ||
      rom.velocity.rows() != fom_velocity.data.rows() || rom.pressure.rows() != fom_pressure.data.rows())
    throw Error(ErrorCode::LengthMismatch, "error_series: ROM fields do not match the FOM snapshots");
  const auto& ft = fom_velocity.times;
  const double tol = 1e-6 * std::max(fom_velocity.dt_sample, 1e-12);
  ErrorSeries s;
  for (std::size_t c = 0; c < rom.times.size(); ++c) {
    const double t = rom.times[c];
    const auto it = std::lower_bound(ft.begin(), ft.end(), t - tol);
    if (it == ft.end() || std::abs(*it - t) > tol)
      throw Error(ErrorCode::LengthMismatch, "error_series: ROM time " + std::to_string(t) + " has no FOM sample");
    const auto col = static_cast<Eigen::Index>(it - ft.begin());
    const auto cc = static_cast<Eigen::Index>(c);
    const Eigen::VectorXd uf = fom_velocity.data.col(col), ur = rom.velocity.col(cc);
    s.times.push_back(t);
    s.e_U.push_back(guarded(speed(uf), speed(ur), d.weights(), false));
    s.e_p.push_back(guarded(fom_pressure.data.col(col), rom.pressure.col(cc), d.weights(), true));
    s.e_wss.push_back(guarded(wall_shear_stress(uf, props, d), wall_shear_stress(ur, props, d), {}, false));
  }
  return s;
}

ErrorSummary summarize(std::span<const double> times, std::span<const double> values, double horizon) {
  if (times.size() != values.size()) throw Error(ErrorCode::LengthMismatch, "summarize: length mismatch");
  ErrorSummary out;
  double sum = 0.0, q2 = 0.0, q4 = 0.0;
  std::size_t n2 = 0, n4 = 0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double v = values[k];
    if (std::isnan(v)) continue;
    ++out.defined;
    sum += v;
    out.max = std::max(out.max, v);
    const double t = times[k];
    if (t >= 0.25 * horizon && t < 0.5 * horizon) q2 += v, ++n2;
    if (t >= 0.75 * horizon) q4 += v, ++n4;
  }
  if (out.defined > 0) out.mean = sum / static_cast<double>(out.defined);
  out.drift_ratio = (n2 > 0 && n4 > 0 && q2 > 0.0) ? (q4 / static_cast<double>(n4)) / (q2 / static_cast<double>(n2))
                                                   : std::numeric_limits<double>::quiet_NaN();
  return out;
}

void write_error_csv(std::ostream& out, const ErrorSeries& s) {
  out << "t,e_p,e_U,e_wss\n";
  for (std::size_t k = 0; k < s.times.size(); ++k)
    out << detail::number_text(s.times[k]) << ',' << detail::number_text(s.e_p[k]) << ','
        << detail::number_text(s.e_U[k]) << ',' << detail::number_text(s.e_wss[k]) << '\n';
}

TimingReport build_timing_report(std::span<const PhaseRecord> records, std::span<const std::string> methods) {
  auto find = [&](const std::string& method, const std::string& phase) {
    for (const auto& r : records)
      if (r.method == method && r.phase == phase) {
        if (!(r.seconds > 0.0))
          throw Error(ErrorCode::InvalidArgument, "timing record " + method + "/" + phase + " is not positive");
        return r.seconds;
      }
    throw Error(ErrorCode::MissingPhase, "no " + phase + " timing record for " + method);
  };
  TimingReport rep;
  rep.fom_seconds = find("fom", "run");
  for (const auto& m : methods) {
    MethodTiming t;
    t.method = m;
    t.offline_seconds = find(m, "offline");
    t.online_seconds = find(m, "online");
    t.speedup = rep.fom_seconds / t.online_seconds;
    rep.methods.push_back(t);
  }
  return rep;
}

void write_timing_table(std::ostream& out, const TimingReport& rep) {
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::left << std::setw(10) << "method" << std::right << std::setw(14) << "offline [s]" << std::setw(14)
      << "online [s]" << std::setw(12) << "speedup" << '\n';
  out << std::left << std::setw(10) << "fom" << std::right << std::setw(14) << "-" << std::setw(14) << std::fixed
      << std::setprecision(4) << rep.fom_seconds << std::setw(12) << "1.0" << '\n';
  for (const auto& m : rep.methods)
    out << std::left << std::setw(10) << m.method << std::right << std::setw(14) << m.offline_seconds
        << std::setw(14) << m.online_seconds << std::setw(12) << std::setprecision(1) << m.speedup
        << std::setprecision(4) << '\n';
  out.flags(flags);
  out.precision(prec);
}

void write_timing_csv(std::ostream& out, const TimingReport& rep) {
  out << "method,offline_seconds,online_seconds,speedup\n";
  out << "fom,," << detail::number_text(rep.fom_seconds) << ",1\n";
  for (const auto& m : rep.methods)
    out << m.method << ',' << detail::number_text(m.offline_seconds) << ',' << detail::number_text(m.online_seconds)
        << ',' << detail::number_text(m.speedup) << '\n';
}

}  // namespace hemoreduce
