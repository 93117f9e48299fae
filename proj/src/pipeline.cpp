#include "hemoreduce/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "hemoreduce/error.hpp"
#include "hemoreduce/galerkin.hpp"
#include "hemoreduce/io.hpp"
#include "hemoreduce/pod.hpp"
#include "hemoreduce/snapshots.hpp"
#include "json.hpp"
#include "number_text.hpp"

namespace hemoreduce {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

// Reads the keys of one section, rejecting anything not consumed.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) config_error("section '" + name_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& value) {
    seen_.push_back(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) throw std::runtime_error("expected a number");
        value = it->template get<double>();
      } else if constexpr (std::is_same_v<T, int>) {
        if (!it->is_number_integer()) throw std::runtime_error("expected an integer");
        value = it->template get<int>();
      } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (!it->is_number_unsigned()) throw std::runtime_error("expected a non-negative integer");
        value = it->template get<std::uint64_t>();
      } else {
        value = it->template get<T>();
      }
    } catch (const std::exception& e) {
      config_error("'" + name_ + "." + key + "': " + e.what());
    }
  }
  const json* sub(const char* key) {
    seen_.push_back(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      bool known = false;
      for (const auto& s : seen_) known = known || key == s;
      if (!known) config_error("unknown key '" + key + "' in section '" + name_ + "'");
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::vector<std::string> seen_;
};

Harmonic parse_harmonic(const json& j, const std::string& where) {
  Harmonic h;
  Section s(j, where);
  s.get("amplitude", h.amplitude);
  s.get("frequency", h.frequency);
  s.get("phase", h.phase);
  s.finish();
  return h;
}

json harmonics_json(const std::vector<Harmonic>& hs) {
  json arr = json::array();
  for (const auto& h : hs) arr.push_back({{"amplitude", h.amplitude}, {"frequency", h.frequency}, {"phase", h.phase}});
  return arr;
}

std::shared_ptr<const DomainMask> make_domain(const PipelineConfig& c) {
  return std::make_shared<const DomainMask>(build_bifurcation(c.geometry));
}

FomOptions fom_options(const PipelineConfig& c) {
  FomOptions o;
  o.upwind_blend = c.fom.upwind_blend;
  o.solver = c.fom.poisson;
  o.cg_tolerance = c.fom.cg_tolerance;
  o.cg_max_iterations = c.fom.cg_max_iterations;
  return o;
}

InletSignal training_signal(const PipelineConfig& c) {
  return sample_training_signal(c.train.seed, c.train.harmonic_count);
}

double sample_dt(const PipelineConfig& c) { return c.fom.dt * c.fom.sample_every; }

void say(std::ostream* log, const std::string& line) {
  if (log) *log << line << '\n' << std::flush;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

fs::path require(const fs::path& out, const std::string& file, const char* stage) {
  const fs::path p = out / file;
  if (!fs::exists(p))
    throw Error(ErrorCode::MissingArtifact,
                "missing " + p.string() + "; run `hemoreduce " + stage + "` first");
  return p;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  f << j.dump(2) << '\n';
  if (!f) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoFailure, path.string() + ": " + e.what());
  }
}

void write_timing(const fs::path& out, const std::string& method, const std::vector<std::pair<std::string, double>>& phases) {
  json j = json::object();
  for (const auto& [phase, sec] : phases) j[phase] = sec;
  write_json(out / artifact::timing(method), j);
}

struct TestData {
  SnapshotMatrix velocity, pressure;
};

TestData load_test(const fs::path& out) {
  TestData t{read_snapshots(require(out, artifact::kTestVelocity, "generate")),
             read_snapshots(require(out, artifact::kTestPressure, "generate"))};
  return t;
}

struct Bases {
  PodBasis velocity, pressure;
  LiftingField lifting;
};

Bases load_bases(const fs::path& out, std::shared_ptr<const DomainMask> domain) {
  Bases b;
  b.velocity = read_basis(require(out, artifact::kVelocityBasis, "pod"), domain);
  b.pressure = read_basis(require(out, artifact::kPressureBasis, "pod"), b.velocity.domain);
  b.lifting = read_lifting(require(out, artifact::kLifting, "generate"), b.velocity.domain);
  if (b.velocity.kind != FieldKind::Velocity || b.pressure.kind != FieldKind::Pressure)
    throw Error(ErrorCode::BasisMismatch, "basis files hold the wrong field kinds");
  return b;
}

std::vector<double> inlet_series(const InletSignal& s, const std::vector<double>& times) {
  std::vector<double> u;
  u.reserve(times.size());
  for (const double t : times) u.push_back(inlet_velocity(s, t));
  return u;
}

}  // namespace

void PipelineConfig::validate() const {
  auto wrap = [](const std::function<void()>& f, const char* section) {
    try {
      f();
    } catch (const Error& e) {
      config_error(std::string("section '") + section + "': " + e.what());
    }
  };
  if (!(geometry.parent_length > 0 && geometry.parent_width > 0 && geometry.branch_length > 0 &&
        geometry.branch_width > 0))
    config_error("section 'geometry': lengths and widths must be > 0");
  if (geometry.resolution < 4) config_error("section 'geometry': resolution must be >= 4");
  wrap([&] { fluid.validate(); }, "fluid");
  wrap([&] { test.validate(); }, "signals.test");
  if (train.harmonic_count < 2 || train.harmonic_count > 5)
    config_error("section 'signals.train': harmonic_count must be in [2, 5]");
  if (!(fom.dt > 0) || fom.sample_every < 1 || !(fom.horizon > 0))
    config_error("section 'fom': dt, sample_every and horizon must be positive");
  if (!(fom.upwind_blend >= 0 && fom.upwind_blend <= 1)) config_error("section 'fom': upwind_blend must be in [0, 1]");
  if (!(fom.lifting_speed > 0) || !(fom.lifting_dt > 0))
    config_error("section 'fom': lifting_speed and lifting_dt must be > 0");
  if (pod.velocity_modes < 1 || pod.pressure_modes < 1) config_error("section 'pod': mode counts must be >= 1");
  if (!(pod.t_min >= 0)) config_error("section 'pod': t_min must be >= 0");
  if (!(galerkin.dt > 0)) config_error("section 'galerkin': dt must be > 0");
  const double ratio = sample_dt(*this) / galerkin.dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1)
    config_error("section 'galerkin': dt must divide the sample interval");
  wrap([&] { esn.validate(); }, "esn");
  if (output.dir.empty()) config_error("section 'output': dir must not be empty");
}

PipelineConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    config_error(std::string("invalid JSON: ") + e.what());
  }
  PipelineConfig c;
  Section top(root, "<root>");
  if (const json* j = top.sub("geometry")) {
    Section s(*j, "geometry");
    s.get("parent_length", c.geometry.parent_length);
    s.get("parent_width", c.geometry.parent_width);
    s.get("branch_length", c.geometry.branch_length);
    s.get("branch_width", c.geometry.branch_width);
    s.get("resolution", c.geometry.resolution);
    s.finish();
  }
  if (const json* j = top.sub("fluid")) {
    Section s(*j, "fluid");
    s.get("rho", c.fluid.rho);
    s.get("mu", c.fluid.mu);
    s.finish();
  }
  if (const json* j = top.sub("signals")) {
    Section s(*j, "signals");
    if (const json* t = s.sub("train")) {
      Section st(*t, "signals.train");
      st.get("seed", c.train.seed);
      st.get("harmonic_count", c.train.harmonic_count);
      st.finish();
    }
    if (const json* t = s.sub("test")) {
      Section st(*t, "signals.test");
      st.get("u_bar", c.test.u_bar);
      if (const json* hs = st.sub("harmonics")) {
        if (!hs->is_array()) config_error("'signals.test.harmonics' must be an array");
        c.test.harmonics.clear();
        for (const auto& h : *hs) c.test.harmonics.push_back(parse_harmonic(h, "signals.test.harmonics[]"));
      }
      st.finish();
    }
    s.finish();
  }
  if (const json* j = top.sub("fom")) {
    Section s(*j, "fom");
    s.get("dt", c.fom.dt);
    s.get("sample_every", c.fom.sample_every);
    s.get("horizon", c.fom.horizon);
    s.get("upwind_blend", c.fom.upwind_blend);
    std::string solver = c.fom.poisson == PoissonSolver::Direct ? "direct" : "cg";
    s.get("poisson_solver", solver);
    if (solver == "direct") c.fom.poisson = PoissonSolver::Direct;
    else if (solver == "cg") c.fom.poisson = PoissonSolver::ConjugateGradient;
    else config_error("'fom.poisson_solver' must be \"direct\" or \"cg\"");
    s.get("cg_tolerance", c.fom.cg_tolerance);
    s.get("cg_max_iterations", c.fom.cg_max_iterations);
    s.get("lifting_speed", c.fom.lifting_speed);
    s.get("lifting_dt", c.fom.lifting_dt);
    s.finish();
  }
  if (const json* j = top.sub("pod")) {
    Section s(*j, "pod");
    s.get("velocity_modes", c.pod.velocity_modes);
    s.get("pressure_modes", c.pod.pressure_modes);
    s.get("t_min", c.pod.t_min);
    s.finish();
  }
  if (const json* j = top.sub("galerkin")) {
    Section s(*j, "galerkin");
    s.get("dt", c.galerkin.dt);
    s.finish();
  }
  if (const json* j = top.sub("esn")) {
    Section s(*j, "esn");
    s.get("n_reservoir", c.esn.n_reservoir);
    s.get("density", c.esn.density);
    s.get("spectral_radius", c.esn.spectral_radius);
    s.get("input_scaling", c.esn.input_scaling);
    s.get("bias_scaling", c.esn.bias_scaling);
    s.get("gain", c.esn.gain);
    s.get("leak_rate", c.esn.leak_rate);
    s.get("ridge_lambda", c.esn.ridge_lambda);
    s.get("seed", c.esn.seed);
    s.get("washout", c.esn.washout);
    s.get("step_dt", c.esn.step_dt);
    s.finish();
  }
  if (const json* j = top.sub("output")) {
    Section s(*j, "output");
    s.get("dir", c.output.dir);
    s.get("vtk_times", c.output.vtk_times);
    s.finish();
  }
  top.finish();
  c.validate();
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) config_error("cannot read config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const Error& e) {
    config_error(path.string() + ": " + e.what());
  }
}

std::string config_to_json(const PipelineConfig& c) {
  json j;
  j["geometry"] = {{"parent_length", c.geometry.parent_length}, {"parent_width", c.geometry.parent_width},
                   {"branch_length", c.geometry.branch_length}, {"branch_width", c.geometry.branch_width},
                   {"resolution", c.geometry.resolution}};
  j["fluid"] = {{"rho", c.fluid.rho}, {"mu", c.fluid.mu}};
  j["signals"] = {{"train", {{"seed", c.train.seed}, {"harmonic_count", c.train.harmonic_count}}},
                  {"test", {{"u_bar", c.test.u_bar}, {"harmonics", harmonics_json(c.test.harmonics)}}}};
  j["fom"] = {{"dt", c.fom.dt},
              {"sample_every", c.fom.sample_every},
              {"horizon", c.fom.horizon},
              {"upwind_blend", c.fom.upwind_blend},
              {"poisson_solver", c.fom.poisson == PoissonSolver::Direct ? "direct" : "cg"},
              {"cg_tolerance", c.fom.cg_tolerance},
              {"cg_max_iterations", c.fom.cg_max_iterations},
              {"lifting_speed", c.fom.lifting_speed},
              {"lifting_dt", c.fom.lifting_dt}};
  j["pod"] = {{"velocity_modes", c.pod.velocity_modes}, {"pressure_modes", c.pod.pressure_modes}, {"t_min", c.pod.t_min}};
  j["galerkin"] = {{"dt", c.galerkin.dt}};
  j["esn"] = {{"n_reservoir", c.esn.n_reservoir}, {"density", c.esn.density},
              {"spectral_radius", c.esn.spectral_radius}, {"input_scaling", c.esn.input_scaling},
              {"bias_scaling", c.esn.bias_scaling}, {"gain", c.esn.gain},
              {"leak_rate", c.esn.leak_rate}, {"ridge_lambda", c.esn.ridge_lambda},
              {"seed", c.esn.seed}, {"washout", c.esn.washout}, {"step_dt", c.esn.step_dt}};
  j["output"] = {{"dir", c.output.dir}, {"vtk_times", c.output.vtk_times}};
  return j.dump(2);
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t k = 0; k < size; ++k) {
    h ^= p[k];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (f) {
    f.read(buf, sizeof(buf));
    h = fnv1a(buf, static_cast<std::size_t>(f.gcount()), h);
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int k = 15; k >= 0; --k, v >>= 4) s[static_cast<std::size_t>(k)] = digits[v & 15];
  return s;
}

const char* version_string() noexcept { return "0.1.0"; }

namespace artifact {
std::string trajectory(const std::string& method) { return "trajectory_" + method + ".hrtraj"; }
std::string trajectory_csv(const std::string& method) { return "trajectory_" + method + ".csv"; }
std::string timing(const std::string& method) { return "timing_" + method + ".json"; }
std::string errors(const std::string& method) { return "errors_" + method + ".csv"; }
}  // namespace artifact

StageResult run_generate(const PipelineConfig& c, const fs::path& out, std::ostream* log) {
  c.validate();
  fs::create_directories(out);
  const auto domain = make_domain(c);
  const FomSolver solver(domain, c.fluid, fom_options(c));
  say(log, "domain " + std::to_string(domain->nx()) + "x" + std::to_string(domain->ny()) + ", " +
               std::to_string(domain->n_fluid()) + " fluid cells");

  LiftingOptions lo;
  lo.reference_speed = c.fom.lifting_speed;
  lo.dt = c.fom.lifting_dt;
  auto start = std::chrono::steady_clock::now();
  const LiftingField lifting = compute_lifting(solver, lo);
  const double lifting_seconds = seconds_since(start);
  say(log, "lifting " + detail::number_text(lifting_seconds) + " s");

  StageResult r;
  write_lifting(out / artifact::kLifting, lifting);
  r.artifacts.push_back(artifact::kLifting);

  RunOptions ro;
  ro.log = log;
  ro.log_every = 4.0;
  std::vector<std::pair<std::string, double>> phases{{"lifting", lifting_seconds}};
  auto run = [&](const InletSignal& sig, const char* name, const char* vfile, const char* pfile) {
    say(log, std::string("fom ") + name);
    const FomRun fr = run_fom(solver, sig, c.fom.horizon, c.fom.dt, c.fom.sample_every,
                              lifted_state(lifting, inlet_velocity(sig, 0.0)), ro);
    say(log, std::string("fom ") + name + " " + detail::number_text(fr.wall_seconds) + " s, max div " +
                 detail::number_text(fr.max_divergence));
    write_snapshots(out / vfile, fr.velocity);
    write_snapshots(out / pfile, fr.pressure);
    r.artifacts.push_back(vfile);
    r.artifacts.push_back(pfile);
    return fr.wall_seconds;
  };
  phases.emplace_back("train", run(training_signal(c), "train", artifact::kTrainVelocity, artifact::kTrainPressure));
  phases.emplace_back("run", run(c.test, "test", artifact::kTestVelocity, artifact::kTestPressure));
  write_timing(out, "fom", phases);
  r.artifacts.push_back(artifact::timing("fom"));
  return r;
}

PodStageResult run_pod(const PipelineConfig& c, const fs::path& out, std::ostream* log) {
  c.validate();
  const SnapshotMatrix vel = read_snapshots(require(out, artifact::kTrainVelocity, "generate"));
  const SnapshotMatrix pre = read_snapshots(require(out, artifact::kTrainPressure, "generate"));
  const LiftingField lifting = read_lifting(require(out, artifact::kLifting, "generate"), vel.domain);
  if (!same_geometry(*vel.domain, *make_domain(c)))
    throw Error(ErrorCode::BasisMismatch, "snapshot geometry differs from the config; rerun `hemoreduce generate`");

  const PodBasis vb = compute_pod(homogenize(vel.select_from(c.pod.t_min), lifting), c.pod.velocity_modes);
  const PodBasis pb = compute_pod(pre.select_from(c.pod.t_min), c.pod.pressure_modes);
  write_basis(out / artifact::kVelocityBasis, vb);
  write_basis(out / artifact::kPressureBasis, pb);
  write_basis_spectrum_csv(out / artifact::kVelocitySpectrum, vb);
  write_basis_spectrum_csv(out / artifact::kPressureSpectrum, pb);
  write_basis_coefficients_csv(out / artifact::kVelocityTrainCoeffs, vb);
  write_basis_coefficients_csv(out / artifact::kPressureTrainCoeffs, pb);

  PodStageResult r;
  r.artifacts = {artifact::kVelocityBasis,     artifact::kPressureBasis,       artifact::kVelocitySpectrum,
                 artifact::kPressureSpectrum,  artifact::kVelocityTrainCoeffs, artifact::kPressureTrainCoeffs};
  r.velocity_energy = vb.energy_fraction;
  r.pressure_energy = pb.energy_fraction;
  if (log) {
    *log << "modes  velocity energy  pressure energy\n";
    const Eigen::Index rows = std::min<Eigen::Index>(
        std::max(c.pod.velocity_modes, c.pod.pressure_modes) + 3,
        std::min(vb.energy_fraction.size(), pb.energy_fraction.size()));
    for (Eigen::Index k = 0; k < rows; ++k) {
      char line[96];
      std::snprintf(line, sizeof(line), "%5ld  %15.8f  %15.8f%s\n", static_cast<long>(k + 1), vb.energy_fraction[k],
                    pb.energy_fraction[k],
                    (k + 1 == c.pod.velocity_modes || k + 1 == c.pod.pressure_modes) ? "  <" : "");
      *log << line;
    }
  }
  return r;
}

StageResult run_rom(const PipelineConfig& c, const fs::path& out, const std::string& method, std::ostream* log) {
  c.validate();
  if (method != "galerkin" && method != "esn")
    config_error("unknown ROM method '" + method + "' (expected galerkin or esn)");
  const Bases b = load_bases(out, nullptr);
  const TestData test = load_test(out);
  const double dt_s = sample_dt(c);
  StageResult r;
  CoefficientTrajectory traj;
  traj.method = method;
  double offline = 0.0, online = 0.0;

  if (method == "galerkin") {
    auto start = std::chrono::steady_clock::now();
    const FomSolver solver(b.velocity.domain, c.fluid, fom_options(c));
    const ReducedOperators ops = assemble_operators(b.velocity, b.pressure, b.lifting, solver);
    const GalerkinRom rom(ops);
    offline = seconds_since(start);
    write_operators(out / artifact::kOperators, ops);
    r.artifacts.push_back(artifact::kOperators);

    const double u0 = inlet_velocity(c.test, 0.0);
    const Eigen::VectorXd a0 = project(test.velocity.data.col(0) - b.lifting.zeta * u0, b.velocity);
    const int every = static_cast<int>(std::lround(dt_s / c.galerkin.dt));
    const RomTrajectory tr = integrate_rom(rom, a0, c.test, c.fom.horizon, c.galerkin.dt, every);
    online = tr.wall_seconds;
    traj.times = tr.times;
    traj.velocity_coeffs = tr.velocity_coeffs;
    traj.pressure_coeffs = tr.pressure_coeffs;
  } else {
    const SnapshotMatrix vel = read_snapshots(require(out, artifact::kTrainVelocity, "generate"));
    const SnapshotMatrix pre = read_snapshots(require(out, artifact::kTrainPressure, "generate"));
    for (std::size_t n = 0; n < vel.times.size(); ++n)
      if (std::abs(vel.times[n] - static_cast<double>(n) * dt_s) > 1e-9 * std::max(1.0, vel.times[n]))
        throw Error(ErrorCode::LengthMismatch, "training snapshots are not uniformly sampled from t = 0");
    const Eigen::Index kv = b.velocity.n_modes(), kp = b.pressure.n_modes();
    const SnapshotMatrix hom = homogenize(vel, b.lifting);
    auto start = std::chrono::steady_clock::now();
    Eigen::MatrixXd targets(kv + kp, hom.data.cols());
    for (Eigen::Index n = 0; n < hom.data.cols(); ++n) {
      targets.col(n).head(kv) = project(hom.data.col(n), b.velocity);
      targets.col(n).tail(kp) = project(pre.data.col(n), b.pressure);
    }
    const TrainedEsn model = train_esn(c.esn, training_signal(c), targets, dt_s);
    offline = seconds_since(start);
    say(log, "esn training residual " + detail::number_text(model.readout.training_error));
    write_esn(out / artifact::kEsnModel, model);
    r.artifacts.push_back(artifact::kEsnModel);

    const EsnPrediction pr = predict(model, c.test, c.fom.horizon);
    online = pr.wall_seconds;
    traj.times = pr.times;
    traj.velocity_coeffs = pr.coeffs.topRows(kv);
    traj.pressure_coeffs = pr.coeffs.bottomRows(kp);
  }
  say(log, method + " offline " + detail::number_text(offline) + " s, online " + detail::number_text(online) + " s");
  write_trajectory(out / artifact::trajectory(method), traj);
  write_trajectory_csv(out / artifact::trajectory_csv(method), traj);
  write_timing(out, method, {{"offline", offline}, {"online", online}});
  r.artifacts.push_back(artifact::trajectory(method));
  r.artifacts.push_back(artifact::trajectory_csv(method));
  r.artifacts.push_back(artifact::timing(method));
  return r;
}

EvaluateStageResult run_evaluate(const PipelineConfig& c, const fs::path& out, std::ostream* log) {
  c.validate();
  const std::vector<std::string> methods{"galerkin", "esn"};
  for (const auto& m : methods) {
    require(out, artifact::trajectory(m), m == "galerkin" ? "rom --method galerkin" : "rom --method esn");
    require(out, artifact::timing(m), m == "galerkin" ? "rom --method galerkin" : "rom --method esn");
  }
  const Bases b = load_bases(out, nullptr);
  const TestData test = load_test(out);
  const DomainMask& d = *b.velocity.domain;
  const double tol = 1e-6 * sample_dt(c);
  fs::create_directories(out / "vtk");

  EvaluateStageResult r;
  std::vector<PhaseRecord> records;
  const json fom_t = read_json(require(out, artifact::timing("fom"), "generate"));
  records.push_back({"fom", "run", fom_t.value("run", 0.0)});

  for (const auto& m : methods) {
    const CoefficientTrajectory traj = read_trajectory(out / artifact::trajectory(m));
    const FieldSeries fields = reconstruct_full(b.velocity, b.pressure, b.lifting, traj.velocity_coeffs,
                                                traj.pressure_coeffs, inlet_series(c.test, traj.times), traj.times);
    MethodEvaluation ev;
    ev.method = m;
    ev.series = error_series(test.velocity, test.pressure, fields, c.fluid);
    ev.e_U = summarize(ev.series.times, ev.series.e_U, c.fom.horizon);
    ev.e_p = summarize(ev.series.times, ev.series.e_p, c.fom.horizon);
    ev.e_wss = summarize(ev.series.times, ev.series.e_wss, c.fom.horizon);
    {
      std::ofstream f(out / artifact::errors(m), std::ios::trunc);
      if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + artifact::errors(m));
      write_error_csv(f, ev.series);
    }
    r.artifacts.push_back(artifact::errors(m));

    for (const double t : c.output.vtk_times) {
      std::size_t col = traj.times.size();
      for (std::size_t k = 0; k < traj.times.size(); ++k)
        if (std::abs(traj.times[k] - t) <= tol) col = k;
      if (col == traj.times.size())
        throw Error(ErrorCode::InvalidArgument,
                    "output.vtk_times: " + m + " trajectory has no sample at t = " + detail::number_text(t));
      const auto cc = static_cast<Eigen::Index>(col);
      std::size_t fcol = 0;
      while (fcol < test.velocity.times.size() && std::abs(test.velocity.times[fcol] - t) > tol) ++fcol;
      if (fcol == test.velocity.times.size())
        throw Error(ErrorCode::InvalidArgument, "output.vtk_times: no FOM sample at t = " + detail::number_text(t));
      const Eigen::VectorXd u = fields.velocity.col(cc);
      const Eigen::VectorXd err = (speed(test.velocity.data.col(static_cast<Eigen::Index>(fcol))) - speed(u)).cwiseAbs();
      const std::string tag = m + "_t" + detail::number_text(t);
      const std::string title = m + " t=" + detail::number_text(t);
      export_vtk(out / "vtk" / (tag + "_velocity.vtk"), d, "velocity", u, 2, title);
      export_vtk(out / "vtk" / (tag + "_pressure.vtk"), d, "pressure", fields.pressure.col(cc), 1, title);
      export_vtk(out / "vtk" / (tag + "_speed_error.vtk"), d, "speed_error", err, 1, title);
      for (const char* f : {"_velocity.vtk", "_pressure.vtk", "_speed_error.vtk"})
        r.artifacts.push_back("vtk/" + tag + f);
    }
    const json tj = read_json(out / artifact::timing(m));
    records.push_back({m, "offline", tj.value("offline", 0.0)});
    records.push_back({m, "online", tj.value("online", 0.0)});
    say(log, m + ": max E_U " + detail::number_text(ev.e_U.max) + " %, max E_p " + detail::number_text(ev.e_p.max) +
                 " %, max E_WSS " + detail::number_text(ev.e_wss.max) + " %");
    r.methods.push_back(std::move(ev));
  }

  r.timing = build_timing_report(records, methods);
  {
    std::ofstream f(out / "timing.csv", std::ios::trunc);
    write_timing_csv(f, r.timing);
    std::ofstream t(out / "timing.txt", std::ios::trunc);
    write_timing_table(t, r.timing);
    if (!f || !t) throw Error(ErrorCode::IoFailure, "cannot write the timing report");
  }
  if (log) write_timing_table(*log, r.timing);

  {
    std::ofstream f(out / "summary.csv", std::ios::trunc);
    f << "method,quantity,max,mean,drift_ratio\n";
    for (const auto& ev : r.methods)
      for (const auto& [name, s] : {std::pair{"e_U", ev.e_U}, std::pair{"e_p", ev.e_p}, std::pair{"e_wss", ev.e_wss}})
        f << ev.method << ',' << name << ',' << detail::number_text(s.max) << ',' << detail::number_text(s.mean) << ','
          << detail::number_text(s.drift_ratio) << '\n';
    if (!f) throw Error(ErrorCode::IoFailure, "cannot write summary.csv");
  }
  r.artifacts.insert(r.artifacts.end(), {"timing.csv", "timing.txt", "summary.csv"});
  return r;
}

void write_manifest(const PipelineConfig& c, const fs::path& out, const std::string& stage, const StageResult& result) {
  const std::string cfg = config_to_json(c);
  json j;
  j["stage"] = stage;
  j["version"] = version_string();
  j["config_hash"] = hex64(fnv1a(cfg.data(), cfg.size()));
  j["config"] = json::parse(cfg);
  j["seeds"] = {{"train_signal", c.train.seed}, {"esn", c.esn.seed}};
  json arts = json::array();
  for (const auto& a : result.artifacts) arts.push_back({{"file", a}, {"fnv1a", hex64(fnv1a_file(out / a))}});
  j["artifacts"] = arts;
  write_json(out / ("manifest_" + stage + ".json"), j);
}

}  // namespace hemoreduce
