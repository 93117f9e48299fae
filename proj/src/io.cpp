#include "hemoreduce/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_map>

#include "hemoreduce/error.hpp"
#include "number_text.hpp"

namespace hemoreduce {

namespace {

constexpr std::size_t kMagicSize = 8;

class ByteWriter {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(const double* p, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      bytes(p, n * sizeof(double));
    } else {
      for (std::size_t k = 0; k < n; ++k) f64(p[k]);
    }
  }
  const std::vector<std::uint8_t>& data() const noexcept { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(std::vector<std::uint8_t> buf, std::string source) : buf_(std::move(buf)), source_(std::move(source)) {}

  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n)
      throw Error(ErrorCode::TruncatedPayload, source_ + ": truncated at byte offset " + std::to_string(pos_) +
                                                   " (need " + std::to_string(n) + " bytes, " +
                                                   std::to_string(buf_.size() - pos_) + " left)");
  }
  std::uint8_t u8() {
    need(1);
    return buf_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(buf_[pos_++]) << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(buf_[pos_++]) << (8 * k);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  void f64s(double* p, std::size_t n) {
    if (n > (buf_.size() - pos_) / sizeof(double)) need(n * sizeof(double));
    if constexpr (std::endian::native == std::endian::little) {
      if (n > 0) std::memcpy(p, buf_.data() + pos_, n * sizeof(double));
      pos_ += n * sizeof(double);
    } else {
      for (std::size_t k = 0; k < n; ++k) p[k] = f64();
    }
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  /// Element count for a payload of `n` items of `size` bytes, checked against the remaining bytes.
  std::size_t count(std::uint64_t n, std::size_t size) const {
    if (n > (buf_.size() - pos_) / size) {
      throw Error(ErrorCode::TruncatedPayload, source_ + ": truncated at byte offset " + std::to_string(pos_) +
                                                   " (payload of " + std::to_string(n) + " items exceeds the " +
                                                   std::to_string(buf_.size() - pos_) + " bytes left)");
    }
    return static_cast<std::size_t>(n);
  }
  std::size_t offset() const noexcept { return pos_; }
  bool at_end() const noexcept { return pos_ == buf_.size(); }
  const std::string& source() const noexcept { return source_; }

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
  std::string source_;
};

void write_file(const Path& path, const ByteWriter& w) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  const auto& d = w.data();
  out.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

ByteReader open_file(const Path& path, const char* magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteReader r(std::move(buf), path.string());
  r.need(kMagicSize);
  const std::string got = r.str(kMagicSize);
  if (got != magic) {
    // Same family with a different revision suffix.
    const std::string want(magic);
    const std::size_t stem = want.find_first_of("0123456789");
    if (stem != std::string::npos && got.compare(0, stem, want, 0, stem) == 0)
      throw Error(ErrorCode::VersionMismatch,
                  path.string() + ": format revision '" + got + "', expected '" + want + "'");
    throw Error(ErrorCode::BadMagic, path.string() + ": not a " + want + " file");
  }
  return r;
}

void write_geometry(ByteWriter& w, const DomainMask& d) {
  w.u64(static_cast<std::uint64_t>(d.nx()));
  w.u64(static_cast<std::uint64_t>(d.ny()));
  w.f64(d.h());
  w.f64(d.x0());
  w.f64(d.y0());
  const auto kinds = d.kinds();
  std::vector<std::pair<std::uint8_t, std::uint64_t>> runs;
  for (const CellKind k : kinds) {
    const auto v = static_cast<std::uint8_t>(k);
    if (!runs.empty() && runs.back().first == v) ++runs.back().second;
    else runs.emplace_back(v, 1);
  }
  w.u64(runs.size());
  for (const auto& [kind, len] : runs) {
    w.u8(kind);
    w.u64(len);
  }
}

std::shared_ptr<const DomainMask> read_geometry(ByteReader& r) {
  const std::uint64_t nx = r.u64(), ny = r.u64();
  const double h = r.f64(), x0 = r.f64(), y0 = r.f64();
  if (nx == 0 || ny == 0 || nx > (1u << 20) || ny > (1u << 20))
    throw Error(ErrorCode::InvalidArgument, r.source() + ": implausible grid size");
  const std::size_t runs = r.count(r.u64(), 9);
  std::vector<CellKind> kinds;
  kinds.reserve(static_cast<std::size_t>(nx * ny));
  for (std::size_t k = 0; k < runs; ++k) {
    const std::uint8_t kind = r.u8();
    const std::uint64_t len = r.u64();
    if (kind > 3 || len > nx * ny - kinds.size())
      throw Error(ErrorCode::InvalidArgument, r.source() + ": corrupt cell-kind run at byte " +
                                                  std::to_string(r.offset()));
    kinds.insert(kinds.end(), static_cast<std::size_t>(len), static_cast<CellKind>(kind));
  }
  if (kinds.size() != nx * ny)
    throw Error(ErrorCode::InvalidArgument, r.source() + ": cell-kind runs do not cover the grid");
  return std::make_shared<const DomainMask>(static_cast<int>(nx), static_cast<int>(ny), h, x0, y0, std::move(kinds));
}

// Named-array archive.

struct Entry {
  std::uint8_t type = 0;  // 0 f64, 1 i64
  std::uint64_t rows = 0, cols = 0;
  std::vector<double> f;
  std::vector<std::int64_t> i;
};

class ArchiveWriter {
 public:
  void matrix(const std::string& name, const Eigen::MatrixXd& m) {
    Entry e;
    e.rows = static_cast<std::uint64_t>(m.rows());
    e.cols = static_cast<std::uint64_t>(m.cols());
    e.f.assign(m.data(), m.data() + m.size());
    add(name, std::move(e));
  }
  void vector(const std::string& name, const Eigen::VectorXd& v) { matrix(name, v); }
  void doubles(const std::string& name, const std::vector<double>& v) {
    Entry e;
    e.rows = v.size();
    e.cols = 1;
    e.f = v;
    add(name, std::move(e));
  }
  void scalar(const std::string& name, double v) { doubles(name, {v}); }
  void integers(const std::string& name, std::vector<std::int64_t> v, std::uint64_t cols = 1) {
    Entry e;
    e.type = 1;
    e.cols = cols;
    e.rows = cols ? v.size() / cols : 0;
    e.i = std::move(v);
    add(name, std::move(e));
  }
  void integer(const std::string& name, std::int64_t v) { integers(name, {v}); }
  void text(const std::string& name, const std::string& s) {
    std::vector<std::int64_t> v(s.begin(), s.end());
    integers(name, std::move(v));
  }
  void geometry(const DomainMask& d) {
    const auto g = encode_geometry(d);
    text("geometry", std::string(g.begin(), g.end()));
  }

  void save(const Path& path, const char* magic) const {
    ByteWriter w;
    w.bytes(magic, kMagicSize);
    w.u64(entries_.size());
    for (const auto& [name, e] : entries_) {
      w.u32(static_cast<std::uint32_t>(name.size()));
      w.bytes(name.data(), name.size());
      w.u8(e.type);
      w.u64(e.rows);
      w.u64(e.cols);
      if (e.type == 0) w.f64s(e.f.data(), e.f.size());
      else
        for (const auto v : e.i) w.i64(v);
    }
    write_file(path, w);
  }

 private:
  void add(const std::string& name, Entry e) { entries_.emplace_back(name, std::move(e)); }
  std::vector<std::pair<std::string, Entry>> entries_;
};

class ArchiveReader {
 public:
  ArchiveReader(const Path& path, const char* magic) : source_(path.string()) {
    ByteReader r = open_file(path, magic);
    const std::size_t n = r.count(r.u64(), 21);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t len = r.count(r.u32(), 1);
      std::string name = r.str(len);
      Entry e;
      e.type = r.u8();
      e.rows = r.u64();
      e.cols = r.u64();
      if (e.type > 1) throw Error(ErrorCode::InvalidArgument, source_ + ": unknown entry type for " + name);
      if (e.cols != 0 && e.rows > UINT64_MAX / e.cols) r.count(UINT64_MAX, 8);
      const std::size_t items = r.count(e.rows * e.cols, 8);
      if (e.type == 0) {
        e.f.resize(items);
        r.f64s(e.f.data(), items);
      } else {
        e.i.resize(items);
        for (auto& v : e.i) v = r.i64();
      }
      entries_.emplace(std::move(name), std::move(e));
    }
    if (!r.at_end())
      throw Error(ErrorCode::InvalidArgument, source_ + ": trailing bytes at offset " + std::to_string(r.offset()));
  }

  const Entry& get(const std::string& name, std::uint8_t type) const {
    const auto it = entries_.find(name);
    if (it == entries_.end()) throw Error(ErrorCode::TruncatedPayload, source_ + ": missing entry '" + name + "'");
    if (it->second.type != type) throw Error(ErrorCode::InvalidArgument, source_ + ": entry '" + name + "' has the wrong type");
    return it->second;
  }
  bool has(const std::string& name) const { return entries_.count(name) > 0; }
  Eigen::MatrixXd matrix(const std::string& name) const {
    const Entry& e = get(name, 0);
    return Eigen::Map<const Eigen::MatrixXd>(e.f.data(), static_cast<Eigen::Index>(e.rows),
                                             static_cast<Eigen::Index>(e.cols));
  }
  Eigen::VectorXd vector(const std::string& name) const {
    const Entry& e = get(name, 0);
    return Eigen::Map<const Eigen::VectorXd>(e.f.data(), static_cast<Eigen::Index>(e.f.size()));
  }
  std::vector<double> doubles(const std::string& name) const { return get(name, 0).f; }
  double scalar(const std::string& name) const {
    const Entry& e = get(name, 0);
    if (e.f.size() != 1) throw Error(ErrorCode::InvalidArgument, source_ + ": entry '" + name + "' is not a scalar");
    return e.f[0];
  }
  const std::vector<std::int64_t>& integers(const std::string& name) const { return get(name, 1).i; }
  std::int64_t integer(const std::string& name) const {
    const auto& v = integers(name);
    if (v.size() != 1) throw Error(ErrorCode::InvalidArgument, source_ + ": entry '" + name + "' is not a scalar");
    return v[0];
  }
  std::string text(const std::string& name) const {
    const auto& v = integers(name);
    std::string s;
    s.reserve(v.size());
    for (const auto c : v) s.push_back(static_cast<char>(c));
    return s;
  }
  std::shared_ptr<const DomainMask> geometry(std::shared_ptr<const DomainMask> hint) const {
    const std::string g = text("geometry");
    std::vector<std::uint8_t> bytes(g.begin(), g.end());
    if (hint) {
      if (encode_geometry(*hint) != bytes)
        throw Error(ErrorCode::BasisMismatch, source_ + ": geometry differs from the supplied domain");
      return hint;
    }
    ByteReader r(std::move(bytes), source_ + " (geometry)");
    return read_geometry(r);
  }
  const std::string& source() const noexcept { return source_; }

 private:
  std::string source_;
  std::unordered_map<std::string, Entry> entries_;
};

FieldKind field_kind(std::int64_t v, const std::string& source) {
  if (v != 0 && v != 1) throw Error(ErrorCode::InvalidArgument, source + ": unknown field kind");
  return static_cast<FieldKind>(v);
}

}  // namespace

std::vector<std::uint8_t> encode_geometry(const DomainMask& domain) {
  ByteWriter w;
  write_geometry(w, domain);
  return w.data();
}

bool same_geometry(const DomainMask& a, const DomainMask& b) { return encode_geometry(a) == encode_geometry(b); }

void write_snapshots(const Path& path, const SnapshotMatrix& s) {
  s.validate();
  ByteWriter w;
  w.bytes("HRSNAP01", kMagicSize);
  write_geometry(w, *s.domain);
  w.u8(static_cast<std::uint8_t>(s.kind));
  const bool inlet = !s.inlet_values.empty();
  w.u8(static_cast<std::uint8_t>((s.homogenized ? 1 : 0) | (inlet ? 2 : 0)));
  w.u64(s.n_snapshots());
  w.u64(s.record_size());
  w.f64(s.dt_sample);
  w.f64s(s.times.data(), s.times.size());
  if (inlet) w.f64s(s.inlet_values.data(), s.inlet_values.size());
  w.f64s(s.data.data(), static_cast<std::size_t>(s.data.size()));
  write_file(path, w);
}

SnapshotMatrix read_snapshots(const Path& path) {
  ByteReader r = open_file(path, "HRSNAP01");
  SnapshotMatrix s;
  s.domain = read_geometry(r);
  s.kind = field_kind(r.u8(), r.source());
  const std::uint8_t flags = r.u8();
  s.homogenized = (flags & 1) != 0;
  const std::uint64_t ns = r.u64(), rs = r.u64();
  s.dt_sample = r.f64();
  if (rs != static_cast<std::uint64_t>(components(s.kind)) * s.domain->n_fluid())
    throw Error(ErrorCode::LengthMismatch, r.source() + ": record size does not match the geometry");
  s.times.resize(r.count(ns, 8));
  r.f64s(s.times.data(), s.times.size());
  if (flags & 2) {
    s.inlet_values.resize(r.count(ns, 8));
    r.f64s(s.inlet_values.data(), s.inlet_values.size());
  }
  if (rs != 0 && ns > UINT64_MAX / rs) r.count(UINT64_MAX, 8);
  r.count(ns * rs, 8);
  s.data.resize(static_cast<Eigen::Index>(rs), static_cast<Eigen::Index>(ns));
  r.f64s(s.data.data(), static_cast<std::size_t>(s.data.size()));
  if (!r.at_end())
    throw Error(ErrorCode::InvalidArgument, r.source() + ": trailing bytes at offset " + std::to_string(r.offset()));
  s.validate();
  return s;
}

void write_basis(const Path& path, const PodBasis& b) {
  if (!b.domain) throw Error(ErrorCode::InvalidArgument, "write_basis: basis without a domain");
  ArchiveWriter a;
  a.geometry(*b.domain);
  a.integer("kind", static_cast<std::int64_t>(b.kind));
  a.integer("homogenized", b.homogenized ? 1 : 0);
  a.matrix("modes", b.modes);
  a.vector("eigenvalues", b.eigenvalues);
  a.vector("energy_fraction", b.energy_fraction);
  a.matrix("coeff_train", b.coeff_train);
  a.doubles("times", b.times);
  a.save(path, "HRBASE01");
}

PodBasis read_basis(const Path& path, std::shared_ptr<const DomainMask> domain) {
  ArchiveReader a(path, "HRBASE01");
  PodBasis b;
  b.domain = a.geometry(std::move(domain));
  b.kind = field_kind(a.integer("kind"), a.source());
  b.homogenized = a.integer("homogenized") != 0;
  b.modes = a.matrix("modes");
  b.eigenvalues = a.vector("eigenvalues");
  b.energy_fraction = a.vector("energy_fraction");
  b.coeff_train = a.matrix("coeff_train");
  b.times = a.doubles("times");
  if (b.modes.rows() != static_cast<Eigen::Index>(components(b.kind) * b.domain->n_fluid()))
    throw Error(ErrorCode::BasisMismatch, a.source() + ": mode length does not match the geometry");
  return b;
}

void write_lifting(const Path& path, const LiftingField& l) {
  ArchiveWriter a;
  a.vector("zeta", l.zeta);
  a.doubles("faces_u", l.faces.u);
  a.doubles("faces_v", l.faces.v);
  a.doubles("faces_p", l.faces.p);
  a.scalar("faces_t", l.faces.t);
  a.scalar("inlet_trace", l.inlet_trace);
  a.save(path, "HRLIFT01");
}

LiftingField read_lifting(const Path& path, std::shared_ptr<const DomainMask> domain) {
  ArchiveReader a(path, "HRLIFT01");
  LiftingField l;
  l.zeta = a.vector("zeta");
  l.faces.u = a.doubles("faces_u");
  l.faces.v = a.doubles("faces_v");
  l.faces.p = a.doubles("faces_p");
  l.faces.t = a.scalar("faces_t");
  l.inlet_trace = a.scalar("inlet_trace");
  if (domain) {
    const auto& d = *domain;
    if (l.zeta.size() != static_cast<Eigen::Index>(2 * d.n_fluid()) ||
        l.faces.u.size() != static_cast<std::size_t>((d.nx() + 1) * d.ny()) ||
        l.faces.v.size() != static_cast<std::size_t>(d.nx() * (d.ny() + 1)))
      throw Error(ErrorCode::BasisMismatch, a.source() + ": lifting does not match the domain");
  }
  return l;
}

void write_operators(const Path& path, const ReducedOperators& ops) {
  ops.validate();
  ArchiveWriter a;
  a.scalar("nu", ops.nu);
  a.scalar("rho", ops.rho);
  a.matrix("mass", ops.mass);
  a.matrix("diffusion", ops.diffusion);
  for (std::size_t i = 0; i < ops.convection.size(); ++i) a.matrix("convection/" + std::to_string(i), ops.convection[i]);
  a.matrix("pressure_gradient", ops.pressure_gradient);
  a.matrix("pressure_mass", ops.pressure_mass);
  for (std::size_t i = 0; i < ops.pressure_convection.size(); ++i)
    a.matrix("pressure_convection/" + std::to_string(i), ops.pressure_convection[i]);
  a.matrix("pressure_diffusion", ops.pressure_diffusion);
  a.vector("inlet_rate", ops.inlet_rate);
  a.save(path, "HROPS001");
}

ReducedOperators read_operators(const Path& path) {
  ArchiveReader a(path, "HROPS001");
  ReducedOperators ops;
  ops.nu = a.scalar("nu");
  ops.rho = a.scalar("rho");
  ops.mass = a.matrix("mass");
  ops.diffusion = a.matrix("diffusion");
  for (Eigen::Index i = 0; i < ops.mass.rows(); ++i) ops.convection.push_back(a.matrix("convection/" + std::to_string(i)));
  ops.pressure_gradient = a.matrix("pressure_gradient");
  ops.pressure_mass = a.matrix("pressure_mass");
  for (Eigen::Index i = 0; i < ops.pressure_mass.rows(); ++i)
    ops.pressure_convection.push_back(a.matrix("pressure_convection/" + std::to_string(i)));
  ops.pressure_diffusion = a.matrix("pressure_diffusion");
  ops.inlet_rate = a.vector("inlet_rate");
  ops.validate();
  return ops;
}

void write_esn(const Path& path, const TrainedEsn& m) {
  const EsnConfig& c = m.config;
  ArchiveWriter a;
  a.integer("n_reservoir", c.n_reservoir);
  a.scalar("density", c.density);
  a.scalar("spectral_radius_target", c.spectral_radius);
  a.scalar("input_scaling", c.input_scaling);
  a.scalar("bias_scaling", c.bias_scaling);
  a.scalar("gain", c.gain);
  a.scalar("leak_rate", c.leak_rate);
  a.scalar("ridge_lambda", c.ridge_lambda);
  a.integer("seed", static_cast<std::int64_t>(c.seed));
  a.scalar("washout", c.washout);
  a.scalar("step_dt", c.step_dt);

  const Reservoir& r = m.reservoir;
  a.matrix("w_in", r.w_in);
  std::vector<std::int64_t> rows, cols;
  std::vector<double> val;
  for (Eigen::Index row = 0; row < r.w.outerSize(); ++row)
    for (decltype(r.w)::InnerIterator it(r.w, row); it; ++it) {
      rows.push_back(it.row());
      cols.push_back(it.col());
      val.push_back(it.value());
    }
  rows.insert(rows.end(), cols.begin(), cols.end());
  a.integers("w_index", std::move(rows), 2);
  a.doubles("w_value", val);
  a.vector("bias", r.bias);
  a.vector("state", r.state);
  a.scalar("spectral_radius", r.spectral_radius);
  a.integer("zero_matrix", r.zero_matrix ? 1 : 0);
  a.matrix("w_out", m.readout.w_out);
  a.vector("b_out", m.readout.b_out);
  a.scalar("training_error", m.readout.training_error);
  a.scalar("sample_dt", m.sample_dt);
  a.save(path, "HRESN001");
}

TrainedEsn read_esn(const Path& path) {
  ArchiveReader a(path, "HRESN001");
  TrainedEsn m;
  EsnConfig& c = m.config;
  c.n_reservoir = static_cast<int>(a.integer("n_reservoir"));
  c.density = a.scalar("density");
  c.spectral_radius = a.scalar("spectral_radius_target");
  c.input_scaling = a.scalar("input_scaling");
  c.bias_scaling = a.scalar("bias_scaling");
  c.gain = a.scalar("gain");
  c.leak_rate = a.scalar("leak_rate");
  c.ridge_lambda = a.scalar("ridge_lambda");
  c.seed = static_cast<std::uint64_t>(a.integer("seed"));
  c.washout = a.scalar("washout");
  c.step_dt = a.scalar("step_dt");
  c.validate();

  Reservoir& r = m.reservoir;
  r.w_in = a.matrix("w_in");
  r.bias = a.vector("bias");
  r.state = a.vector("state");
  const Eigen::Index n = c.n_reservoir;
  if (r.w_in.rows() != n || r.bias.size() != n || r.state.size() != n)
    throw Error(ErrorCode::LengthMismatch, a.source() + ": reservoir arrays do not match n_reservoir");
  const auto& idx = a.integers("w_index");
  const auto val = a.doubles("w_value");
  if (idx.size() != 2 * val.size()) throw Error(ErrorCode::LengthMismatch, a.source() + ": bad recurrent weights");
  std::vector<Eigen::Triplet<double>> trip;
  // nnz x 2, column-major: row indices, then column indices.
  for (std::size_t k = 0; k < val.size(); ++k) {
    const auto i = idx[k], j = idx[val.size() + k];
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw Error(ErrorCode::InvalidArgument, a.source() + ": recurrent weight index out of range");
    trip.emplace_back(static_cast<int>(i), static_cast<int>(j), val[k]);
  }
  r.w.resize(n, n);
  r.w.setFromTriplets(trip.begin(), trip.end());
  r.spectral_radius = a.scalar("spectral_radius");
  r.zero_matrix = a.integer("zero_matrix") != 0;
  m.readout.w_out = a.matrix("w_out");
  m.readout.b_out = a.vector("b_out");
  m.readout.training_error = a.scalar("training_error");
  if (m.readout.w_out.cols() != n || m.readout.b_out.size() != m.readout.w_out.rows())
    throw Error(ErrorCode::LengthMismatch, a.source() + ": readout does not match the reservoir");
  m.sample_dt = a.scalar("sample_dt");
  return m;
}

void write_trajectory(const Path& path, const CoefficientTrajectory& t) {
  if (t.velocity_coeffs.cols() != static_cast<Eigen::Index>(t.times.size()) ||
      t.pressure_coeffs.cols() != static_cast<Eigen::Index>(t.times.size()))
    throw Error(ErrorCode::LengthMismatch, "write_trajectory: coefficient columns do not match the times");
  ArchiveWriter a;
  a.text("method", t.method);
  a.doubles("times", t.times);
  a.matrix("velocity_coeffs", t.velocity_coeffs);
  a.matrix("pressure_coeffs", t.pressure_coeffs);
  a.save(path, "HRTRAJ01");
}

CoefficientTrajectory read_trajectory(const Path& path) {
  ArchiveReader a(path, "HRTRAJ01");
  CoefficientTrajectory t;
  t.method = a.text("method");
  t.times = a.doubles("times");
  t.velocity_coeffs = a.matrix("velocity_coeffs");
  t.pressure_coeffs = a.matrix("pressure_coeffs");
  if (t.velocity_coeffs.cols() != static_cast<Eigen::Index>(t.times.size()) ||
      t.pressure_coeffs.cols() != static_cast<Eigen::Index>(t.times.size()))
    throw Error(ErrorCode::LengthMismatch, a.source() + ": coefficient columns do not match the times");
  return t;
}

void export_vtk(const Path& path, const DomainMask& d, const std::string& name,
                const Eigen::Ref<const Eigen::VectorXd>& values, int components, const std::string& title) {
  const auto n = static_cast<Eigen::Index>(d.n_fluid());
  if (components != 1 && components != 2) throw Error(ErrorCode::InvalidArgument, "export_vtk: 1 or 2 components");
  if (values.size() != components * n) throw Error(ErrorCode::LengthMismatch, "export_vtk: field length");
  if (name.empty() || name.find_first_of(" \t\n") != std::string::npos)
    throw Error(ErrorCode::InvalidArgument, "export_vtk: field name must be a single token");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  auto num = [](double x) { return detail::number_text(x == 0.0 ? 0.0 : x); };
  out << "# vtk DataFile Version 3.0\n";
  out << (title.empty() ? std::string("hemoreduce") : title.substr(0, title.find('\n'))) << '\n';
  out << "ASCII\nDATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << d.nx() + 1 << ' ' << d.ny() + 1 << " 1\n";
  out << "ORIGIN " << num(d.x0()) << ' ' << num(d.y0()) << " 0\n";
  out << "SPACING " << num(d.h()) << ' ' << num(d.h()) << " 1\n";
  out << "CELL_DATA " << d.nx() * d.ny() << '\n';
  if (components == 1) out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  else out << "VECTORS " << name << " double\n";
  const std::string blank = num(kVtkBlank);
  for (int j = 0; j < d.ny(); ++j)
    for (int i = 0; i < d.nx(); ++i) {
      const int k = d.fluid_id(i, j);
      if (components == 1) {
        out << (k < 0 ? blank : num(values[k])) << '\n';
      } else if (k < 0) {
        out << blank << ' ' << blank << ' ' << blank << '\n';
      } else {
        out << num(values[k]) << ' ' << num(values[n + k]) << " 0\n";
      }
    }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

VtkField read_vtk(const Path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  auto fail = [&](const std::string& what) -> void {
    throw Error(ErrorCode::IoFailure, path.string() + ": " + what);
  };
  std::string line;
  std::getline(in, line);
  if (line != "# vtk DataFile Version 3.0") fail("not a legacy VTK 3.0 file");
  VtkField f;
  std::getline(in, f.title);
  std::getline(in, line);
  if (line != "ASCII") fail("only ASCII files are supported");
  std::getline(in, line);
  if (line != "DATASET STRUCTURED_POINTS") fail("expected STRUCTURED_POINTS");
  std::string key;
  int nz = 0;
  long cells = 0;
  double oz = 0.0, hy = 0.0, hz = 0.0;
  in >> key >> f.nx >> f.ny >> nz;
  if (key != "DIMENSIONS") fail("expected DIMENSIONS");
  in >> key >> f.x0 >> f.y0 >> oz;
  if (key != "ORIGIN") fail("expected ORIGIN");
  in >> key >> f.h >> hy >> hz;
  if (key != "SPACING") fail("expected SPACING");
  in >> key >> cells;
  if (key != "CELL_DATA") fail("expected CELL_DATA");
  f.nx -= 1;
  f.ny -= 1;
  if (f.nx <= 0 || f.ny <= 0 || cells != static_cast<long>(f.nx) * f.ny) fail("inconsistent dimensions");
  std::string type;
  in >> key >> f.name >> type;
  if (key == "SCALARS") {
    int nc = 0;
    in >> nc >> key >> line;
    if (nc != 1 || key != "LOOKUP_TABLE") fail("unsupported SCALARS block");
    f.components = 1;
  } else if (key == "VECTORS") {
    f.components = 2;
  } else {
    fail("expected SCALARS or VECTORS");
  }
  f.values.resize(cells, f.components);
  for (long c = 0; c < cells; ++c) {
    const int nread = f.components == 1 ? 1 : 3;
    for (int k = 0; k < nread; ++k) {
      std::string tok;
      if (!(in >> tok)) fail("data section ends after " + std::to_string(c) + " cells");
      double v = 0.0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) fail("bad number '" + tok + "'");
      if (k < f.components) f.values(c, k) = v;
    }
  }
  return f;
}

namespace {

std::ofstream open_csv(const Path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  return f;
}

void close_csv(std::ofstream& f, const Path& path) {
  f.close();
  if (!f) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

}  // namespace

void write_basis_spectrum_csv(const Path& path, const PodBasis& basis) {
  std::ofstream f = open_csv(path);
  f << "k,eigenvalue,energy_fraction\n";
  for (Eigen::Index k = 0; k < basis.eigenvalues.size(); ++k)
    f << k + 1 << ',' << detail::number_text(basis.eigenvalues[k]) << ','
      << detail::number_text(basis.energy_fraction[k]) << '\n';
  close_csv(f, path);
}

void write_basis_coefficients_csv(const Path& path, const PodBasis& basis) {
  std::ofstream f = open_csv(path);
  f << 't';
  for (Eigen::Index i = 0; i < basis.coeff_train.rows(); ++i) f << ",c" << i + 1;
  f << '\n';
  for (Eigen::Index n = 0; n < basis.coeff_train.cols(); ++n) {
    f << detail::number_text(basis.times[static_cast<std::size_t>(n)]);
    for (Eigen::Index i = 0; i < basis.coeff_train.rows(); ++i) f << ',' << detail::number_text(basis.coeff_train(i, n));
    f << '\n';
  }
  close_csv(f, path);
}

void write_trajectory_csv(const Path& path, const CoefficientTrajectory& t) {
  const Eigen::Index n = static_cast<Eigen::Index>(t.times.size());
  if (t.velocity_coeffs.cols() != n || t.pressure_coeffs.cols() != n)
    throw Error(ErrorCode::LengthMismatch, "trajectory: coefficient columns differ from the time count");
  std::ofstream f = open_csv(path);
  f << 't';
  for (Eigen::Index i = 0; i < t.velocity_coeffs.rows(); ++i) f << ",a" << i + 1;
  for (Eigen::Index i = 0; i < t.pressure_coeffs.rows(); ++i) f << ",b" << i + 1;
  f << '\n';
  for (Eigen::Index k = 0; k < n; ++k) {
    f << detail::number_text(t.times[static_cast<std::size_t>(k)]);
    for (Eigen::Index i = 0; i < t.velocity_coeffs.rows(); ++i) f << ',' << detail::number_text(t.velocity_coeffs(i, k));
    for (Eigen::Index i = 0; i < t.pressure_coeffs.rows(); ++i) f << ',' << detail::number_text(t.pressure_coeffs(i, k));
    f << '\n';
  }
  close_csv(f, path);
}

}  // namespace hemoreduce
