#include "ambient/io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ambient {

namespace {

// Little-endian primitive writers over a growing byte buffer. The payload is
// assembled in memory so the checksum can cover it in one pass.
struct Writer {
  std::vector<unsigned char> buf;

  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    buf.insert(buf.end(), b, b + n);
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 4);
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    u64(u);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void vec(const Eigen::VectorXd& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }
};

struct Reader {
  const unsigned char* p;
  std::size_t left;

  void need(std::size_t n) const {
    if (left < n) throw CorruptFileError("truncated payload");
  }
  void bytes(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, p, n);
    p += n;
    left -= n;
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() {
    const std::uint64_t u = u64();
    double v;
    std::memcpy(&v, &u, 8);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(p), n);
    p += n;
    left -= n;
    return s;
  }
  Eigen::VectorXd vec() {
    const std::uint64_t n = u64();
    need(n * 8);
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::uint64_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = f64();
    return v;
  }
};

void write_schedule(Writer& w, const ScheduleSpec& s) {
  w.u8(s.kind == ScheduleKind::VP ? 1 : 0);
  w.str(s.form);
  w.f64(s.T);
  w.f64(s.t_n);
  w.f64(s.guard);
  w.u32(static_cast<std::uint32_t>(s.anchors.size()));
  for (const auto& [t, sig] : s.anchors) {
    w.f64(t);
    w.f64(sig);
  }
}

ScheduleSpec read_schedule(Reader& r) {
  ScheduleSpec s;
  s.kind = r.u8() ? ScheduleKind::VP : ScheduleKind::VE;
  s.form = r.str();
  s.T = r.f64();
  s.t_n = r.f64();
  s.guard = r.f64();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    const double t = r.f64(), sig = r.f64();
    s.anchors.emplace_back(t, sig);
  }
  return s;
}

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("io: cannot open '" + path + "'");
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return data;
}

void write_file(const std::string& path, const std::vector<unsigned char>& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("io: cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("io: short write to '" + path + "'");
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

void save_dataset(const NoisyDataset& ds, const std::string& path) {
  Writer w;
  w.bytes("ATWD", 4);
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(ds.samples.cols()));
  w.u64(static_cast<std::uint64_t>(ds.samples.rows()));
  w.u64(ds.seed);
  write_schedule(w, ds.schedule);
  for (Eigen::Index i = 0; i < ds.samples.rows(); ++i)
    for (Eigen::Index j = 0; j < ds.samples.cols(); ++j) w.f64(ds.samples(i, j));
  write_file(path, w.buf);
}

NoisyDataset load_dataset(const std::string& path) {
  const auto data = read_file(path);
  Reader r{data.data(), data.size()};
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "ATWD", 4) != 0) throw CorruptFileError("bad magic (expected ATWD)");
  const std::uint32_t version = r.u32();
  if (version != 1) throw CorruptFileError("unsupported dataset version " + std::to_string(version));
  const std::uint32_t dim = r.u32();
  const std::uint64_t count = r.u64();
  NoisyDataset ds;
  ds.seed = r.u64();
  ds.schedule = read_schedule(r);
  r.need(count * dim * 8);
  ds.samples.resize(static_cast<Eigen::Index>(count), dim);
  for (std::uint64_t i = 0; i < count; ++i)
    for (std::uint32_t j = 0; j < dim; ++j)
      ds.samples(static_cast<Eigen::Index>(i), j) = r.f64();
  if (r.left != 0) throw CorruptFileError("trailing bytes after payload");
  return ds;
}

DenoiserNet Checkpoint::make_net() const {
  DenoiserNet net(dim, hidden, embed_dim, 0, activation, sigma_data);
  if (net.param_count() != params.size())
    throw CorruptFileError("checkpoint: parameter count does not match architecture");
  net.params() = params;
  return net;
}

Checkpoint Checkpoint::from_net(const DenoiserNet& net) {
  Checkpoint c;
  c.dim = net.dim();
  c.hidden = net.hidden();
  c.embed_dim = net.embed_dim();
  c.activation = net.activation();
  c.sigma_data = net.sigma_data();
  c.params = net.params();
  c.opt.m.setZero(net.param_count());
  c.opt.v.setZero(net.param_count());
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  Writer w;
  w.bytes("ATWC", 4);
  w.u32(c.version);
  w.u32(static_cast<std::uint32_t>(c.dim));
  w.u32(static_cast<std::uint32_t>(c.hidden.size()));
  for (int h : c.hidden) w.u32(static_cast<std::uint32_t>(h));
  w.u32(static_cast<std::uint32_t>(c.embed_dim));
  w.u8(c.activation == Activation::Relu ? 1 : 0);
  w.f64(c.sigma_data);
  w.vec(c.params);
  w.vec(c.opt.m);
  w.vec(c.opt.v);
  w.i64(c.opt.step);
  w.u64(c.rng_seed);
  w.i64(c.step);
  w.str(c.config_echo);
  const std::uint64_t sum = fnv1a64(w.buf.data(), w.buf.size());
  w.u64(sum);
  write_file(path, w.buf);
}

Checkpoint load_checkpoint(const std::string& path) {
  const auto data = read_file(path);
  if (data.size() < 8) throw CorruptFileError("truncated payload");
  const std::uint64_t stored = [&] {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(data[data.size() - 8 + i]) << (8 * i);
    return v;
  }();
  if (fnv1a64(data.data(), data.size() - 8) != stored)
    throw CorruptFileError("checksum mismatch");
  Reader r{data.data(), data.size() - 8};
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "ATWC", 4) != 0) throw CorruptFileError("bad magic (expected ATWC)");
  Checkpoint c;
  c.version = r.u32();
  if (c.version != 1)
    throw CorruptFileError("unsupported checkpoint version " + std::to_string(c.version));
  c.dim = static_cast<int>(r.u32());
  const std::uint32_t nh = r.u32();
  for (std::uint32_t i = 0; i < nh; ++i) c.hidden.push_back(static_cast<int>(r.u32()));
  c.embed_dim = static_cast<int>(r.u32());
  c.activation = r.u8() ? Activation::Relu : Activation::Silu;
  c.sigma_data = r.f64();
  c.params = r.vec();
  c.opt.m = r.vec();
  c.opt.v = r.vec();
  c.opt.step = r.i64();
  c.rng_seed = r.u64();
  c.step = r.i64();
  c.config_echo = r.str();
  if (r.left != 0) throw CorruptFileError("trailing bytes after payload");
  return c;
}

}  // namespace ambient
