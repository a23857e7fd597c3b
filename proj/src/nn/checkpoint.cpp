#include "walkprior/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace wp::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

class Writer {
 public:
  template <class T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void put_bytes(std::string_view s) { out_.append(s.data(), s.size()); }
  void put_doubles(std::span<const double> v) {
    out_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string_view get_bytes(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Vec get_doubles(std::size_t n) {
    need(n * sizeof(double));
    Vec v(n);
    std::memcpy(v.data(), in_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }
  bool done() const { return pos_ == in_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw Error("checkpoint: truncated data");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

void Checkpoint::add(Kind kind, const std::string& name, std::string payload) {
  if (has(name)) throw Error("checkpoint: duplicate section '" + name + "'");
  sections_.push_back({kind, name, std::move(payload)});
}

void Checkpoint::add_mlp(const std::string& name, const MlpNet& net) {
  Writer w;
  w.put<std::uint8_t>(static_cast<std::uint8_t>(net.activation()));
  w.put<std::uint8_t>(net.activate_output() ? 1 : 0);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(net.layer_sizes().size()));
  for (int s : net.layer_sizes()) w.put<std::uint32_t>(static_cast<std::uint32_t>(s));
  w.put_doubles(net.parameters());
  add(Kind::Mlp, name, w.take());
}

void Checkpoint::add_vector(const std::string& name, const Vec& values) {
  Writer w;
  w.put<std::uint64_t>(values.size());
  w.put_doubles(values);
  add(Kind::Vector, name, w.take());
}

void Checkpoint::add_adam(const std::string& name, const Adam& opt) {
  Writer w;
  w.put<std::uint64_t>(opt.step_count());
  w.put<double>(opt.config().learning_rate);
  w.put<double>(opt.config().beta1);
  w.put<double>(opt.config().beta2);
  w.put<double>(opt.config().eps);
  const auto& m = opt.first_moments();
  const auto& v = opt.second_moments();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i) {
    w.put<std::uint64_t>(m[i].size());
    w.put_doubles(m[i]);
    w.put_doubles(v[i]);
  }
  add(Kind::Adam, name, w.take());
}

void Checkpoint::add_normalizer(const std::string& name, const RunningNormalizer& norm) {
  Writer w;
  w.put<std::uint32_t>(static_cast<std::uint32_t>(norm.dim()));
  w.put<double>(norm.clip());
  w.put<double>(norm.count());
  w.put_doubles(norm.mean());
  w.put_doubles(norm.var());
  add(Kind::Normalizer, name, w.take());
}

void Checkpoint::add_text(const std::string& name, const std::string& text) {
  add(Kind::Text, name, text);
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& s : sections_)
    if (s.name == name) return true;
  return false;
}

std::vector<std::string> Checkpoint::section_names() const {
  std::vector<std::string> names;
  for (const auto& s : sections_) names.push_back(s.name);
  return names;
}

const Checkpoint::Section& Checkpoint::find(const std::string& name, Kind kind) const {
  for (const auto& s : sections_) {
    if (s.name != name) continue;
    if (s.kind != kind) throw Error("checkpoint: section '" + name + "' has unexpected kind");
    return s;
  }
  throw Error("checkpoint: missing section '" + name + "'");
}

MlpNet Checkpoint::mlp(const std::string& name) const {
  Reader r(find(name, Kind::Mlp).payload);
  const auto act = static_cast<Activation>(r.get<std::uint8_t>());
  const bool act_out = r.get<std::uint8_t>() != 0;
  const auto n = r.get<std::uint32_t>();
  std::vector<int> sizes(n);
  for (auto& s : sizes) s = static_cast<int>(r.get<std::uint32_t>());
  MlpNet net(sizes, act, act_out);
  const Vec p = r.get_doubles(net.num_parameters());
  std::copy(p.begin(), p.end(), net.parameters().begin());
  if (!r.done()) throw Error("checkpoint: trailing bytes in section '" + name + "'");
  return net;
}

Vec Checkpoint::vector(const std::string& name) const {
  Reader r(find(name, Kind::Vector).payload);
  const auto n = r.get<std::uint64_t>();
  return r.get_doubles(n);
}

void Checkpoint::restore_adam(const std::string& name, Adam& opt) const {
  Reader r(find(name, Kind::Adam).payload);
  const auto steps = r.get<std::uint64_t>();
  AdamConfig cfg;
  cfg.learning_rate = r.get<double>();
  cfg.beta1 = r.get<double>();
  cfg.beta2 = r.get<double>();
  cfg.eps = r.get<double>();
  const auto blocks = r.get<std::uint32_t>();
  std::vector<Vec> m, v;
  for (std::uint32_t i = 0; i < blocks; ++i) {
    const auto n = r.get<std::uint64_t>();
    m.push_back(r.get_doubles(n));
    v.push_back(r.get_doubles(n));
  }
  opt = Adam(cfg);
  opt.restore(steps, cfg.learning_rate, std::move(m), std::move(v));
}

RunningNormalizer Checkpoint::normalizer(const std::string& name) const {
  Reader r(find(name, Kind::Normalizer).payload);
  const auto dim = r.get<std::uint32_t>();
  const double clip = r.get<double>();
  const double count = r.get<double>();
  Vec mean = r.get_doubles(dim);
  Vec var = r.get_doubles(dim);
  RunningNormalizer norm;
  norm.restore(std::move(mean), std::move(var), count, clip);
  return norm;
}

std::string Checkpoint::text(const std::string& name) const {
  return find(name, Kind::Text).payload;
}

std::string Checkpoint::serialize() const {
  Writer w;
  w.put_bytes(magic_);
  w.put<char>('\0');
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint64_t>(config_hash);
  w.put<std::uint64_t>(seed);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(sections_.size()));
  for (const auto& s : sections_) {
    w.put<std::uint8_t>(static_cast<std::uint8_t>(s.kind));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.name.size()));
    w.put_bytes(s.name);
    w.put<std::uint64_t>(s.payload.size());
    w.put_bytes(s.payload);
  }
  return w.take();
}

Checkpoint Checkpoint::parse(std::string_view bytes, std::string_view expected_magic) {
  Reader r(bytes);
  const auto magic = r.get_bytes(expected_magic.size());
  if (magic != expected_magic || r.get<char>() != '\0') {
    throw Error("checkpoint: bad magic, expected '" + std::string(expected_magic) + "'");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error("checkpoint: unsupported format version " + std::to_string(version));
  }
  Checkpoint ck(expected_magic);
  ck.config_hash = r.get<std::uint64_t>();
  ck.seed = r.get<std::uint64_t>();
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto kind = static_cast<Kind>(r.get<std::uint8_t>());
    if (kind < Kind::Mlp || kind > Kind::Text) throw Error("checkpoint: unknown section kind");
    const auto name_len = r.get<std::uint32_t>();
    std::string name(r.get_bytes(name_len));
    const auto len = r.get<std::uint64_t>();
    ck.sections_.push_back({kind, std::move(name), std::string(r.get_bytes(len))});
  }
  if (!r.done()) throw Error("checkpoint: trailing bytes after last section");
  return ck;
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("checkpoint: cannot open '" + path + "' for writing");
  const std::string bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("checkpoint: write failed for '" + path + "'");
}

Checkpoint Checkpoint::load(const std::string& path, std::string_view expected_magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("checkpoint: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), expected_magic);
}

}  // namespace wp::nn
