#pragma once

// Versioned binary container for networks, optimizer state and metadata.
//
// Layout (all integers and floats little-endian):
//   magic        NUL-terminated ASCII ("TMPCKPT" for training checkpoints,
//                "TMPDEPLOY" for actor-only deployment exports)
//   u32          format version
//   u64          config hash
//   u64          master seed
//   u32          section count
//   section*     u8 kind, u32 name length, name bytes, u64 payload length, payload
//
// Payloads: Mlp = u8 activation, u8 activate_output, u32 n_sizes, u32 sizes[],
// f64 parameters in layer order (W_1 row-major, b_1, W_2, ...). Vector = u64 n,
// f64[n]. Adam = u64 steps, f64 lr, beta1, beta2, eps, u32 blocks, then per block
// u64 n, f64 m[n], f64 v[n]. Normalizer = u32 dim, f64 clip, f64 count,
// f64 mean[dim], f64 var[dim]. Text = raw bytes.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "walkprior/nn/mlp.hpp"
#include "walkprior/nn/normalizer.hpp"
#include "walkprior/nn/optimizer.hpp"

namespace wp::nn {

inline constexpr std::string_view kCheckpointMagic = "TMPCKPT";
inline constexpr std::string_view kDeployMagic = "TMPDEPLOY";
inline constexpr std::uint32_t kCheckpointVersion = 1;

class Checkpoint {
 public:
  enum class Kind : std::uint8_t { Mlp = 1, Vector = 2, Adam = 3, Normalizer = 4, Text = 5 };

  explicit Checkpoint(std::string_view magic = kCheckpointMagic) : magic_(magic) {}

  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;

  const std::string& magic() const { return magic_; }

  void add_mlp(const std::string& name, const MlpNet& net);
  void add_vector(const std::string& name, const Vec& values);
  void add_adam(const std::string& name, const Adam& opt);
  void add_normalizer(const std::string& name, const RunningNormalizer& norm);
  void add_text(const std::string& name, const std::string& text);

  bool has(const std::string& name) const;
  std::vector<std::string> section_names() const;
  MlpNet mlp(const std::string& name) const;
  Vec vector(const std::string& name) const;
  void restore_adam(const std::string& name, Adam& opt) const;
  RunningNormalizer normalizer(const std::string& name) const;
  std::string text(const std::string& name) const;

  std::string serialize() const;
  static Checkpoint parse(std::string_view bytes, std::string_view expected_magic);

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path, std::string_view expected_magic);

 private:
  struct Section {
    Kind kind;
    std::string name;
    std::string payload;
  };
  const Section& find(const std::string& name, Kind kind) const;
  void add(Kind kind, const std::string& name, std::string payload);

  std::string magic_;
  std::vector<Section> sections_;
};

}  // namespace wp::nn
