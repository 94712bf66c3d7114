#include "mole/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace mole {
namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b, 8);
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

void put_vec(std::ostream& os, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(os, v[i]);
}

std::uint64_t get_le(std::istream& is, int nbytes) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), nbytes)) throw SchemaError("checkpoint: unexpected end of file");
  std::uint64_t v = 0;
  for (int i = 0; i < nbytes; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

std::uint32_t get_u32(std::istream& is) { return static_cast<std::uint32_t>(get_le(is, 4)); }
std::uint64_t get_u64(std::istream& is) { return get_le(is, 8); }
double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

Eigen::VectorXd get_vec(std::istream& is, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = get_f64(is);
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  const auto& arch = ckpt.params.arch();
  if (ckpt.norm.input_dim() != arch.input_dim || ckpt.norm.output_dim() != arch.output_dim)
    throw ArgumentError("checkpoint: normalizer dims do not match architecture");
  os.write(kCheckpointMagic, 8);
  put_u32(os, kCheckpointVersion);
  put_u32(os, ckpt.mixture ? 1u : 0u);
  put_u32(os, static_cast<std::uint32_t>(arch.input_dim));
  put_u32(os, static_cast<std::uint32_t>(arch.output_dim));
  put_u32(os, static_cast<std::uint32_t>(arch.hidden_dims.size()));
  for (int h : arch.hidden_dims) put_u32(os, static_cast<std::uint32_t>(h));
  put_f64(os, ckpt.lik.variance);
  put_vec(os, ckpt.norm.in_mean);
  put_vec(os, ckpt.norm.in_std);
  put_vec(os, ckpt.norm.out_mean);
  put_vec(os, ckpt.norm.out_std);
  put_u64(os, static_cast<std::uint64_t>(ckpt.params.size()));
  put_vec(os, ckpt.params.values());
  if (ckpt.mixture) {
    const auto& m = *ckpt.mixture;
    put_u64(os, static_cast<std::uint64_t>(m.step_count));
    put_u32(os, static_cast<std::uint32_t>(m.current_best));
    put_u32(os, static_cast<std::uint32_t>(m.tasks.size()));
    for (const auto& t : m.tasks) {
      if (t.params.arch() != arch) throw ArgumentError("checkpoint: task architecture mismatch");
      put_u32(os, static_cast<std::uint32_t>(t.id));
      put_f64(os, t.prior_mass);
      put_vec(os, t.params.values());
    }
  }
  if (!os) throw std::runtime_error("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw SchemaError("checkpoint: bad magic");
  const auto version = get_u32(is);
  if (version != kCheckpointVersion)
    throw SchemaError("checkpoint: unsupported version " + std::to_string(version));
  const auto flags = get_u32(is);
  NetArchitecture arch;
  arch.input_dim = static_cast<int>(get_u32(is));
  arch.output_dim = static_cast<int>(get_u32(is));
  const auto nh = get_u32(is);
  if (nh > 1024) throw SchemaError("checkpoint: implausible layer count");
  arch.hidden_dims.clear();
  for (std::uint32_t i = 0; i < nh; ++i) arch.hidden_dims.push_back(static_cast<int>(get_u32(is)));
  arch.validate();

  LikelihoodConfig lik{get_f64(is)};
  Normalizer norm;
  norm.in_mean = get_vec(is, arch.input_dim);
  norm.in_std = get_vec(is, arch.input_dim);
  norm.out_mean = get_vec(is, arch.output_dim);
  norm.out_std = get_vec(is, arch.output_dim);
  const auto np = get_u64(is);
  if (np != static_cast<std::uint64_t>(arch.param_count()))
    throw SchemaError("checkpoint: parameter count does not match architecture");
  auto shared_arch = std::make_shared<const NetArchitecture>(arch);
  ParamVector params(shared_arch, get_vec(is, static_cast<Eigen::Index>(np)));

  Checkpoint ck{params, lik, std::move(norm), std::nullopt};
  if (flags & 1u) {
    MixtureState<double> m{{}, 0, params, 0};
    m.step_count = static_cast<long>(get_u64(is));
    m.current_best = static_cast<int>(get_u32(is));
    const auto nt = get_u32(is);
    for (std::uint32_t i = 0; i < nt; ++i) {
      const int id = static_cast<int>(get_u32(is));
      const double mass = get_f64(is);
      m.tasks.push_back({id, ParamVector(shared_arch, get_vec(is, static_cast<Eigen::Index>(np))), mass});
    }
    if (m.tasks.empty() || m.current_best < 0 || m.current_best >= static_cast<int>(m.tasks.size()))
      throw SchemaError("checkpoint: inconsistent task table");
    ck.mixture = std::move(m);
  }
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open checkpoint for writing: " + path);
  write_checkpoint(os, ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("missing checkpoint: " + path);
  return read_checkpoint(is);
}

}  // namespace mole
