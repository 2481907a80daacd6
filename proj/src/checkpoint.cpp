#include "pearlgan/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "pearlgan/errors.hpp"

namespace fs = std::filesystem;

namespace pearlgan {

namespace {

constexpr char kMagic[8] = {'P', 'G', 'A', 'N', 'C', 'K', 'P', 'T'};
constexpr char kEnd[8] = {'P', 'G', 'A', 'N', 'E', 'N', 'D', '.'};

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

class Writer {
 public:
  explicit Writer(const fs::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw CheckpointError("cannot open " + path.string() + " for writing");
  }
  template <class T>
  void pod(T v) {
    v = to_little(v);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void str(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void finish(const fs::path& path) {
    out_.flush();
    if (!out_) throw CheckpointError("write failed: " + path.string());
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const fs::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw CheckpointError("cannot open checkpoint " + path.string());
  }
  template <class T>
  T pod() {
    T v{};
    bytes(&v, sizeof(T));
    return to_little(v);
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n))
      throw CheckpointError("truncated checkpoint: " + path_.string());
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

 private:
  std::ifstream in_;
  fs::path path_;
};

}  // namespace

const torch::Tensor& Checkpoint::at(const std::string& key) const {
  for (const auto& [k, t] : tensors)
    if (k == key) return t;
  throw CheckpointError("checkpoint has no tensor '" + key + "'");
}

bool Checkpoint::contains(const std::string& key) const {
  for (const auto& kv : tensors)
    if (kv.first == key) return true;
  return false;
}

void write_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  // Written to a sibling file, then renamed into place.
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    Writer w(tmp);
    w.bytes(kMagic, sizeof(kMagic));
    w.pod(ckpt.version);
    w.pod(ckpt.iteration);
    w.str(ckpt.config_text);
    w.str(ckpt.rng_state);
    w.pod(static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [key, tensor] : ckpt.tensors) {
      w.str(key);
      auto t = tensor.detach().to(torch::kCPU, torch::kFloat32).contiguous();
      w.pod(static_cast<std::uint32_t>(t.dim()));
      for (auto d : t.sizes()) w.pod(static_cast<std::int64_t>(d));
      const float* p = t.data_ptr<float>();
      if constexpr (std::endian::native == std::endian::little) {
        w.bytes(p, static_cast<std::size_t>(t.numel()) * sizeof(float));
      } else {
        for (std::int64_t i = 0; i < t.numel(); ++i) w.pod(p[i]);
      }
    }
    w.bytes(kEnd, sizeof(kEnd));
    w.finish(tmp);
  }
  fs::rename(tmp, path);
}

Checkpoint read_checkpoint(const fs::path& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("not a checkpoint (bad magic): " + path.string());
  Checkpoint c;
  c.version = r.pod<std::uint32_t>();
  if (c.version != kCheckpointVersion)
    throw CheckpointError("checkpoint version " + std::to_string(c.version) + " unsupported (expected " +
                          std::to_string(kCheckpointVersion) + "): " + path.string());
  c.iteration = r.pod<std::int64_t>();
  c.config_text = r.str();
  c.rng_state = r.str();
  const auto n = r.pod<std::uint32_t>();
  c.tensors.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    auto key = r.str();
    const auto rank = r.pod<std::uint32_t>();
    if (rank > 8) throw CheckpointError("corrupt tensor rank in " + path.string());
    std::vector<std::int64_t> shape(rank);
    for (auto& d : shape) {
      d = r.pod<std::int64_t>();
      if (d < 0) throw CheckpointError("corrupt tensor shape in " + path.string());
    }
    auto t = torch::empty(shape, torch::kFloat32);
    float* p = t.data_ptr<float>();
    if constexpr (std::endian::native == std::endian::little) {
      r.bytes(p, static_cast<std::size_t>(t.numel()) * sizeof(float));
    } else {
      for (std::int64_t k = 0; k < t.numel(); ++k) p[k] = r.pod<float>();
    }
    c.tensors.emplace_back(std::move(key), std::move(t));
  }
  char end[8];
  r.bytes(end, sizeof(end));
  if (std::memcmp(end, kEnd, sizeof(kEnd)) != 0)
    throw CheckpointError("checkpoint end marker missing: " + path.string());
  return c;
}

void collect_module(const torch::nn::Module& m, const std::string& prefix,
                    std::vector<std::pair<std::string, torch::Tensor>>& out) {
  for (const auto& p : m.named_parameters(/*recurse=*/true)) out.emplace_back(prefix + p.key(), p.value());
  for (const auto& b : m.named_buffers(/*recurse=*/true)) out.emplace_back(prefix + b.key(), b.value());
}

void restore_module(torch::nn::Module& m, const std::string& prefix, const Checkpoint& ckpt) {
  torch::NoGradGuard guard;
  auto copy = [&](const std::string& key, torch::Tensor& dst) {
    const auto& src = ckpt.at(prefix + key);
    if (src.sizes() != dst.sizes())
      throw CheckpointError("shape mismatch for '" + prefix + key + "'");
    dst.copy_(src);
  };
  for (auto& p : m.named_parameters(true)) copy(p.key(), p.value());
  for (auto& b : m.named_buffers(true)) copy(b.key(), b.value());
}

void save_checkpoint(const Trainer& trainer, const fs::path& path) {
  write_checkpoint(path, trainer.to_checkpoint());
}

Checkpoint load_checkpoint(const fs::path& path) { return read_checkpoint(path); }

GeneratorPair load_generators(const fs::path& path) {
  const auto ckpt = read_checkpoint(path);
  GeneratorPair g;
  g.config = TrainConfig::from_text(ckpt.config_text);
  g.g_ab = Generator(g.config.generator);
  g.g_ba = Generator(g.config.generator);
  restore_module(*g.g_ab, "g_ab.", ckpt);
  restore_module(*g.g_ba, "g_ba.", ckpt);
  g.g_ab->eval();
  g.g_ba->eval();
  return g;
}

}  // namespace pearlgan
