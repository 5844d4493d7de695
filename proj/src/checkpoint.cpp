#include "tglink/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace tglink {

namespace {

constexpr uint32_t kMagic = 0x544c4b47;  // "GKLT" little-endian
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& out, uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }
void write_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), 8); }
void write_str(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint32_t read_u32(std::istream& in) {
  uint32_t v;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
uint64_t read_u64(std::istream& in) {
  uint64_t v;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
double read_f64(std::istream& in) {
  double v;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
std::string read_str(std::istream& in) {
  const uint64_t n = read_u64(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  return s;
}

std::vector<ParamRef<float>> all_tensors(Pipeline<float>& pipe) {
  std::vector<ParamRef<float>> refs = pipe.trainable_params();
  for (auto& r : pipe.state_buffers()) refs.push_back(r);
  return refs;
}

}  // namespace

void save_checkpoint(const std::string& path, const RunConfig& config, double time_scale,
                     const std::vector<std::string>& node_labels, Pipeline<float>& pipeline) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  write_u32(out, kMagic);
  write_u32(out, kVersion);
  write_str(out, config.to_json());
  write_f64(out, time_scale);

  const NetSpec& ns = pipeline.net().spec();
  write_u32(out, static_cast<uint32_t>(ns.in_channels));
  write_u32(out, static_cast<uint32_t>(ns.width));
  write_u32(out, static_cast<uint32_t>(ns.head_channels));
  write_u32(out, static_cast<uint32_t>(ns.stage1_layers));
  write_u32(out, static_cast<uint32_t>(ns.stage2_layers));
  write_u32(out, static_cast<uint32_t>(ns.stage2_expansion));
  write_u32(out, static_cast<uint32_t>(ns.classes));

  write_u64(out, node_labels.size());
  for (const auto& s : node_labels) write_str(out, s);

  const auto refs = all_tensors(pipeline);
  write_u64(out, refs.size());
  for (const auto& r : refs) {
    write_str(out, r.name);
    write_u64(out, static_cast<uint64_t>(r.size));
    out.write(reinterpret_cast<const char*>(r.value),
              static_cast<std::streamsize>(sizeof(float) * static_cast<size_t>(r.size)));
  }
  if (!out) throw std::runtime_error("short write while saving checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  if (read_u32(in) != kMagic) throw std::runtime_error("not a checkpoint file: " + path);
  const uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }

  Checkpoint ck;
  ck.config = RunConfig::from_json_text(read_str(in));
  ck.time_scale = read_f64(in);
  ck.netspec.in_channels = static_cast<int>(read_u32(in));
  ck.netspec.width = static_cast<int>(read_u32(in));
  ck.netspec.head_channels = static_cast<int>(read_u32(in));
  ck.netspec.stage1_layers = static_cast<int>(read_u32(in));
  ck.netspec.stage2_layers = static_cast<int>(read_u32(in));
  ck.netspec.stage2_expansion = static_cast<int>(read_u32(in));
  ck.netspec.classes = static_cast<int>(read_u32(in));

  const uint64_t n_labels = read_u64(in);
  ck.node_labels.reserve(n_labels);
  for (uint64_t i = 0; i < n_labels; ++i) ck.node_labels.push_back(read_str(in));

  SamplingConfig sampling;
  sampling.n_nearest = ck.config.n_nearest;
  sampling.p_parametric = ck.config.p_parametric;
  sampling.m_candidates = ck.config.resolved_m();
  sampling.alpha = ck.config.alpha;
  sampling.time_scale = ck.time_scale;
  ck.pipeline = std::make_unique<Pipeline<float>>(ck.netspec, sampling, ck.node_labels.size(),
                                                  ck.config.embed_dim, ck.config.seed);

  std::map<std::string, ParamRef<float>> by_name;
  for (auto& r : all_tensors(*ck.pipeline)) by_name.emplace(r.name, r);

  const uint64_t n_tensors = read_u64(in);
  size_t restored = 0;
  for (uint64_t i = 0; i < n_tensors; ++i) {
    const std::string name = read_str(in);
    const uint64_t count = read_u64(in);
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw std::runtime_error("checkpoint tensor not in model: " + name);
    }
    if (static_cast<uint64_t>(it->second.size) != count) {
      throw std::runtime_error("checkpoint tensor size mismatch: " + name);
    }
    in.read(reinterpret_cast<char*>(it->second.value),
            static_cast<std::streamsize>(sizeof(float) * count));
    ++restored;
  }
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  if (restored != by_name.size()) {
    throw std::runtime_error("checkpoint is missing tensors for this architecture");
  }
  return ck;
}

void require_compatible(const Checkpoint& ck, const std::vector<std::string>& dataset_labels) {
  if (ck.node_labels != dataset_labels) {
    throw std::runtime_error(
        "node-map mismatch: checkpoint was trained on a different node vocabulary (" +
        std::to_string(ck.node_labels.size()) + " vs " + std::to_string(dataset_labels.size()) +
        " nodes)");
  }
}

}  // namespace tglink
