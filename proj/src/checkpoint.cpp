#include "simplex/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace simplex {

namespace {

constexpr char kMagic[8] = {'S', 'I', 'M', 'P', 'L', 'E', 'X', '\0'};

template <typename U>
void put_uint(std::string& out, U v) {
  for (std::size_t b = 0; b < sizeof(U); ++b) {
    out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
  }
}

void put_u32(std::string& out, std::size_t v) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw CheckpointError("checkpoint dimension too large: " + std::to_string(v));
  }
  put_uint(out, static_cast<std::uint32_t>(v));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename U>
  U get_uint() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b) {
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    }
    pos_ += sizeof(U);
    return v;
  }
  double get_f64() { return std::bit_cast<double>(get_uint<std::uint64_t>()); }
  float get_f32() { return std::bit_cast<float>(get_uint<std::uint32_t>()); }
  void get_bytes(char* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw CheckpointError("checkpoint is truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const auto& p = ckpt.params;
  std::string out(kMagic, sizeof(kMagic));
  out.push_back(static_cast<char>(kCheckpointVersion));
  put_u32(out, p.dim);
  put_u32(out, p.num_users());
  put_u32(out, p.num_items());
  put_u32(out, ckpt.history_len);
  out.push_back(static_cast<char>(ckpt.encoder.aggregation));
  out.push_back(static_cast<char>(ckpt.encoder.similarity));
  put_uint(out, std::bit_cast<std::uint64_t>(ckpt.encoder.g));
  put_uint(out, std::bit_cast<std::uint64_t>(ckpt.encoder.cosine_eps));
  out.reserve(out.size() + 4 * p.total_size());
  for (const auto* t : p.tensors()) {
    for (float v : t->data) put_uint(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  char magic[sizeof(kMagic)];
  if (bytes.size() < sizeof(kMagic)) throw CheckpointError("not a checkpoint (too short)");
  in.get_bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a checkpoint (bad magic string)");
  }
  const auto version = in.get_uint<std::uint8_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::size_t dim = in.get_uint<std::uint32_t>();
  const std::size_t num_users = in.get_uint<std::uint32_t>();
  const std::size_t num_items = in.get_uint<std::uint32_t>();

  Checkpoint ckpt;
  ckpt.history_len = in.get_uint<std::uint32_t>();
  const auto agg = in.get_uint<std::uint8_t>();
  const auto sim = in.get_uint<std::uint8_t>();
  if (agg > static_cast<std::uint8_t>(Aggregation::user_attention)) {
    throw CheckpointError("bad aggregation code " + std::to_string(agg));
  }
  if (sim > static_cast<std::uint8_t>(Similarity::dot)) {
    throw CheckpointError("bad similarity code " + std::to_string(sim));
  }
  ckpt.encoder.aggregation = static_cast<Aggregation>(agg);
  ckpt.encoder.similarity = static_cast<Similarity>(sim);
  ckpt.encoder.g = in.get_f64();
  ckpt.encoder.cosine_eps = in.get_f64();

  const std::size_t expected =
      4 * ((num_users + num_items + 1) * dim + 3 * dim * dim + 3 * dim);
  if (in.remaining() != expected) {
    throw CheckpointError("checkpoint size mismatch: header implies " + std::to_string(expected) +
                          " tensor bytes, found " + std::to_string(in.remaining()));
  }
  ckpt.params = ModelParams<float>(num_users, num_items, dim);
  for (auto* t : ckpt.params.tensors()) {
    for (auto& v : t->data) v = in.get_f32();
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("error while writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return deserialize_checkpoint(buf.str());
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace simplex
