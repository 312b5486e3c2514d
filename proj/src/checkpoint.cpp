#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "vceval/error.hpp"
#include "vceval/learner.hpp"

namespace vceval {

namespace {

constexpr char kMagic[8] = {'V', 'C', 'E', 'V', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void i32(int v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<unsigned char>& buffer() { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

/// Bounds-checked reader; running off the end means the file was cut short.
class Reader {
 public:
  Reader(const std::vector<unsigned char>& buf, std::size_t end) : buf_(buf), end_(end) {}

  void need(std::size_t n) const {
    if (pos_ + n > end_) throw Error(ErrorCode::ChecksumMismatch, "checkpoint truncated");
  }
  std::uint8_t u8() {
    need(1);
    return buf_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_++]) << (8 * i);
    return v;
  }
  int i32() { return static_cast<int>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  [[nodiscard]] std::size_t position() const { return pos_; }

 private:
  const std::vector<unsigned char>& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t checksum(const unsigned char* data, std::size_t n) {
  return static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

}  // namespace

void save_model(const ModelState& model, const std::filesystem::path& path) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);

  const auto& c = model.config;
  w.i32(c.embed_dim);
  w.i32(c.layers);
  w.i32(c.heads);
  w.i32(c.context_len);
  w.i32(c.ffn_mult);
  w.f64(c.lr_unlearn);
  w.f64(c.lr_pretrain);
  w.f64(c.lr_finetune);
  w.i32(c.epochs_unlearn);
  w.i32(c.epochs_pretrain);
  w.i32(c.epochs_finetune);
  w.i32(c.batch_size);
  w.f64(c.tolerance_uniform);
  w.f64(c.unlearn_loss_tolerance);
  w.f64(c.grad_clip);
  w.f64(c.init_scale);
  w.u8(c.repeat_unlearn ? 1 : 0);
  w.u64(c.seed);

  const auto learned = model.vocab.learned_tokens();
  w.u32(static_cast<std::uint32_t>(learned.size()));
  for (const auto& t : learned) w.str(t);

  w.u32(static_cast<std::uint32_t>(model.stage_log.size()));
  for (const auto& r : model.stage_log) {
    w.u8(static_cast<std::uint8_t>(r.stage));
    w.f64(r.final_loss);
  }

  w.u64(static_cast<std::uint64_t>(model.parameters.size()));
  for (Eigen::Index i = 0; i < model.parameters.size(); ++i) w.f64(model.parameters(i));

  auto& buf = w.buffer();
  w.u32(checksum(buf.data(), buf.size()));

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

ModelState load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  const std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < sizeof kMagic + 4 || std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0) {
    if (buf.size() < sizeof kMagic + 4 && buf.size() > 0 &&
        std::memcmp(buf.data(), kMagic, std::min(buf.size(), sizeof kMagic)) == 0) {
      throw Error(ErrorCode::ChecksumMismatch, "checkpoint truncated: " + path.string());
    }
    throw Error(ErrorCode::IoError, "not a checkpoint: " + path.string());
  }
  Reader header(buf, buf.size());
  for (std::size_t i = 0; i < sizeof kMagic; ++i) header.u8();
  const auto version = header.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::VersionMismatch,
                "checkpoint format " + std::to_string(version) + ", reader supports " + std::to_string(kCheckpointVersion));
  }
  if (buf.size() < sizeof kMagic + 8) throw Error(ErrorCode::ChecksumMismatch, "checkpoint truncated");
  const auto body_end = buf.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(buf[body_end + static_cast<std::size_t>(i)]) << (8 * i);
  if (stored != checksum(buf.data(), body_end)) {
    throw Error(ErrorCode::ChecksumMismatch, "checkpoint corrupt or truncated: " + path.string());
  }

  Reader r(buf, body_end);
  for (std::size_t i = 0; i < sizeof kMagic + 4; ++i) r.u8();
  ModelConfig c;
  c.embed_dim = r.i32();
  c.layers = r.i32();
  c.heads = r.i32();
  c.context_len = r.i32();
  c.ffn_mult = r.i32();
  c.lr_unlearn = r.f64();
  c.lr_pretrain = r.f64();
  c.lr_finetune = r.f64();
  c.epochs_unlearn = r.i32();
  c.epochs_pretrain = r.i32();
  c.epochs_finetune = r.i32();
  c.batch_size = r.i32();
  c.tolerance_uniform = r.f64();
  c.unlearn_loss_tolerance = r.f64();
  c.grad_clip = r.f64();
  c.init_scale = r.f64();
  c.repeat_unlearn = r.u8() != 0;
  c.seed = r.u64();
  validate(c);

  std::vector<std::string> tokens(r.u32());
  for (auto& t : tokens) t = r.str();

  ModelState m{c, Vocabulary(std::move(tokens)), {}, {}};
  m.stage_log.resize(r.u32());
  for (auto& s : m.stage_log) {
    const auto stage = r.u8();
    if (stage > static_cast<std::uint8_t>(Stage::finetune)) throw Error(ErrorCode::IoError, "bad stage tag");
    s.stage = static_cast<Stage>(stage);
    s.final_loss = r.f64();
  }
  const auto n = r.u64();
  if (n != static_cast<std::uint64_t>(ParameterLayout(c, m.vocab.size()).total)) {
    throw Error(ErrorCode::IoError, "parameter count does not match config and vocabulary");
  }
  m.parameters.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < m.parameters.size(); ++i) m.parameters(i) = r.f64();
  if (r.position() != body_end) throw Error(ErrorCode::IoError, "trailing bytes in checkpoint");
  return m;
}

}  // namespace vceval
