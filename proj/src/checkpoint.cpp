#include "transtte/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <vector>

#include "transtte/error.hpp"

namespace transtte {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'T', 'T', 'E', '1'};

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

class Writer {
 public:
  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_bytes(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  std::vector<std::uint8_t>& bytes() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw Error(ErrorKind::CorruptFile, "checkpoint is truncated");
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> serialize(const ModelParams& params) {
  const ModelConfig& c = params.config;
  Writer w;
  w.put_bytes(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(c.layers);
  w.put<std::uint32_t>(c.width);
  w.put<std::uint32_t>(c.heads);
  w.put<std::uint32_t>(c.ffn_mult);
  w.put<std::uint16_t>(c.max_degree);
  w.put<std::uint16_t>(c.max_hops);
  w.put<std::uint32_t>(c.feature_dim);
  w.put<std::uint64_t>(c.seed);
  w.put<double>(params.target_mean);
  w.put<double>(params.target_std);
  w.put<std::uint64_t>(params.values.size());
  for (double v : params.values) w.put<double>(v);
  w.put<std::uint64_t>(fnv1a(w.bytes()));
  return std::move(w.bytes());
}

}  // namespace

void save_params(const ModelParams& params, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = serialize(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

ModelParams load_params(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::MissingFile, path.string() + " does not exist");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Reader r(bytes);
  char magic[4];
  for (char& ch : magic) ch = static_cast<char>(r.get<std::uint8_t>());
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorKind::CorruptFile, path.string() + " is not a TTE1 checkpoint");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::VersionMismatch, path.string() + " has format version " + std::to_string(version) +
                                                ", expected " + std::to_string(kCheckpointVersion));
  }
  if (bytes.size() < sizeof(std::uint64_t) + r.pos()) {
    throw Error(ErrorKind::CorruptFile, "checkpoint is truncated");
  }
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + body, sizeof(stored));
  if (stored != fnv1a(std::span(bytes).first(body))) {
    throw Error(ErrorKind::CorruptFile, path.string() + ": checksum mismatch");
  }

  ModelParams p;
  ModelConfig& c = p.config;
  c.layers = r.get<std::uint32_t>();
  c.width = r.get<std::uint32_t>();
  c.heads = r.get<std::uint32_t>();
  c.ffn_mult = r.get<std::uint32_t>();
  c.max_degree = r.get<std::uint16_t>();
  c.max_hops = r.get<std::uint16_t>();
  c.feature_dim = r.get<std::uint32_t>();
  c.seed = r.get<std::uint64_t>();
  p.target_mean = r.get<double>();
  p.target_std = r.get<double>();
  try {
    p.layout = ParamLayout::build(c);
  } catch (const Error& e) {
    throw Error(ErrorKind::CorruptFile, std::string("invalid config block: ") + e.what());
  }
  const auto count = r.get<std::uint64_t>();
  if (count != p.layout.total || r.remaining() != count * sizeof(double) + sizeof(std::uint64_t)) {
    throw Error(ErrorKind::CorruptFile, "parameter count does not match config");
  }
  p.values.resize(count);
  for (auto& v : p.values) v = r.get<double>();
  return p;
}

std::string model_version(const ModelParams& params) {
  const std::vector<std::uint8_t> bytes = serialize(params);
  std::uint64_t sum = 0;
  std::memcpy(&sum, bytes.data() + bytes.size() - sizeof(sum), sizeof(sum));
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out = "tte1-";
  for (int shift = 60; shift >= 0; shift -= 4) out.push_back(kHex[(sum >> shift) & 0xF]);
  return out;
}

}  // namespace transtte
