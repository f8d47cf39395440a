#include "pagsr/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace pagsr {

namespace {

static_assert(std::endian::native == std::endian::little,
              "weight serialization assumes a little-endian host");

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u16(std::uint16_t v) { bytes(&v, 2); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  std::vector<unsigned char> take() { return std::move(out_); }

 private:
  std::vector<unsigned char> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& in) : in_(in) {}
  void bytes(void* p, std::size_t n, const char* what) {
    if (pos_ + n > in_.size()) {
      throw TruncatedError("weight file truncated while reading " + std::string(what) +
                           " at byte " + std::to_string(pos_));
    }
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8(const char* what) { std::uint8_t v; bytes(&v, 1, what); return v; }
  std::uint16_t u16(const char* what) { std::uint16_t v; bytes(&v, 2, what); return v; }
  std::uint32_t u32(const char* what) { std::uint32_t v; bytes(&v, 4, what); return v; }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::vector<unsigned char>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> encode_weights(const ModelWeights<float>& weights) {
  const ModelConfig& c = weights.config;
  Writer w;
  w.bytes(kWeightsMagic, 4);
  w.u16(kWeightsVersion);
  for (int v : {c.upsample_exponent, c.base_channels, c.rdb_layers, c.growth_rate,
                c.guidance_channels}) {
    w.u32(static_cast<std::uint32_t>(v));
  }
  w.u32(static_cast<std::uint32_t>(weights.params.size()));
  for (const auto& p : weights.params.entries()) {
    w.u16(static_cast<std::uint16_t>(p.name.size()));
    w.bytes(p.name.data(), p.name.size());
    w.u8(4);
    for (int d : p.value.shape().dims()) w.u32(static_cast<std::uint32_t>(d));
    w.bytes(p.value.raw(), p.value.numel() * sizeof(float));
  }
  return w.take();
}

ModelWeights<float> decode_weights(const std::vector<unsigned char>& bytes,
                                   const std::optional<ModelConfig>& expected) {
  Reader r(bytes);
  char magic[4];
  r.bytes(magic, 4, "magic");
  if (std::memcmp(magic, kWeightsMagic, 4) != 0) {
    throw BadMagicError("not a PAGW weight file (bad magic)");
  }
  const std::uint16_t version = r.u16("version");
  if (version != kWeightsVersion) {
    throw VersionError("unsupported weight file version " + std::to_string(version) +
                       " (expected " + std::to_string(kWeightsVersion) + ")");
  }
  ModelConfig cfg;
  cfg.upsample_exponent = static_cast<int>(r.u32("config"));
  cfg.base_channels = static_cast<int>(r.u32("config"));
  cfg.rdb_layers = static_cast<int>(r.u32("config"));
  cfg.growth_rate = static_cast<int>(r.u32("config"));
  cfg.guidance_channels = static_cast<int>(r.u32("config"));
  if (expected) {
    cfg.seed = expected->seed;
    cfg.global_residual = expected->global_residual;
    if (!(cfg == *expected)) {
      throw ConfigMismatchError("weight file config (" + cfg.str() +
                                ") does not match model config (" + expected->str() + ")");
    }
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw DimMismatchError(std::string("weight file holds an invalid config: ") + e.what());
  }

  // Reference layout for validating every entry.
  const ModelWeights<float> layout = zero_weights<float>(cfg);
  const std::uint32_t count = r.u32("entry count");
  if (count != layout.params.size()) {
    throw DimMismatchError("weight file has " + std::to_string(count) + " entries, config (" +
                           cfg.str() + ") implies " + std::to_string(layout.params.size()));
  }
  ModelWeights<float> out{cfg, {}};
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(r.u16("name length"), '\0');
    r.bytes(name.data(), name.size(), "name");
    const std::uint8_t rank = r.u8("rank");
    if (rank < 1 || rank > 4) {
      throw DimMismatchError("entry '" + name + "' has unsupported rank " + std::to_string(rank));
    }
    std::array<int, 4> dims{1, 1, 1, 1};
    for (int d = 0; d < rank; ++d) dims[4 - rank + d] = static_cast<int>(r.u32("dims"));
    const Shape shape{dims[0], dims[1], dims[2], dims[3]};
    if (!layout.params.contains(name)) {
      throw DimMismatchError("unexpected entry '" + name + "' for config (" + cfg.str() + ")");
    }
    const Shape want = layout.params.get(name).shape();
    if (shape != want) {
      throw DimMismatchError("entry '" + name + "' has dims " + shape.str() + ", expected " +
                             want.str());
    }
    std::vector<float> values(shape.numel());
    r.bytes(values.data(), values.size() * sizeof(float), "values");
    out.params.add(name, Tensor32(shape, std::move(values)));
  }
  if (!r.done()) throw DimMismatchError("trailing bytes after last weight entry");
  return out;
}

void save_weights(const ModelWeights<float>& weights, const std::filesystem::path& path) {
  const auto bytes = encode_weights(weights);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path.string() + ": write failed");
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

ModelWeights<float> load_weights(const std::filesystem::path& path) {
  return decode_weights(read_file(path));
}

ModelWeights<float> load_weights(const std::filesystem::path& path, const ModelConfig& expected) {
  return decode_weights(read_file(path), expected);
}

}  // namespace pagsr
