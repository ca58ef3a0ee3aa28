#include "glyco/checkpoint.hpp"

#include "glyco/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace glyco {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'G', 'P', 'C', 'K'};
constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

void put_bytes(std::vector<std::uint8_t>& out, const void* src, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(src);
  out.insert(out.end(), p, p + n);
}

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  put_bytes(out, &value, sizeof(T));
}

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n) {
  std::uint64_t h = kFnvOffset;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= kFnvPrime;
  }
  return h;
}

class ByteReader {
public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > size_)
      raise(Errc::corrupt_checkpoint, "checkpoint truncated");
    T value;
    std::memcpy(&value, data_ + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::size_t pos() const { return pos_; }

private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> checkpoint_bytes(const ModelParams& params) {
  const ModelDims& d = params.dims();
  std::vector<std::uint8_t> out;
  out.reserve(64 + params.values().size() * sizeof(double));

  put_bytes(out, kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint8_t>(out, d.has_deep ? 1 : 0);
  put<std::uint8_t>(out, d.has_wide ? 1 : 0);
  put<std::uint8_t>(out, d.wide_sigmoid ? 1 : 0);
  put<std::uint8_t>(out, 0); // reserved
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.input_dim));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.hidden_dim));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(kLstmLayers));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.seq_len));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.dense1));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.dense2));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.wide_dim));
  put<std::uint64_t>(out, params.values().size());

  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.seq_norm.size()));
  for (const Normalizer& n : params.seq_norm) {
    put<double>(out, n.mean);
    put<double>(out, n.std);
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.tab_norm.size()));
  for (const Normalizer& n : params.tab_norm) {
    put<double>(out, n.mean);
    put<double>(out, n.std);
  }

  for (double v : params.values()) put<double>(out, v);

  put<std::uint64_t>(out, fnv1a(out.data(), out.size()));
  return out;
}

void checkpoint_save(const ModelParams& params, const std::filesystem::path& path) {
  const auto bytes = checkpoint_bytes(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::io_failure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(Errc::io_failure, "write failed: " + path.string());
}

ModelParams checkpoint_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io_failure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

  if (bytes.size() < kMagic.size() + sizeof(std::uint32_t) + sizeof(std::uint64_t))
    raise(Errc::corrupt_checkpoint, path.string() + " is too small");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
    raise(Errc::corrupt_checkpoint, path.string() + " has no checkpoint magic");

  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body, sizeof(stored));
  if (stored != fnv1a(bytes.data(), body))
    raise(Errc::corrupt_checkpoint, path.string() + " checksum mismatch");

  ByteReader r(bytes.data(), body);
  r.get<std::uint32_t>(); // magic, already checked
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    raise(Errc::version_mismatch, path.string() + " is format version " +
                                      std::to_string(version) + ", expected " +
                                      std::to_string(kCheckpointVersion));

  ModelDims d;
  d.has_deep = r.get<std::uint8_t>() != 0;
  d.has_wide = r.get<std::uint8_t>() != 0;
  d.wide_sigmoid = r.get<std::uint8_t>() != 0;
  r.get<std::uint8_t>();
  d.input_dim = static_cast<int>(r.get<std::uint32_t>());
  d.hidden_dim = static_cast<int>(r.get<std::uint32_t>());
  const auto layers = r.get<std::uint32_t>();
  if (layers != kLstmLayers)
    raise(Errc::corrupt_checkpoint,
          path.string() + " declares " + std::to_string(layers) + " LSTM layers");
  d.seq_len = static_cast<int>(r.get<std::uint32_t>());
  d.dense1 = static_cast<int>(r.get<std::uint32_t>());
  d.dense2 = static_cast<int>(r.get<std::uint32_t>());
  d.wide_dim = static_cast<int>(r.get<std::uint32_t>());
  const auto param_count = r.get<std::uint64_t>();
  if (param_count != d.param_count())
    raise(Errc::corrupt_checkpoint, path.string() + " parameter count " +
                                        std::to_string(param_count) +
                                        " does not match its dimension table");

  ModelParams params(d);
  const auto seq_norms = r.get<std::uint32_t>();
  if (seq_norms != params.seq_norm.size())
    raise(Errc::corrupt_checkpoint, path.string() + " sequence-normalizer count mismatch");
  for (auto& n : params.seq_norm) {
    n.mean = r.get<double>();
    n.std = r.get<double>();
    if (!(n.std > 0.0)) raise(Errc::corrupt_checkpoint, "non-positive normalizer std");
  }
  const auto tab_norms = r.get<std::uint32_t>();
  if (tab_norms != params.tab_norm.size())
    raise(Errc::corrupt_checkpoint, path.string() + " tabular-normalizer count mismatch");
  for (auto& n : params.tab_norm) {
    n.mean = r.get<double>();
    n.std = r.get<double>();
    if (!(n.std > 0.0)) raise(Errc::corrupt_checkpoint, "non-positive normalizer std");
  }

  for (double& v : params.values()) v = r.get<double>();
  if (r.pos() != body)
    raise(Errc::corrupt_checkpoint, path.string() + " has trailing bytes");
  return params;
}

} // namespace glyco
