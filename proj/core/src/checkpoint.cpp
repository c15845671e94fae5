#include "smart/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

namespace smart {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f64(std::string& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return std::bit_cast<double>(bits);
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw std::runtime_error("checkpoint truncated at byte " + std::to_string(pos_));
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::size_t element_count(const std::vector<std::uint32_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

}  // namespace

std::string encode_checkpoint(std::span<const NamedTensor> tensors) {
  std::string out = "SMRT";
  put_u32(out, kCheckpointVersion);
  for (const auto& t : tensors) {
    if (element_count(t.dims) != t.values.size()) {
      throw std::invalid_argument("checkpoint: tensor '" + t.name + "' dims disagree with values");
    }
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put_u32(out, d);
    for (double v : t.values) put_f64(out, v);
  }
  return out;
}

std::vector<NamedTensor> decode_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  if (in.str(4) != "SMRT") throw std::runtime_error("checkpoint: bad magic");
  const auto version = in.u32();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  std::vector<NamedTensor> tensors;
  while (!in.done()) {
    NamedTensor t;
    t.name = in.str(in.u32());
    const auto rank = in.u32();
    for (std::uint32_t i = 0; i < rank; ++i) t.dims.push_back(in.u32());
    const auto n = element_count(t.dims);
    t.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) t.values.push_back(in.f64());
    tensors.push_back(std::move(t));
  }
  return tensors;
}

void write_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> tensors) {
  const std::string bytes = encode_checkpoint(tensors);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

std::vector<NamedTensor> export_mlp(const Mlp& net, std::string_view prefix) {
  std::vector<NamedTensor> out;
  const auto layers = net.layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    const std::string base = std::string(prefix) + "layer" + std::to_string(k);
    out.push_back({base + ".weight",
                   {static_cast<std::uint32_t>(l.out_dim()), static_cast<std::uint32_t>(l.in_dim())},
                   {l.weight.data().begin(), l.weight.data().end()}});
    out.push_back({base + ".bias", {static_cast<std::uint32_t>(l.out_dim())}, l.bias});
  }
  return out;
}

Mlp import_mlp(std::span<const NamedTensor> tensors, std::string_view prefix, double slope) {
  auto find = [&](const std::string& name) -> const NamedTensor* {
    for (const auto& t : tensors) {
      if (t.name == name) return &t;
    }
    return nullptr;
  };
  std::vector<LinearLayer> layers;
  for (std::size_t k = 0;; ++k) {
    const std::string base = std::string(prefix) + "layer" + std::to_string(k);
    const NamedTensor* w = find(base + ".weight");
    if (!w) break;
    const NamedTensor* b = find(base + ".bias");
    if (!b || w->dims.size() != 2 || b->dims.size() != 1 || b->dims[0] != w->dims[0]) {
      throw std::runtime_error("checkpoint: malformed tensors for " + base);
    }
    LinearLayer layer(w->dims[1], w->dims[0]);
    std::copy(w->values.begin(), w->values.end(), layer.weight.data().begin());
    layer.bias = b->values;
    layers.push_back(std::move(layer));
  }
  if (layers.empty()) {
    throw std::runtime_error("checkpoint: no tensors with prefix '" + std::string(prefix) + "'");
  }
  return Mlp::from_layers(std::move(layers), slope);
}

}  // namespace smart
