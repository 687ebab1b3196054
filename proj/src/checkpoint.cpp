// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0

#include "adnt/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "adnt/errors.hpp"

namespace adnt {

namespace {

constexpr std::string_view kMagic = "ADNTCKPT";
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::string& out, T value) {
  static_assert(std::is_integral_v<T> || std::is_floating_point_v<T>);
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>(bits & 0xffU));
    bits >>= 8;
  }
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    need(sizeof(U));
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      bits |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return std::bit_cast<T>(bits);
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ParseError("checkpoint: truncated", 0);
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

using Sections = std::map<std::string, Matrix, std::less<>>;

void add_mlp(Sections& s, const std::string& prefix, const MlpParams& p) {
  const auto slots = p.slots();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    s.emplace(prefix + "." + std::string(MlpParams::kSlotNames[i]), *slots[i]);
  }
}

const Matrix& need(const Sections& s, const std::string& name) {
  const auto it = s.find(name);
  if (it == s.end()) throw ParseError("checkpoint: missing section " + name, 0);
  return it->second;
}

MlpParams read_mlp(const Sections& s, const std::string& prefix) {
  MlpParams p;
  auto slots = p.slots();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    *slots[i] = need(s, prefix + "." + std::string(MlpParams::kSlotNames[i]));
  }
  p.validate(prefix);
  return p;
}

double scalar(const Sections& s, const std::string& name) {
  const Matrix& m = need(s, name);
  if (m.size() != 1) throw ParseError("checkpoint: " + name + " must be 1x1", 0);
  return m(0, 0);
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
  Sections s;
  s.emplace("meta.dims", Matrix(1, 5, {static_cast<double>(ck.dims.input_dim), static_cast<double>(ck.dims.hidden_dim),
                                       static_cast<double>(ck.dims.feature_dim),
                                       static_cast<double>(ck.dims.bottleneck_dim),
                                       static_cast<double>(ck.dims.num_classes)}));
  s.emplace("meta.feature_scale", Matrix(1, 1, ck.dims.feature_scale));
  s.emplace("meta.num_domains", Matrix(1, 1, static_cast<double>(ck.num_domains)));
  add_mlp(s, "extractor", ck.extractor);
  add_mlp(s, "classifier", ck.classifier);
  if (ck.cadm) {
    s.emplace("cadm.query_proj", ck.cadm->query_proj);
    s.emplace("cadm.kv_proj", ck.cadm->kv_proj);
    add_mlp(s, "cadm.mlp", ck.cadm->mlp);
  }
  if (ck.bank) {
    s.emplace("bank.alpha", Matrix(1, 1, ck.bank->alpha()));
    for (std::size_t g = 0; g < ck.bank->num_domains(); ++g) {
      if (ck.bank->initialized(g)) s.emplace("bank." + std::to_string(g), ck.bank->centroid(g));
    }
  }
  if (ck.memory) {
    s.emplace("memory.beta", Matrix(1, 1, ck.memory->beta()));
    s.emplace("memory.centers", ck.memory->centers());
  }

  std::string out(kMagic);
  put(out, kVersion);
  put(out, static_cast<std::uint32_t>(s.size()));
  for (const auto& [name, m] : s) {
    put(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put(out, static_cast<std::uint64_t>(m.rows()));
    put(out, static_cast<std::uint64_t>(m.cols()));
    for (double v : m.values()) put(out, v);
  }
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(kMagic.size()) != kMagic) throw ParseError("checkpoint: bad magic", 0);
  const auto version = in.get<std::uint32_t>();
  if (version != kVersion) throw ParseError("checkpoint: unsupported version " + std::to_string(version), 0);
  const auto count = in.get<std::uint32_t>();
  Sections s;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = in.get<std::uint32_t>();
    std::string name(in.take(len));
    const auto rows = in.get<std::uint64_t>();
    const auto cols = in.get<std::uint64_t>();
    if (cols != 0 && rows > (bytes.size() / 8) / cols) throw ParseError("checkpoint: truncated", 0);
    std::vector<double> values(rows * cols);
    for (double& v : values) v = in.get<double>();
    s.emplace(std::move(name), Matrix(rows, cols, std::move(values)));
  }
  if (!in.done()) throw ParseError("checkpoint: trailing bytes", 0);

  Checkpoint ck;
  const Matrix& dims = need(s, "meta.dims");
  if (dims.size() != 5) throw ParseError("checkpoint: meta.dims must be 1x5", 0);
  ck.dims = {static_cast<std::size_t>(dims(0, 0)), static_cast<std::size_t>(dims(0, 1)),
             static_cast<std::size_t>(dims(0, 2)), static_cast<std::size_t>(dims(0, 3)),
             static_cast<std::size_t>(dims(0, 4))};
  ck.dims.feature_scale = scalar(s, "meta.feature_scale");
  if (!std::isfinite(ck.dims.feature_scale) || ck.dims.feature_scale < 0.0) {
    throw ParseError("checkpoint: meta.feature_scale must be finite and >= 0", 0);
  }
  ck.num_domains = static_cast<std::size_t>(scalar(s, "meta.num_domains"));
  ck.extractor = read_mlp(s, "extractor");
  ck.classifier = read_mlp(s, "classifier");
  if (s.contains("cadm.query_proj")) {
    CadmParams p;
    p.query_proj = need(s, "cadm.query_proj");
    p.kv_proj = need(s, "cadm.kv_proj");
    p.mlp = read_mlp(s, "cadm.mlp");
    p.validate();
    ck.cadm = std::move(p);
  }
  if (s.contains("bank.alpha")) {
    CentroidBank bank(ck.num_domains, scalar(s, "bank.alpha"));
    for (std::size_t g = 0; g < ck.num_domains; ++g) {
      if (auto it = s.find("bank." + std::to_string(g)); it != s.end()) bank.set(g, it->second);
    }
    ck.bank = std::move(bank);
  }
  if (s.contains("memory.centers")) {
    ck.memory = ClassMemory(need(s, "memory.centers"), scalar(s, "memory.beta"));
  }
  return ck;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path.string(), 0);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return deserialize_checkpoint(buffer.str());
}

}  // namespace adnt
