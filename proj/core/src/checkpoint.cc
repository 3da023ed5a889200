// Copyright 2026 The xtts Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xtts/checkpoint.h"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace xtts {

namespace {

constexpr char kMagic[4] = {'X', 'T', 'C', 'K'};

class Writer {
 public:
  void U32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void U64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void F64(double d) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &d, sizeof(bits));
    U64(bits);
  }
  void Str(const std::string& s) {
    U32(static_cast<std::uint32_t>(s.size()));
    buf_ += s;
  }
  void Raw(const char* p, size_t n) { buf_.append(p, n); }
  std::string Take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  std::uint32_t U32() {
    Need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(Byte(pos_ + i)) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t U64() {
    Need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(Byte(pos_ + i)) << (8 * i);
    pos_ += 8;
    return v;
  }
  double F64() {
    const std::uint64_t bits = U64();
    double d = 0.0;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
  }
  std::string Str() {
    const std::uint32_t n = U32();
    Need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  unsigned char Byte(size_t i) const { return static_cast<unsigned char>(bytes_[i]); }
  void Need(size_t n) const {
    if (pos_ + n > bytes_.size()) throw std::runtime_error("checkpoint truncated");
  }
  const std::string& bytes_;
  size_t pos_ = 4;
};

}  // namespace

const Mat& Checkpoint::Tensor(const std::string& name) const {
  for (const auto& [n, m] : tensors) {
    if (n == name) return m;
  }
  throw std::out_of_range("checkpoint has no tensor " + name);
}

std::string SerializeCheckpoint(const Checkpoint& ckpt) {
  Writer w;
  w.Raw(kMagic, 4);
  w.U32(kCheckpointVersion);
  w.Str(ckpt.kind);
  w.Str(ckpt.meta.ToString());
  w.U32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, m] : ckpt.tensors) {
    w.Str(name);
    w.U32(static_cast<std::uint32_t>(m.rows()));
    w.U32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) w.F64(m.data()[i]);
  }
  return w.Take();
}

Checkpoint DeserializeCheckpoint(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw std::runtime_error("not a checkpoint (bad magic)");
  }
  Reader r(bytes);
  const std::uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.kind = r.Str();
  ckpt.meta = KvConfig::Parse(r.Str());
  const std::uint32_t n = r.U32();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = r.Str();
    const std::uint32_t rows = r.U32();
    const std::uint32_t cols = r.U32();
    Mat m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = r.F64();
    ckpt.tensors.emplace_back(std::move(name), std::move(m));
  }
  if (!r.AtEnd()) throw std::runtime_error("trailing bytes after checkpoint");
  return ckpt;
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string bytes = SerializeCheckpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return DeserializeCheckpoint(ss.str());
}

void AppendParams(const ParamSet& params, Checkpoint& ckpt) {
  for (const Parameter* p : params.All()) ckpt.tensors.emplace_back(p->name, p->value);
}

void RestoreParams(const Checkpoint& ckpt, ParamSet& params) {
  for (Parameter* p : params.All()) {
    const Mat& m = ckpt.Tensor(p->name);
    if (m.rows() != p->value.rows() || m.cols() != p->value.cols()) {
      throw std::runtime_error("checkpoint tensor " + p->name + " has the wrong shape");
    }
    p->value = m;
    p->ZeroGrad();
  }
}

}  // namespace xtts
