#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace batann {

using NodeId = std::uint32_t;
inline constexpr NodeId kInvalidNode = 0xffffffffu;

// Element type of stored vectors. Values are stable: they appear in file
// headers and on the wire.
enum class ElemKind : std::uint8_t { u8 = 0, i8 = 1, f32 = 2 };

inline std::size_t elem_size(ElemKind k) {
  return k == ElemKind::f32 ? 4 : 1;
}

inline const char* elem_kind_name(ElemKind k) {
  switch (k) {
    case ElemKind::u8: return "u8";
    case ElemKind::i8: return "i8";
    case ElemKind::f32: return "f32";
  }
  return "?";
}

inline ElemKind parse_elem_kind(const std::string& s) {
  if (s == "u8" || s == "uint8") return ElemKind::u8;
  if (s == "i8" || s == "int8") return ElemKind::i8;
  if (s == "f32" || s == "float") return ElemKind::f32;
  throw std::runtime_error("unknown element kind: " + s);
}

inline ElemKind elem_kind_from_byte(std::uint8_t b) {
  if (b > 2) throw std::runtime_error("bad element kind byte " + std::to_string(b));
  return static_cast<ElemKind>(b);
}

// ---- little-endian load/store ----

inline void store_u16(std::uint8_t* p, std::uint16_t v) { std::memcpy(p, &v, 2); }
inline void store_u32(std::uint8_t* p, std::uint32_t v) { std::memcpy(p, &v, 4); }
inline void store_u64(std::uint8_t* p, std::uint64_t v) { std::memcpy(p, &v, 8); }
inline void store_f32(std::uint8_t* p, float v) { std::memcpy(p, &v, 4); }

inline std::uint16_t load_u16(const std::uint8_t* p) { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
inline std::uint32_t load_u32(const std::uint8_t* p) { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
inline std::uint64_t load_u64(const std::uint8_t* p) { std::uint64_t v; std::memcpy(&v, p, 8); return v; }
inline float load_f32(const std::uint8_t* p) { float v; std::memcpy(&v, p, 4); return v; }

static_assert(sizeof(float) == 4, "32-bit float required");

// ---- binary file helpers ----

class BinWriter {
 public:
  explicit BinWriter(const std::string& path) : path_(path) {
    f_ = std::fopen(path.c_str(), "wb");
    if (!f_) throw std::runtime_error("cannot open for write: " + path);
  }
  ~BinWriter() { if (f_) std::fclose(f_); }
  BinWriter(const BinWriter&) = delete;
  BinWriter& operator=(const BinWriter&) = delete;

  void write(const void* data, std::size_t n) {
    if (n && std::fwrite(data, 1, n, f_) != n)
      throw std::runtime_error("short write: " + path_);
  }
  void u32(std::uint32_t v) { write(&v, 4); }
  void u64(std::uint64_t v) { write(&v, 8); }
  void f32(float v) { write(&v, 4); }
  void close() {
    if (f_) {
      if (std::fclose(f_) != 0) { f_ = nullptr; throw std::runtime_error("close failed: " + path_); }
      f_ = nullptr;
    }
  }

 private:
  std::string path_;
  std::FILE* f_ = nullptr;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path) : path_(path) {
    f_ = std::fopen(path.c_str(), "rb");
    if (!f_) throw std::runtime_error("cannot open: " + path);
    std::fseek(f_, 0, SEEK_END);
    size_ = static_cast<std::uint64_t>(std::ftell(f_));
    std::fseek(f_, 0, SEEK_SET);
  }
  ~BinReader() { if (f_) std::fclose(f_); }
  BinReader(const BinReader&) = delete;
  BinReader& operator=(const BinReader&) = delete;

  std::uint64_t size() const { return size_; }
  void read(void* out, std::size_t n) {
    if (n && std::fread(out, 1, n, f_) != n)
      throw std::runtime_error("truncated file: " + path_);
  }
  std::uint32_t u32() { std::uint32_t v; read(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; read(&v, 8); return v; }
  float f32() { float v; read(&v, 4); return v; }
  void seek(std::uint64_t off) { std::fseek(f_, static_cast<long>(off), SEEK_SET); }

 private:
  std::string path_;
  std::FILE* f_ = nullptr;
  std::uint64_t size_ = 0;
};

// ---- seeded RNG ----

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }
  // unbiased integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(eng_);
  }
  double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }
  double gaussian() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[below(i)]);
  }

  // k distinct indices out of [0, n), ascending
  std::vector<std::uint32_t> sample_indices(std::uint64_t n, std::uint64_t k) {
    std::vector<std::uint32_t> out;
    out.reserve(k);
    // Floyd's algorithm would need a set; reservoir keeps it allocation-light.
    for (std::uint64_t i = 0; i < n; ++i) {
      std::uint64_t remaining = n - i;
      std::uint64_t needed = k - out.size();
      if (needed == 0) break;
      if (below(remaining) < needed) out.push_back(static_cast<std::uint32_t>(i));
    }
    return out;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace batann
