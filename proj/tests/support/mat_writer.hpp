#pragma once

// Minimal level-5 MAT writer for tests: numeric arrays of any storage type,
// either byte order, optional zlib compression per variable.

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace testmat {

enum class Type { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kInt64, kUInt64, kSingle, kDouble };

struct Var {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<double> data;  // column-major
  Type type{Type::kDouble};
  std::vector<double> imag;  // complex when nonempty
};

class Writer {
 public:
  explicit Writer(bool big_endian = false) : big_(big_endian) {}

  void add(const Var& v, bool compress = false) {
    auto m = matrix(v);
    if (!compress) {
      append(out_, m);
      return;
    }
    uLongf len = compressBound(static_cast<uLong>(m.size()));
    std::vector<std::uint8_t> z(len);
    if (compress2(z.data(), &len, m.data(), static_cast<uLong>(m.size()), 6) != Z_OK) {
      throw std::runtime_error("compress2 failed");
    }
    z.resize(len);
    u32(out_, 15);
    u32(out_, static_cast<std::uint32_t>(z.size()));
    append(out_, z);  // compressed elements are not padded
  }

  // Raw top-level element, for malformed-input tests.
  void add_raw(const std::vector<std::uint8_t>& bytes) { append(out_, bytes); }

  // A char array the reader must report as unsupported.
  void add_char(const std::string& name, const std::string& text) {
    std::vector<std::uint8_t> body;
    element(body, 6, flags(4, false));
    std::vector<std::uint8_t> dims;
    i32(dims, 1);
    i32(dims, static_cast<std::int32_t>(text.size()));
    element(body, 5, dims);
    element(body, 1, {name.begin(), name.end()});
    std::vector<std::uint8_t> chars;
    for (char c : text) u16(chars, static_cast<std::uint16_t>(c));
    element(body, 17, chars);
    std::vector<std::uint8_t> m;
    element(m, 14, body);
    append(out_, m);
  }

  std::vector<std::uint8_t> bytes() const {
    std::vector<std::uint8_t> f(128, ' ');
    const std::string text = "MATLAB 5.0 MAT-file, written by test writer";
    std::memcpy(f.data(), text.data(), text.size());
    for (int i = 116; i < 124; ++i) f[i] = 0;
    if (big_) {
      f[124] = 0x01;
      f[125] = 0x00;
      f[126] = 'M';
      f[127] = 'I';
    } else {
      f[124] = 0x00;
      f[125] = 0x01;
      f[126] = 'I';
      f[127] = 'M';
    }
    f.insert(f.end(), out_.begin(), out_.end());
    return f;
  }

 private:
  bool big_;
  std::vector<std::uint8_t> out_;

  static void append(std::vector<std::uint8_t>& dst, const std::vector<std::uint8_t>& src) {
    dst.insert(dst.end(), src.begin(), src.end());
  }

  template <typename U>
  void put(std::vector<std::uint8_t>& dst, U v) const {
    std::uint8_t b[sizeof(U)];
    std::memcpy(b, &v, sizeof(U));
    const bool native_little = std::endian::native == std::endian::little;
    if (big_ == native_little) {
      for (std::size_t i = sizeof(U); i-- > 0;) dst.push_back(b[i]);
    } else {
      for (std::size_t i = 0; i < sizeof(U); ++i) dst.push_back(b[i]);
    }
  }
  void u16(std::vector<std::uint8_t>& d, std::uint16_t v) const { put(d, v); }
  void u32(std::vector<std::uint8_t>& d, std::uint32_t v) const { put(d, v); }
  void i32(std::vector<std::uint8_t>& d, std::int32_t v) const { put(d, static_cast<std::uint32_t>(v)); }

  void element(std::vector<std::uint8_t>& dst, std::uint32_t type, const std::vector<std::uint8_t>& payload) const {
    u32(dst, type);
    u32(dst, static_cast<std::uint32_t>(payload.size()));
    append(dst, payload);
    while (dst.size() % 8) dst.push_back(0);
  }

  std::vector<std::uint8_t> flags(std::uint32_t cls, bool complex) const {
    std::vector<std::uint8_t> f;
    u32(f, cls | (complex ? 0x0800u : 0u));
    u32(f, 0);
    return f;
  }

  static std::uint32_t mi_type(Type t) {
    switch (t) {
      case Type::kInt8: return 1;
      case Type::kUInt8: return 2;
      case Type::kInt16: return 3;
      case Type::kUInt16: return 4;
      case Type::kInt32: return 5;
      case Type::kUInt32: return 6;
      case Type::kSingle: return 7;
      case Type::kDouble: return 9;
      case Type::kInt64: return 12;
      case Type::kUInt64: return 13;
    }
    return 9;
  }
  static std::uint32_t mx_class(Type t) {
    switch (t) {
      case Type::kDouble: return 6;
      case Type::kSingle: return 7;
      case Type::kInt8: return 8;
      case Type::kUInt8: return 9;
      case Type::kInt16: return 10;
      case Type::kUInt16: return 11;
      case Type::kInt32: return 12;
      case Type::kUInt32: return 13;
      case Type::kInt64: return 14;
      case Type::kUInt64: return 15;
    }
    return 6;
  }

  std::vector<std::uint8_t> encode(Type t, const std::vector<double>& v) const {
    std::vector<std::uint8_t> p;
    for (double x : v) {
      switch (t) {
        case Type::kInt8: p.push_back(static_cast<std::uint8_t>(static_cast<std::int8_t>(x))); break;
        case Type::kUInt8: p.push_back(static_cast<std::uint8_t>(x)); break;
        case Type::kInt16: put(p, static_cast<std::uint16_t>(static_cast<std::int16_t>(x))); break;
        case Type::kUInt16: put(p, static_cast<std::uint16_t>(x)); break;
        case Type::kInt32: put(p, static_cast<std::uint32_t>(static_cast<std::int32_t>(x))); break;
        case Type::kUInt32: put(p, static_cast<std::uint32_t>(x)); break;
        case Type::kInt64: put(p, static_cast<std::uint64_t>(static_cast<std::int64_t>(x))); break;
        case Type::kUInt64: put(p, static_cast<std::uint64_t>(x)); break;
        case Type::kSingle: put(p, std::bit_cast<std::uint32_t>(static_cast<float>(x))); break;
        case Type::kDouble: put(p, std::bit_cast<std::uint64_t>(x)); break;
      }
    }
    return p;
  }

  std::vector<std::uint8_t> matrix(const Var& v) const {
    std::vector<std::uint8_t> body;
    element(body, 6, flags(mx_class(v.type), !v.imag.empty()));
    std::vector<std::uint8_t> dims;
    for (auto d : v.dims) i32(dims, static_cast<std::int32_t>(d));
    element(body, 5, dims);
    element(body, 1, {v.name.begin(), v.name.end()});
    element(body, mi_type(v.type), encode(v.type, v.data));
    if (!v.imag.empty()) element(body, mi_type(v.type), encode(v.type, v.imag));
    std::vector<std::uint8_t> m;
    element(m, 14, body);
    return m;
  }
};

}  // namespace testmat
