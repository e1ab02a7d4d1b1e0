#pragma once

// Reader for the numeric subset of MATLAB level-5 MAT-files: real and complex
// numeric matrices of any dimensionality, stored plain or inside zlib
// compressed (miCOMPRESSED) envelopes, in either byte order. Cells, structs,
// objects, chars and sparse arrays are reported by name and class but not
// decoded. v7.3 (HDF5) files are rejected at the header.

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "cohnet/error.hpp"

namespace cohnet::mat {

template <typename U>
constexpr U byte_swap(U v) noexcept {
  static_assert(std::is_unsigned_v<U>);
  U out = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out = static_cast<U>((out << 8) | (v & 0xFF));
    v = static_cast<U>(v >> 8);
  }
  return out;
}

// Storage types of tagged data elements.
enum class DataType : std::uint32_t {
  kInt8 = 1,
  kUInt8 = 2,
  kInt16 = 3,
  kUInt16 = 4,
  kInt32 = 5,
  kUInt32 = 6,
  kSingle = 7,
  kDouble = 9,
  kInt64 = 12,
  kUInt64 = 13,
  kMatrix = 14,
  kCompressed = 15,
  kUtf8 = 16,
  kUtf16 = 17,
  kUtf32 = 18,
};

// Declared array class of a miMATRIX element.
enum class ArrayClass : std::uint8_t {
  kCell = 1,
  kStruct = 2,
  kObject = 3,
  kChar = 4,
  kSparse = 5,
  kDouble = 6,
  kSingle = 7,
  kInt8 = 8,
  kUInt8 = 9,
  kInt16 = 10,
  kUInt16 = 11,
  kInt32 = 12,
  kUInt32 = 13,
  kInt64 = 14,
  kUInt64 = 15,
};

inline bool is_numeric(ArrayClass c) {
  return static_cast<int>(c) >= static_cast<int>(ArrayClass::kDouble) &&
         static_cast<int>(c) <= static_cast<int>(ArrayClass::kUInt64);
}

inline const char* class_name(ArrayClass c) {
  switch (c) {
    case ArrayClass::kCell: return "cell";
    case ArrayClass::kStruct: return "struct";
    case ArrayClass::kObject: return "object";
    case ArrayClass::kChar: return "char";
    case ArrayClass::kSparse: return "sparse";
    case ArrayClass::kDouble: return "double";
    case ArrayClass::kSingle: return "single";
    case ArrayClass::kInt8: return "int8";
    case ArrayClass::kUInt8: return "uint8";
    case ArrayClass::kInt16: return "int16";
    case ArrayClass::kUInt16: return "uint16";
    case ArrayClass::kInt32: return "int32";
    case ArrayClass::kUInt32: return "uint32";
    case ArrayClass::kInt64: return "int64";
    case ArrayClass::kUInt64: return "uint64";
  }
  return "unknown";
}

// A decoded numeric variable. `data` is column-major, converted to double
// regardless of storage type (64-bit integers beyond 2^53 lose precision).
struct MatVariable {
  std::string name;
  std::vector<std::size_t> shape;
  ArrayClass element_kind{ArrayClass::kDouble};
  std::vector<double> data;
  std::vector<double> imag;  // empty unless the array is complex

  std::size_t numel() const {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
  bool is_complex() const { return !imag.empty(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const {
    if (shape.size() < 2) return shape.empty() ? 0 : 1;
    std::size_t n = 1;
    for (std::size_t i = 1; i < shape.size(); ++i) n *= shape[i];
    return n;
  }
  double at(std::size_t row, std::size_t col) const { return data[col * rows() + row]; }
};

struct UnsupportedVariable {
  std::string name;
  std::string class_name;
};

struct MatFile {
  std::string header_text;
  std::map<std::string, MatVariable> variables;
  std::vector<UnsupportedVariable> unsupported;

  const MatVariable* find(const std::string& name) const {
    auto it = variables.find(name);
    return it == variables.end() ? nullptr : &it->second;
  }
};

namespace detail {

class Reader {
 public:
  // `base` is the absolute file offset of bytes[0], so errors inside
  // decompressed envelopes still point somewhere meaningful.
  Reader(std::span<const std::uint8_t> bytes, bool swap, std::size_t base)
      : bytes_(bytes), swap_(swap), base_(base) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool at_end() const { return pos_ >= bytes_.size(); }
  std::size_t abs_offset() const { return base_ + pos_; }

  void require(std::size_t n, const char* what) const {
    if (n > remaining()) {
      throw FormatError(std::string("truncated MAT data reading ") + what + " at byte offset " +
                        std::to_string(abs_offset()) + ": need " + std::to_string(n) +
                        " bytes, have " + std::to_string(remaining()));
    }
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    require(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  void skip(std::size_t n, const char* what) { take(n, what); }

  std::uint32_t u32(const char* what) {
    auto s = take(4, what);
    std::uint32_t v;
    std::memcpy(&v, s.data(), 4);
    return swap_ ? byte_swap(v) : v;
  }

  std::uint16_t u16(const char* what) {
    auto s = take(2, what);
    std::uint16_t v;
    std::memcpy(&v, s.data(), 2);
    return swap_ ? byte_swap(v) : v;
  }

  bool swap() const { return swap_; }

 private:
  std::span<const std::uint8_t> bytes_;
  bool swap_;
  std::size_t base_;
  std::size_t pos_{0};
};

struct Element {
  DataType type;
  std::span<const std::uint8_t> payload;
  std::size_t offset;  // absolute offset of the payload
};

inline std::size_t pad8(std::size_t n) { return (n + 7) & ~static_cast<std::size_t>(7); }

// Reads one tag + payload, handling the packed "small data element" form.
inline Element read_element(Reader& r, bool pad_after = true) {
  const std::size_t tag_offset = r.abs_offset();
  const std::uint32_t first = r.u32("element tag");
  if ((first >> 16) != 0) {
    const auto type = static_cast<DataType>(first & 0xFFFF);
    const std::uint32_t nbytes = first >> 16;
    if (nbytes > 4) {
      throw FormatError("small data element at byte offset " + std::to_string(tag_offset) +
                        " claims " + std::to_string(nbytes) + " bytes");
    }
    const std::size_t off = r.abs_offset();
    auto four = r.take(4, "small element payload");
    return {type, four.first(nbytes), off};
  }
  const auto type = static_cast<DataType>(first);
  const std::uint32_t nbytes = r.u32("element size");
  const std::size_t off = r.abs_offset();
  auto payload = r.take(nbytes, "element payload");
  if (pad_after && type != DataType::kCompressed) {
    const std::size_t pad = pad8(nbytes) - nbytes;
    // The final element of a stream may legally omit its padding.
    r.skip(std::min(pad, r.remaining()), "element padding");
  }
  return {type, payload, off};
}

inline std::size_t type_size(DataType t) {
  switch (t) {
    case DataType::kInt8:
    case DataType::kUInt8:
    case DataType::kUtf8: return 1;
    case DataType::kInt16:
    case DataType::kUInt16:
    case DataType::kUtf16: return 2;
    case DataType::kInt32:
    case DataType::kUInt32:
    case DataType::kSingle:
    case DataType::kUtf32: return 4;
    case DataType::kDouble:
    case DataType::kInt64:
    case DataType::kUInt64: return 8;
    default: return 0;
  }
}

template <typename T>
T load(const std::uint8_t* p, bool swap) {
  using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
            std::conditional_t<sizeof(T) == 2, std::uint16_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
  U u;
  std::memcpy(&u, p, sizeof(U));
  if (swap && sizeof(U) > 1) u = byte_swap(u);
  return std::bit_cast<T>(u);
}

inline std::vector<double> decode_numeric(const Element& e, bool swap) {
  const std::size_t w = type_size(e.type);
  if (w == 0 || e.type == DataType::kUtf8 || e.type == DataType::kUtf16 ||
      e.type == DataType::kUtf32) {
    throw FormatError("non-numeric storage type " + std::to_string(static_cast<unsigned>(e.type)) +
                      " for numeric data at byte offset " + std::to_string(e.offset));
  }
  if (e.payload.size() % w != 0) {
    throw FormatError("numeric payload at byte offset " + std::to_string(e.offset) +
                      " is not a whole number of elements");
  }
  const std::size_t n = e.payload.size() / w;
  std::vector<double> out(n);
  const std::uint8_t* p = e.payload.data();
  for (std::size_t i = 0; i < n; ++i, p += w) {
    switch (e.type) {
      case DataType::kInt8: out[i] = load<std::int8_t>(p, swap); break;
      case DataType::kUInt8: out[i] = load<std::uint8_t>(p, swap); break;
      case DataType::kInt16: out[i] = load<std::int16_t>(p, swap); break;
      case DataType::kUInt16: out[i] = load<std::uint16_t>(p, swap); break;
      case DataType::kInt32: out[i] = load<std::int32_t>(p, swap); break;
      case DataType::kUInt32: out[i] = load<std::uint32_t>(p, swap); break;
      case DataType::kSingle: out[i] = load<float>(p, swap); break;
      case DataType::kDouble: out[i] = load<double>(p, swap); break;
      case DataType::kInt64: out[i] = static_cast<double>(load<std::int64_t>(p, swap)); break;
      case DataType::kUInt64: out[i] = static_cast<double>(load<std::uint64_t>(p, swap)); break;
      default: break;
    }
  }
  return out;
}

inline std::vector<std::uint8_t> inflate_all(std::span<const std::uint8_t> in, std::size_t offset) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw FormatError("zlib initialisation failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  std::vector<std::uint8_t> out;
  std::uint8_t chunk[1 << 15];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk;
    zs.avail_out = sizeof(chunk);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw FormatError("corrupt compressed element at byte offset " + std::to_string(offset) +
                        " (zlib code " + std::to_string(rc) + ")");
    }
    out.insert(out.end(), chunk, chunk + (sizeof(chunk) - zs.avail_out));
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw FormatError("truncated compressed element at byte offset " + std::to_string(offset));
    }
  }
  inflateEnd(&zs);
  return out;
}

inline void parse_matrix(const Element& e, bool swap, MatFile& file) {
  Reader r(e.payload, swap, e.offset);
  if (r.at_end()) return;  // empty miMATRIX, only legal inside cells

  const Element flags = read_element(r);
  if (flags.type != DataType::kUInt32 || flags.payload.size() < 8) {
    throw FormatError("malformed array flags at byte offset " + std::to_string(flags.offset));
  }
  const std::uint32_t flag_word = load<std::uint32_t>(flags.payload.data(), swap);
  const auto cls = static_cast<ArrayClass>(flag_word & 0xFF);
  const bool complex = (flag_word & 0x0800) != 0;

  const Element dims = read_element(r);
  if (dims.type != DataType::kInt32 || dims.payload.size() % 4 != 0) {
    throw FormatError("malformed dimensions at byte offset " + std::to_string(dims.offset));
  }
  std::vector<std::size_t> shape;
  for (std::size_t i = 0; i < dims.payload.size(); i += 4) {
    const std::int32_t d = load<std::int32_t>(dims.payload.data() + i, swap);
    if (d < 0) throw FormatError("negative dimension at byte offset " + std::to_string(dims.offset));
    shape.push_back(static_cast<std::size_t>(d));
  }

  const Element name_el = read_element(r);
  if (name_el.type != DataType::kInt8 && name_el.type != DataType::kUInt8) {
    throw FormatError("malformed array name at byte offset " + std::to_string(name_el.offset));
  }
  std::string name(name_el.payload.begin(), name_el.payload.end());

  if (!is_numeric(cls)) {
    file.unsupported.push_back({name, class_name(cls)});
    return;
  }

  MatVariable var;
  var.name = name;
  var.shape = std::move(shape);
  var.element_kind = cls;
  var.data = decode_numeric(read_element(r), swap);
  if (var.data.size() != var.numel()) {
    throw FormatError("variable '" + name + "': " + std::to_string(var.data.size()) +
                      " values for declared " + std::to_string(var.numel()) + " elements");
  }
  if (complex) {
    var.imag = decode_numeric(read_element(r), swap);
    if (var.imag.size() != var.numel()) {
      throw FormatError("variable '" + name + "': imaginary part has wrong length");
    }
  }
  file.variables[name] = std::move(var);
}

inline void parse_element(const Element& e, bool swap, MatFile& file) {
  if (e.type == DataType::kCompressed) {
    const auto inflated = inflate_all(e.payload, e.offset);
    Reader inner(inflated, swap, e.offset);
    while (!inner.at_end()) parse_element(read_element(inner), swap, file);
  } else if (e.type == DataType::kMatrix) {
    parse_matrix(e, swap, file);
  }
  // Other top-level element types carry no variables and are skipped.
}

}  // namespace detail

inline constexpr std::size_t kHeaderSize = 128;

inline MatFile parse_mat(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) {
    throw FormatError("not a MAT-file: " + std::to_string(bytes.size()) +
                      " bytes is shorter than the 128-byte header");
  }
  const char e0 = static_cast<char>(bytes[126]);
  const char e1 = static_cast<char>(bytes[127]);
  bool file_little;
  if (e0 == 'I' && e1 == 'M') {
    file_little = true;
  } else if (e0 == 'M' && e1 == 'I') {
    file_little = false;
  } else {
    throw FormatError("not a level-5 MAT-file: bad endian indicator");
  }
  const bool swap = file_little != (std::endian::native == std::endian::little);
  std::uint16_t version;
  std::memcpy(&version, bytes.data() + 124, 2);
  if (swap) version = byte_swap(version);
  if (version != 0x0100) {
    throw FormatError("unsupported MAT-file version 0x" + [&] {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "%04x", version);
      return std::string(buf);
    }() + (version == 0x0200 ? " (v7.3/HDF5 files are not supported)" : ""));
  }

  MatFile file;
  std::size_t text_end = 116;
  while (text_end > 0 && (bytes[text_end - 1] == ' ' || bytes[text_end - 1] == 0)) --text_end;
  file.header_text.assign(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(text_end));

  detail::Reader r(bytes.subspan(kHeaderSize), swap, kHeaderSize);
  while (!r.at_end()) detail::parse_element(detail::read_element(r), swap, file);
  return file;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline MatFile load_mat(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return parse_mat(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace cohnet::mat
