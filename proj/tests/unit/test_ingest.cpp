#include <cstdlib>
#include <fstream>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "cohnet/ingest.hpp"
#include "cohnet/mat.hpp"
#include "support/helpers.hpp"
#include "support/mat_writer.hpp"

using namespace cohnet;
using Catch::Matchers::ContainsSubstring;

namespace {

std::vector<std::uint8_t> file_bytes(const std::string& name) { return mat::read_file_bytes(testutil::data_path(name)); }

const mat::MatVariable& var(const mat::MatFile& f, const std::string& name) {
  const auto* v = f.find(name);
  REQUIRE(v != nullptr);
  return *v;
}

}  // namespace

TEST_CASE("2x3 double matrix from a reference writer", "[ingest][mat]") {
  const auto f = mat::load_mat(testutil::data_path("matrix_2x3.mat"));
  const auto& a = var(f, "A");
  CHECK(a.shape == std::vector<std::size_t>{2, 3});
  CHECK(a.element_kind == mat::ArrayClass::kDouble);
  CHECK(a.data == std::vector<double>{1, 4, 2, 5, 3, 6});
  CHECK(a.at(1, 2) == 6.0);
}

TEST_CASE("compressed variant parses identically", "[ingest][mat]") {
  const auto plain = mat::load_mat(testutil::data_path("matrix_2x3.mat"));
  const auto z = mat::load_mat(testutil::data_path("matrix_2x3_z.mat"));
  const auto& a = var(plain, "A");
  const auto& b = var(z, "A");
  CHECK(a.shape == b.shape);
  CHECK(a.data == b.data);
  CHECK(a.element_kind == b.element_kind);
}

TEST_CASE("empty 0x0 matrix", "[ingest][mat]") {
  const auto f = mat::load_mat(testutil::data_path("empty.mat"));
  const auto& e = var(f, "E");
  CHECK(e.shape == std::vector<std::size_t>{0, 0});
  CHECK(e.data.empty());
}

TEST_CASE("mixed storage types, N-d arrays and unsupported classes", "[ingest][mat]") {
  const auto f = mat::load_mat(testutil::data_path("mixed.mat"));
  const auto& i16 = var(f, "i16");
  CHECK(i16.element_kind == mat::ArrayClass::kInt16);
  CHECK(i16.shape == std::vector<std::size_t>{3, 2});
  CHECK(i16.data == std::vector<double>{-3, 250, 32767, 7, -32768, 0});
  const auto& f32 = var(f, "f32");
  CHECK(f32.element_kind == mat::ArrayClass::kSingle);
  CHECK(f32.data == std::vector<double>{0.5, -1.25, 3.0});
  const auto& u8 = var(f, "u8");
  CHECK(u8.element_kind == mat::ArrayClass::kUInt8);
  CHECK(u8.data == std::vector<double>{0, 3, 1, 4, 2, 5});
  const auto& cube = var(f, "cube");
  CHECK(cube.shape == std::vector<std::size_t>{2, 3, 4});
  // numpy C-order arange(24).reshape(2,3,4): element [i][j][k] = 12i + 4j + k,
  // stored column-major: index i + 2j + 6k.
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t k = 0; k < 4; ++k) CHECK(cube.data[i + 2 * j + 6 * k] == double(12 * i + 4 * j + k));
    }
  }
  const auto& c = var(f, "cplx");
  REQUIRE(c.is_complex());
  CHECK(c.data == std::vector<double>{1, 3});
  CHECK(c.imag == std::vector<double>{2, -4});

  std::vector<std::string> unsupported;
  for (const auto& u : f.unsupported) unsupported.push_back(u.name + ":" + u.class_name);
  CHECK_THAT(unsupported, Catch::Matchers::VectorContains(std::string("label:char")));
  CHECK_THAT(unsupported, Catch::Matchers::VectorContains(std::string("cells:cell")));
  CHECK(f.find("label") == nullptr);
}

TEST_CASE("bad header and truncation errors", "[ingest][mat]") {
  auto bytes = file_bytes("matrix_2x3.mat");
  SECTION("short file") {
    std::vector<std::uint8_t> tiny(bytes.begin(), bytes.begin() + 64);
    CHECK_THROWS_AS(mat::parse_mat(tiny), FormatError);
  }
  SECTION("bad endian marker") {
    bytes[126] = 'X';
    CHECK_THROWS_AS(mat::parse_mat(bytes), FormatError);
  }
  SECTION("v7.3 version") {
    bytes[124] = 0x00;
    bytes[125] = 0x02;
    CHECK_THROWS_WITH(mat::parse_mat(bytes), ContainsSubstring("HDF5"));
  }
  SECTION("truncated stream reports a byte offset") {
    bytes.resize(bytes.size() - 20);
    CHECK_THROWS_WITH(mat::parse_mat(bytes), ContainsSubstring("offset"));
    CHECK_THROWS_AS(mat::parse_mat(bytes), FormatError);
  }
  SECTION("corrupt compressed payload") {
    auto z = file_bytes("matrix_2x3_z.mat");
    for (std::size_t i = 140; i < z.size(); ++i) z[i] ^= 0x5A;
    CHECK_THROWS_AS(mat::parse_mat(z), FormatError);
  }
}

TEST_CASE("write-then-parse round trip over types, shapes, compression", "[ingest][mat][property]") {
  using testmat::Type;
  const std::vector<Type> types{Type::kInt8,  Type::kUInt8,  Type::kInt16, Type::kUInt16, Type::kInt32,
                                Type::kUInt32, Type::kInt64, Type::kUInt64, Type::kSingle, Type::kDouble};
  SplitMix64 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const Type t = types[static_cast<std::size_t>(trial) % types.size()];
    const bool compress = (trial / 10) % 2 == 1;
    const std::size_t ndim = 1 + rng.below(4);
    testmat::Var v;
    v.name = "v" + std::to_string(trial);
    v.type = t;
    std::size_t numel = 1;
    for (std::size_t d = 0; d < std::max<std::size_t>(ndim, 2); ++d) {
      v.dims.push_back(static_cast<std::uint32_t>(rng.below(5)));
      numel *= v.dims.back();
    }
    for (std::size_t i = 0; i < numel; ++i) {
      const bool is_signed = t == Type::kInt8 || t == Type::kInt16 || t == Type::kInt32 || t == Type::kInt64;
      double x = static_cast<double>(rng.below(100));
      if (is_signed && rng.below(2)) x = -x;
      if (t == Type::kSingle || t == Type::kDouble) x = x / 4.0;
      v.data.push_back(x);
    }
    std::vector<std::uint8_t> le, be;
    {
      testmat::Writer w(false);
      w.add(v, compress);
      le = w.bytes();
    }
    {
      testmat::Writer w(true);
      w.add(v, compress);
      be = w.bytes();
    }
    const auto a = mat::parse_mat(le);
    const auto b = mat::parse_mat(be);
    const auto& va = var(a, v.name);
    const auto& vb = var(b, v.name);
    std::vector<std::size_t> dims(v.dims.begin(), v.dims.end());
    CHECK(va.shape == dims);
    CHECK(va.data == v.data);
    CHECK(vb.shape == va.shape);
    CHECK(vb.data == va.data);
    CHECK(vb.element_kind == va.element_kind);
  }
}

TEST_CASE("fixture DB2-like subject loads with expected values", "[ingest][db2]") {
  const auto ds = load_db2_subject(testutil::data_path("db2_like_z.mat"));
  CHECK(ds.subject_id == 3);
  REQUIRE(ds.channels.size() == kNumChannels);
  CHECK(ds.num_samples() == 3000);
  // sum, emg[0,0], emg[-1,-1], emg[1234,5] as written by the fixture script
  std::ifstream in(testutil::data_path("db2_like_emg_checksum.txt"));
  std::vector<double> expect;
  double value;
  while (in >> value) expect.push_back(value);
  REQUIRE(expect.size() == 4);
  double sum = 0.0;
  for (const auto& ch : ds.channels) {
    for (double v : ch.samples) sum += v;
  }
  CHECK(sum == Catch::Approx(expect[0]).epsilon(1e-12));
  CHECK(ds.channels[0].samples[0] == expect[1]);
  CHECK(ds.channels[11].samples[2999] == expect[2]);
  CHECK(ds.channels[5].samples[1234] == expect[3]);
  const auto segs = segment_trials(ds);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].begin == 100);
  CHECK(segs[0].end == 1400);
  CHECK(segs[1].gesture == 2);
  CHECK(segs[1].begin == 1600);
}

TEST_CASE("DB2 mapping from in-memory variables", "[ingest][db2]") {
  auto make = [](std::size_t t, std::size_t cols, std::size_t label_len) {
    mat::MatFile f;
    mat::MatVariable emg{"emg", {t, cols}, mat::ArrayClass::kDouble, {}, {}};
    for (std::size_t i = 0; i < t * cols; ++i) emg.data.push_back(static_cast<double>(i));
    f.variables["emg"] = emg;
    mat::MatVariable s{"restimulus", {label_len, 1}, mat::ArrayClass::kInt8, std::vector<double>(label_len, 0.0), {}};
    f.variables["restimulus"] = s;
    s.name = "rerepetition";
    f.variables["rerepetition"] = s;
    return f;
  };
  SECTION("T=4000, 12 channels") {
    const auto ds = load_db2_subject(make(4000, 12, 4000), 7);
    CHECK(ds.subject_id == 7);
    REQUIRE(ds.channels.size() == 12);
    for (const auto& ch : ds.channels) {
      CHECK(ch.size() == 4000);
      CHECK(ch.sample_rate_hz == 2000.0);
    }
    CHECK(ds.channels[2].samples[5] == 2.0 * 4000 + 5);  // column-major
  }
  SECTION("10 columns") { CHECK_THROWS_AS(load_db2_subject(make(4000, 10, 4000)), ShapeError); }
  SECTION("label length mismatch") { CHECK_THROWS_AS(load_db2_subject(make(4000, 12, 3999)), ShapeError); }
  SECTION("missing field is named") {
    auto f = make(100, 12, 100);
    f.variables.erase("rerepetition");
    try {
      load_db2_subject(f);
      FAIL("expected MissingFieldError");
    } catch (const MissingFieldError& e) {
      CHECK(e.field() == "rerepetition|repetition");
    }
  }
  SECTION("raw labels are the fallback") {
    auto f = make(100, 12, 100);
    auto rep = f.variables.at("rerepetition");
    f.variables.erase("rerepetition");
    rep.name = "repetition";
    f.variables["repetition"] = rep;
    CHECK_NOTHROW(load_db2_subject(f));
  }
}

TEST_CASE("CSV input", "[ingest][csv]") {
  std::string header;
  for (int c = 1; c <= 12; ++c) header += "ch" + std::to_string(c) + ",";
  SECTION("three constant rows") {
    std::string text = header + "stimulus,repetition\n";
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 12; ++c) text += "1.5,";
      text += "0,0\n";
    }
    std::istringstream in(text);
    const auto ds = read_csv(in);
    REQUIRE(ds.channels.size() == 12);
    for (const auto& ch : ds.channels) CHECK(ch.samples == std::vector<double>{1.5, 1.5, 1.5});
  }
  SECTION("missing repetition column") {
    std::istringstream in(header + "stimulus\n");
    CHECK_THROWS_AS(read_csv(in), MissingFieldError);
  }
  SECTION("ragged row names its row") {
    std::string text = header + "stimulus,repetition\n1,1,1\n";
    std::istringstream in(text);
    CHECK_THROWS_WITH(read_csv(in), ContainsSubstring("row 2"));
  }
  SECTION("non-numeric cell names row and column") {
    std::string text = header + "stimulus,repetition\n";
    for (int c = 0; c < 12; ++c) text += "0,";
    text += "0,0\n";
    for (int c = 0; c < 12; ++c) text += (c == 4 ? "1,5," : "0,");
    text += "0,0\n";
    std::istringstream in(text);
    CHECK_THROWS_AS(read_csv(in), FormatError);
  }
  SECTION("decimal comma is rejected, not misread") {
    std::string text = header + "stimulus,repetition\n";
    for (int c = 0; c < 12; ++c) text += "\"1,5\",";
    text += "0,0\n";
    std::istringstream in(text);
    CHECK_THROWS_WITH(read_csv(in), ContainsSubstring("ch1"));
  }
  SECTION("quoted fields and CRLF") {
    std::string text = header + "stimulus,repetition\r\n";
    for (int c = 0; c < 12; ++c) text += "\"2.25\",";
    text += "0,0\r\n";
    std::istringstream in(text);
    const auto ds = read_csv(in);
    CHECK(ds.channels[11].samples == std::vector<double>{2.25});
  }
}

TEST_CASE("CSV round trip of a synthetic dataset", "[ingest][csv][property]") {
  const auto ds = testutil::complete_dataset(2, 2, 1250, 17, 5);
  std::stringstream buf;
  write_csv(buf, ds);
  const auto back = read_csv(buf, ds.subject_id);
  REQUIRE(back.channels.size() == ds.channels.size());
  for (std::size_t c = 0; c < ds.channels.size(); ++c) CHECK(back.channels[c].samples == ds.channels[c].samples);
  CHECK(back.stimulus == ds.stimulus);
  CHECK(back.repetition == ds.repetition);
}
