#include <cmath>
#include <cstring>
#include <limits>

#include "doctest.h"
#include "minilake/codec.hpp"
#include "minilake/csv.hpp"
#include "minilake/error.hpp"
#include "minilake/sha256.hpp"
#include "minilake/table.hpp"
#include "test_util.hpp"

using namespace minilake;
using namespace testutil;

namespace {

const Schema kMixedSchema{{
    {"id", ColumnType::Int64, false},
    {"name", ColumnType::String, true},
    {"score", ColumnType::Float64, true},
    {"ok", ColumnType::Bool, true},
}};

Table mixed_fixture() {
  return make_table(
      kMixedSchema,
      {{I(1), S("alpha"), D(1.5), B(true)},
       {I(2), N(), D(std::numeric_limits<double>::quiet_NaN()), B(false)},
       {I(3), S(""), D(-0.0), N()},
       {I(-5), S("héllo"), D(-2.5), B(true)},
       {I(9223372036854775807LL), S("z"),
        D(std::numeric_limits<double>::infinity()), B(false)}});
}

std::string unhex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    return c - 'a' + 10;
  };
  std::string out;
  for (size_t i = 0; i < hex.size(); i += 2) {
    out.push_back(static_cast<char>(nibble(hex[i]) * 16 + nibble(hex[i + 1])));
  }
  return out;
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

// Hand-built encoding of a one-column STRING table, so decode rejection
// paths can be probed byte by byte.
std::string handmade_string_table(uint8_t bitmap, uint32_t len,
                                  std::string_view payload) {
  std::string schema = R"({"columns":[{"name":"s","nullable":true,"type":"STRING"}]})";
  std::string out = "MLT1";
  put_u32(out, static_cast<uint32_t>(schema.size()));
  out += schema;
  put_u64(out, 1);
  out.push_back(static_cast<char>(bitmap));
  put_u32(out, len);
  out += payload;
  return out;
}

}  // namespace

TEST_CASE("encoding matches the golden digests") {
  // Digests computed with an out-of-repo encoder written against the
  // documented layout (magic, LE lengths, LSB-first null bitmaps,
  // canonical-NaN float slots).
  std::string bytes = encode_table(mixed_fixture());
  CHECK(bytes.size() == 338);
  CHECK(sha256_hex(bytes) ==
        "bd19eebb083e31d15f119e1b3b82829f2f5546e5b99aab1d713c4c511f3647c6");

  Table empty = Table::empty(Schema{{{"a", ColumnType::String, false},
                                     {"b", ColumnType::Float64, true}}});
  std::string empty_bytes = encode_table(empty);
  CHECK(empty_bytes.size() == 121);
  CHECK(sha256_hex(empty_bytes) ==
        "abb40a60233636550ac4d852a2fc41b781600b7678e9f842e3de808d4c7512ce");
}

TEST_CASE("a tiny table encodes byte-for-byte as expected") {
  Table t = make_table(Schema{{{"x", ColumnType::Int64, true}}},
                       {{I(7)}, {N()}});
  std::string expected = unhex(
      "4d4c5431390000007b22636f6c756d6e73223a5b7b226e616d65223a2278222c226e75"
      "6c6c61626c65223a747275652c2274797065223a22494e543634227d5d7d0200000000"
      "0000000207000000000000000000000000000000");
  CHECK(encode_table(t) == expected);
  CHECK(decode_table(expected).equals(t));
}

TEST_CASE("schema JSON is canonical") {
  CHECK(encode_schema(kMixedSchema) ==
        R"({"columns":[{"name":"id","nullable":false,"type":"INT64"},)"
        R"({"name":"name","nullable":true,"type":"STRING"},)"
        R"({"name":"score","nullable":true,"type":"FLOAT64"},)"
        R"({"name":"ok","nullable":true,"type":"BOOL"}]})");
  CHECK(decode_schema(encode_schema(kMixedSchema)) == kMixedSchema);
  CHECK_THROWS_AS(decode_schema("[1,2]"), Error);
  CHECK_THROWS_AS(decode_schema("{\"columns\":3}"), Error);
  CHECK_THROWS_AS(decode_schema("not json"), Error);
  CHECK_THROWS_AS(
      decode_schema(R"({"columns":[{"name":"a","nullable":false,"type":"INT32"}]})"),
      Error);
}

TEST_CASE("decode(encode(t)) preserves every cell") {
  Table t = mixed_fixture();
  Table back = decode_table(encode_table(t));
  CHECK(back.equals(t));
  CHECK(back.schema == t.schema);

  // Distinctions that matter: null vs empty string, -0.0 vs 0.0.
  CHECK(is_null(back.columns[1][1]));
  CHECK(back.columns[1][2] == CellValue{std::string{}});
  CHECK(float_bits(std::get<double>(back.columns[2][2])) ==
        0x8000000000000000ULL);
  CHECK(std::isinf(std::get<double>(back.columns[2][4])));
}

TEST_CASE("every NaN payload encodes as the canonical quiet NaN") {
  uint64_t weird = 0x7FF0000000000001ULL;  // signalling-ish payload
  double nan_in;
  std::memcpy(&nan_in, &weird, sizeof(nan_in));
  REQUIRE(std::isnan(nan_in));

  Table a = make_table(Schema{{{"v", ColumnType::Float64, true}}}, {{D(nan_in)}});
  Table b = make_table(Schema{{{"v", ColumnType::Float64, true}}},
                       {{D(std::nan(""))}});
  std::string ea = encode_table(a);
  std::string eb = encode_table(b);
  CHECK(ea == eb);  // logically equal tables, byte-equal encodings

  uint64_t slot = 0;
  std::memcpy(&slot, ea.data() + ea.size() - 8, 8);
  CHECK(slot == 0x7FF8000000000000ULL);
  CHECK(float_bits(std::get<double>(decode_table(ea).columns[0][0])) ==
        0x7FF8000000000000ULL);
}

TEST_CASE("decode rejects malformed bytes") {
  std::string good = encode_table(mixed_fixture());

  SUBCASE("bad magic") {
    std::string bad = good;
    bad[0] = 'X';
    CHECK_THROWS_WITH_AS(decode_table(bad), doctest::Contains("magic"), Error);
  }
  SUBCASE("truncated") {
    CHECK_THROWS_WITH_AS(decode_table(std::string_view(good).substr(0, good.size() - 3)),
                         doctest::Contains("truncated"), Error);
    CHECK_THROWS_AS(decode_table("ML"), Error);
    CHECK_THROWS_AS(decode_table(""), Error);
  }
  SUBCASE("trailing garbage") {
    CHECK_THROWS_WITH_AS(decode_table(good + "x"), doctest::Contains("trailing"),
                         Error);
  }
  SUBCASE("bool slot out of range") {
    std::string bad = good;
    bad[bad.size() - 1] = '\x02';  // last byte is the final bool slot
    CHECK_THROWS_WITH_AS(decode_table(bad), doctest::Contains("bool"), Error);
  }
  SUBCASE("null string slot with payload") {
    CHECK_THROWS_WITH_AS(decode_table(handmade_string_table(0x01, 1, "x")),
                         doctest::Contains("null string"), Error);
    // The same bytes with the null bit clear are fine.
    Table ok = decode_table(handmade_string_table(0x00, 1, "x"));
    CHECK(ok.columns[0][0] == CellValue{std::string("x")});
  }
  SUBCASE("string payload must be UTF-8") {
    CHECK_THROWS_WITH_AS(decode_table(handmade_string_table(0x00, 2, "\xff\xfe")),
                         doctest::Contains("UTF-8"), Error);
  }
}

TEST_CASE("utf8_valid") {
  CHECK(utf8_valid(""));
  CHECK(utf8_valid("plain ascii"));
  CHECK(utf8_valid("h\xc3\xa9llo"));               // 2-byte
  CHECK(utf8_valid("\xe2\x82\xac"));               // 3-byte euro sign
  CHECK(utf8_valid("\xf0\x9f\x98\x80"));           // 4-byte emoji
  CHECK_FALSE(utf8_valid("\xc3"));                 // truncated sequence
  CHECK_FALSE(utf8_valid("\xc3\x28"));             // bad continuation
  CHECK_FALSE(utf8_valid("\xc0\x80"));             // overlong NUL
  CHECK_FALSE(utf8_valid("\xe0\x80\xaf"));         // overlong slash
  CHECK_FALSE(utf8_valid("\xed\xa0\x80"));         // UTF-16 surrogate
  CHECK_FALSE(utf8_valid("\xf4\x90\x80\x80"));     // beyond U+10FFFF
  CHECK_FALSE(utf8_valid("\xff"));                 // invalid lead byte
  CHECK_FALSE(utf8_valid("ok\x80"));               // stray continuation
}

TEST_CASE("table validate catches shape and typing mistakes") {
  Schema s{{{"a", ColumnType::Int64, false}}};
  Schema dup{{{"a", ColumnType::Int64, false}, {"a", ColumnType::String, false}}};
  Schema bad_char{{{"9bad", ColumnType::Int64, false}}};
  Schema unnamed{{{"", ColumnType::Int64, false}}};
  CHECK_THROWS_AS(dup.validate(), Error);
  CHECK_THROWS_AS(bad_char.validate(), Error);
  CHECK_THROWS_AS(unnamed.validate(), Error);

  // append_row checks arity; validate() audits null/type discipline and is
  // what encode_table runs before serializing.
  Table t = Table::empty(s);
  CHECK_THROWS_AS(t.append_row({I(1), I(2)}), Error);
  t.append_row({N()});
  CHECK_THROWS_WITH_AS(t.validate(), doctest::Contains("non-nullable"), Error);
  CHECK_THROWS_AS(encode_table(t), Error);

  Table u = Table::empty(s);
  u.append_row({S("x")});
  CHECK_THROWS_WITH_AS(u.validate(), doctest::Contains("type mismatch"), Error);

  Table v = Table::empty(s);
  v.append_row({I(1)});
  v.validate();
  CHECK(v.row_count == 1);
  CHECK(v.row(0) == std::vector<CellValue>{I(1)});
}

TEST_CASE("csv import maps unquoted-empty to null, quoted-empty to string") {
  Schema s{{{"id", ColumnType::Int64, false},
            {"name", ColumnType::String, true},
            {"score", ColumnType::Float64, true},
            {"ok", ColumnType::Bool, true}}};
  Table t = import_csv(
      "id,name,score,ok\n"
      "1,alpha,1.5,true\n"
      "2,,,false\n"
      "3,\"\",0.25,\n",
      s);
  REQUIRE(t.row_count == 3);
  CHECK(is_null(t.columns[1][1]));
  CHECK(is_null(t.columns[2][1]));
  CHECK(t.columns[1][2] == CellValue{std::string{}});  // "" stays a string
  CHECK(is_null(t.columns[3][2]));
  CHECK(t.columns[0][2] == CellValue{int64_t{3}});
}

TEST_CASE("csv quoting, escapes, and CRLF") {
  Schema s{{{"a", ColumnType::String, false}, {"b", ColumnType::String, false}}};
  Table t = import_csv(
      "a,b\r\n"
      "\"comma, inside\",\"say \"\"hi\"\"\"\r\n",
      s);
  REQUIRE(t.row_count == 1);
  CHECK(t.columns[0][0] == CellValue{std::string("comma, inside")});
  CHECK(t.columns[1][0] == CellValue{std::string("say \"hi\"")});
}

TEST_CASE("csv rejections") {
  Schema s{{{"a", ColumnType::Int64, false}, {"b", ColumnType::Bool, true}}};
  CHECK_THROWS_WITH_AS(import_csv("a,wrong\n1,true\n", s),
                       doctest::Contains("header"), Error);
  CHECK_THROWS_WITH_AS(import_csv("a\n1\n", s), doctest::Contains("header"),
                       Error);
  CHECK_THROWS_WITH_AS(import_csv("", s), doctest::Contains("no header"), Error);
  CHECK_THROWS_WITH_AS(import_csv("a,b\n,true\n", s),
                       doctest::Contains("non-nullable"), Error);
  CHECK_THROWS_WITH_AS(import_csv("a,b\nxyz,true\n", s),
                       doctest::Contains("not an integer"), Error);
  CHECK_THROWS_WITH_AS(import_csv("a,b\n1,yes\n", s),
                       doctest::Contains("bool"), Error);
  CHECK_THROWS_WITH_AS(import_csv("a,b\n1,true,extra\n", s),
                       doctest::Contains("expected 2 fields"), Error);
  CHECK_THROWS_WITH_AS(import_csv("a,b\n1,\"oops\n", s),
                       doctest::Contains("unterminated"), Error);
  CHECK_THROWS_WITH_AS(import_csv("a,b\n1,\"x\"y\n", s),
                       doctest::Contains("after closing quote"), Error);

  Schema f{{{"v", ColumnType::Float64, false}}};
  CHECK_THROWS_WITH_AS(import_csv("v\nabc\n", f), doctest::Contains("not a number"),
                       Error);
}

TEST_CASE("csv floats are canonicalized on the way in") {
  Schema f{{{"v", ColumnType::Float64, true}}};
  Table t = import_csv("v\nnan\n", f);
  CHECK(float_bits(std::get<double>(t.columns[0][0])) == 0x7FF8000000000000ULL);
}
