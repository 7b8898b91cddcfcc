#pragma once

#include <string>

#include "minilake/table.hpp"

namespace minilake {

// Canonical binary table format, the unit of content addressing:
//
//   magic "MLT1"
//   u32  schema length        (little-endian, like every integer below)
//   ...  schema JSON          (canonical UTF-8, sorted keys, no whitespace)
//   u64  row_count
//   per column, in schema order:
//     null bitmap             ceil(rows/8) bytes, LSB-first, bit set = null
//     row slots for all rows  (null slots zero / empty)
//       INT64    8 bytes
//       FLOAT64  8 bytes IEEE-754, NaN canonicalized to 0x7FF8000000000000
//       BOOL     1 byte
//       STRING   u32 length + UTF-8 bytes
//
// Equal logical tables encode to identical bytes, so digests are stable
// across platforms.
std::string encode_table(const Table& table);
Table decode_table(std::string_view bytes);

// Canonical schema JSON, exactly the bytes embedded in the header above.
std::string encode_schema(const Schema& schema);
Schema decode_schema(std::string_view json_text);

bool utf8_valid(std::string_view text);

}  // namespace minilake
