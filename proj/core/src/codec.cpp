#include "minilake/codec.hpp"

#include <cstring>

#include "json.hpp"

namespace minilake {

namespace {

constexpr char kMagic[4] = {'M', 'L', 'T', '1'};

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<uint32_t>(static_cast<uint8_t>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<uint64_t>(static_cast<uint8_t>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  std::string_view take(size_t n) {
    need(n);
    std::string_view out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  void need(size_t n) {
    if (bytes_.size() - pos_ < n) {
      raise(Errc::CorruptData, "table data truncated");
    }
  }
  std::string_view bytes_;
  size_t pos_ = 0;
};

}  // namespace

bool utf8_valid(std::string_view text) {
  size_t i = 0;
  while (i < text.size()) {
    uint8_t c = static_cast<uint8_t>(text[i]);
    size_t extra;
    uint32_t cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= text.size()) return false;
    for (size_t k = 1; k <= extra; ++k) {
      uint8_t cc = static_cast<uint8_t>(text[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates, and out-of-range points are invalid.
    static const uint32_t mins[4] = {0, 0x80, 0x800, 0x10000};
    if (cp < mins[extra]) return false;
    if (cp >= 0xD800 && cp <= 0xDFFF) return false;
    if (cp > 0x10FFFF) return false;
    i += extra + 1;
  }
  return true;
}

std::string encode_schema(const Schema& schema) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : schema.columns) {
    cols.push_back({{"name", c.name},
                    {"nullable", c.nullable},
                    {"type", column_type_name(c.type)}});
  }
  nlohmann::json doc;
  doc["columns"] = cols;
  return doc.dump();
}

Schema decode_schema(std::string_view json_text) {
  nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("columns") ||
      !doc["columns"].is_array()) {
    raise(Errc::CorruptData, "invalid schema JSON");
  }
  Schema schema;
  for (const auto& c : doc["columns"]) {
    ColumnDef def;
    def.name = c.at("name").get<std::string>();
    def.nullable = c.at("nullable").get<bool>();
    def.type = column_type_from_name(c.at("type").get<std::string>());
    schema.columns.push_back(std::move(def));
  }
  schema.validate();
  return schema;
}

std::string encode_table(const Table& table) {
  table.validate();
  std::string out;
  out.append(kMagic, 4);
  std::string schema_json = encode_schema(table.schema);
  put_u32(out, static_cast<uint32_t>(schema_json.size()));
  out += schema_json;
  put_u64(out, table.row_count);

  const uint64_t rows = table.row_count;
  const size_t bitmap_len = static_cast<size_t>((rows + 7) / 8);
  for (size_t c = 0; c < table.columns.size(); ++c) {
    const auto& col = table.columns[c];
    std::string bitmap(bitmap_len, '\0');
    for (uint64_t r = 0; r < rows; ++r) {
      if (is_null(col[r])) {
        bitmap[r / 8] = static_cast<char>(bitmap[r / 8] | (1 << (r % 8)));
      }
    }
    out += bitmap;
    switch (table.schema.columns[c].type) {
      case ColumnType::Int64:
        for (uint64_t r = 0; r < rows; ++r) {
          int64_t v = is_null(col[r]) ? 0 : std::get<int64_t>(col[r]);
          put_u64(out, static_cast<uint64_t>(v));
        }
        break;
      case ColumnType::Float64:
        for (uint64_t r = 0; r < rows; ++r) {
          uint64_t bits = is_null(col[r]) ? 0 : float_bits(std::get<double>(col[r]));
          put_u64(out, bits);
        }
        break;
      case ColumnType::Bool:
        for (uint64_t r = 0; r < rows; ++r) {
          bool v = is_null(col[r]) ? false : std::get<bool>(col[r]);
          out.push_back(v ? '\x01' : '\x00');
        }
        break;
      case ColumnType::String:
        for (uint64_t r = 0; r < rows; ++r) {
          if (is_null(col[r])) {
            put_u32(out, 0);
          } else {
            const std::string& s = std::get<std::string>(col[r]);
            put_u32(out, static_cast<uint32_t>(s.size()));
            out += s;
          }
        }
        break;
    }
  }
  return out;
}

Table decode_table(std::string_view bytes) {
  Reader in(bytes);
  std::string_view magic = in.take(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    raise(Errc::CorruptData, "bad table magic");
  }
  uint32_t schema_len = in.u32();
  std::string_view schema_json = in.take(schema_len);
  if (!utf8_valid(schema_json)) {
    raise(Errc::CorruptData, "schema is not valid UTF-8");
  }
  Table table = Table::empty(decode_schema(schema_json));
  uint64_t rows = in.u64();
  table.row_count = rows;

  const size_t bitmap_len = static_cast<size_t>((rows + 7) / 8);
  for (size_t c = 0; c < table.schema.columns.size(); ++c) {
    std::string_view bitmap = in.take(bitmap_len);
    auto null_at = [&](uint64_t r) {
      return (static_cast<uint8_t>(bitmap[r / 8]) >> (r % 8)) & 1;
    };
    auto& col = table.columns[c];
    col.reserve(rows);
    switch (table.schema.columns[c].type) {
      case ColumnType::Int64:
        for (uint64_t r = 0; r < rows; ++r) {
          uint64_t raw = in.u64();
          if (null_at(r)) {
            col.emplace_back(std::monostate{});
          } else {
            col.emplace_back(static_cast<int64_t>(raw));
          }
        }
        break;
      case ColumnType::Float64:
        for (uint64_t r = 0; r < rows; ++r) {
          uint64_t raw = in.u64();
          if (null_at(r)) {
            col.emplace_back(std::monostate{});
          } else {
            double v;
            std::memcpy(&v, &raw, sizeof(v));
            col.emplace_back(canonicalize_float(v));
          }
        }
        break;
      case ColumnType::Bool:
        for (uint64_t r = 0; r < rows; ++r) {
          std::string_view b = in.take(1);
          if (null_at(r)) {
            col.emplace_back(std::monostate{});
          } else {
            uint8_t raw = static_cast<uint8_t>(b[0]);
            if (raw > 1) raise(Errc::CorruptData, "bad bool byte");
            col.emplace_back(raw == 1);
          }
        }
        break;
      case ColumnType::String:
        for (uint64_t r = 0; r < rows; ++r) {
          uint32_t len = in.u32();
          std::string_view s = in.take(len);
          if (null_at(r)) {
            if (len != 0) raise(Errc::CorruptData, "null string slot not empty");
            col.emplace_back(std::monostate{});
          } else {
            if (!utf8_valid(s)) raise(Errc::CorruptData, "string is not valid UTF-8");
            col.emplace_back(std::string(s));
          }
        }
        break;
    }
  }
  if (!in.exhausted()) {
    raise(Errc::CorruptData, "trailing bytes after table data");
  }
  table.validate();
  return table;
}

}  // namespace minilake
