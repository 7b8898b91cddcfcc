#pragma once

#include <string_view>

#include "minilake/table.hpp"

namespace minilake {

// RFC-4180 subset: comma separated, optional double-quoting with ""
// escapes, LF or CRLF line endings, no embedded newlines. The header row
// must match the schema column names in order. An empty unquoted field is
// null (ParseError if the column is non-nullable).
Table import_csv(std::string_view text, const Schema& schema);

}  // namespace minilake
