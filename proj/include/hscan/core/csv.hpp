#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hscan::csv {

using Row = std::vector<std::string>;

struct Table {
    Row header;
    std::vector<Row> rows;
};

/// RFC-4180 reader. Accepts CRLF or LF line endings and a leading UTF-8 BOM.
/// Every data row is padded or checked against the header width; a row with
/// more cells than the header is an InputError.
Table parse(std::string_view text);

/// Writes one record terminated by CRLF. Fields are quoted only when needed.
void write_row(std::string& out, const Row& row);

std::string write(const Table& table);

}  // namespace hscan::csv
