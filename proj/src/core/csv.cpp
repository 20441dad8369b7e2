#include "hscan/core/csv.hpp"

#include <fmt/format.h>

#include "hscan/core/errors.hpp"

namespace hscan::csv {

namespace {

std::vector<Row> parse_records(std::string_view text) {
    std::vector<Row> records;
    Row current;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;

    const auto end_field = [&] {
        current.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    const auto end_record = [&] {
        end_field();
        records.push_back(std::move(current));
        current.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field_started) {
                    throw InputError(fmt::format("csv: stray quote in unquoted field on line {}", line));
                }
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
                end_record();
                ++line;
                break;
            case '\n':
                end_record();
                ++line;
                break;
            default:
                field.push_back(c);
                field_started = true;
                break;
        }
    }
    if (in_quotes) throw InputError("csv: unterminated quoted field");
    if (field_started || !field.empty() || !current.empty()) end_record();
    return records;
}

bool needs_quotes(std::string_view s) {
    return s.find_first_of(",\"\r\n") != std::string_view::npos;
}

}  // namespace

Table parse(std::string_view text) {
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
    auto records = parse_records(text);
    if (records.empty()) throw InputError("csv: empty file");

    Table table;
    table.header = std::move(records.front());
    const std::size_t width = table.header.size();
    for (std::size_t r = 1; r < records.size(); ++r) {
        Row& row = records[r];
        // A lone empty field is a blank line.
        if (row.size() == 1 && row.front().empty() && width > 1) continue;
        if (row.size() > width) {
            throw InputError(fmt::format("csv: data row {} has {} cells, header has {}", r, row.size(), width));
        }
        row.resize(width);
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_row(std::string& out, const Row& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i > 0) out.push_back(',');
        const std::string& cell = row[i];
        if (!needs_quotes(cell)) {
            out += cell;
            continue;
        }
        out.push_back('"');
        for (char c : cell) {
            if (c == '"') out.push_back('"');
            out.push_back(c);
        }
        out.push_back('"');
    }
    out += "\r\n";
}

std::string write(const Table& table) {
    std::string out;
    write_row(out, table.header);
    for (const auto& row : table.rows) write_row(out, row);
    return out;
}

}  // namespace hscan::csv
