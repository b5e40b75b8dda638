#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "gendfir/error.hpp"

namespace gendfir::csv {

struct Row {
    std::size_t line = 0;  // 1-based line where the record starts
    std::vector<std::string> fields;
};

/// Comma-delimited records with optional double-quote quoting ("" escapes a
/// quote inside a quoted field). CRLF and LF line endings are accepted, a
/// leading UTF-8 BOM is skipped and blank lines are ignored.
inline std::vector<Row> parse(std::string_view raw, char delimiter = ',') {
    if (raw.size() >= 3 && raw.substr(0, 3) == "\xEF\xBB\xBF") raw.remove_prefix(3);

    std::vector<Row> rows;
    Row current;
    current.line = 1;
    std::string field;
    bool in_quotes = false;
    bool at_field_start = true;
    bool has_content = false;
    std::size_t line = 1;

    auto end_record = [&] {
        if (has_content) {
            current.fields.push_back(std::move(field));
            rows.push_back(std::move(current));
        }
        field.clear();
        current = Row{};
        current.line = line;
        at_field_start = true;
        has_content = false;
    };

    for (std::size_t i = 0; i < raw.size(); ++i) {
        char c = raw[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < raw.size() && raw[i + 1] == '"') {
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
        if (c == '"' && at_field_start) {
            in_quotes = true;
            at_field_start = false;
            has_content = true;
        } else if (c == delimiter) {
            current.fields.push_back(std::move(field));
            field.clear();
            at_field_start = true;
            has_content = true;
        } else if (c == '\r' && i + 1 < raw.size() && raw[i + 1] == '\n') {
            continue;
        } else if (c == '\n') {
            ++line;
            end_record();
        } else {
            field.push_back(c);
            at_field_start = false;
            has_content = true;
        }
    }
    if (in_quotes) {
        throw Error(ErrorCode::RaggedRow,
                    "unterminated quoted field in record starting at line " +
                        std::to_string(current.line));
    }
    end_record();
    return rows;
}

/// Quotes a field when it contains the delimiter, a quote or a line break.
inline std::string escape(std::string_view field, char delimiter = ',') {
    bool needs = field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string_view::npos;
    if (!needs) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace gendfir::csv
