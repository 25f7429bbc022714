#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace ccmnet::csv {

/// Splits one CSV record. Supports double-quoted fields with "" escapes.
[[nodiscard]] inline std::vector<std::string> split(std::string_view line, std::size_t line_no = 0) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) {
        throw ParseError("unterminated quoted field", line_no);
    }
    fields.push_back(std::move(cur));
    return fields;
}

/// Quotes a field only when it contains a delimiter, quote or newline.
[[nodiscard]] inline std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

/// Strips a trailing '\r' and surrounding blanks.
[[nodiscard]] inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

}  // namespace ccmnet::csv
