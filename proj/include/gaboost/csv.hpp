#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gaboost {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw std::invalid_argument("csv: missing column '" + std::string(name) + "'");
    }
};

// RFC 4180 style: quoted fields with "" escapes, embedded newlines allowed
// inside quotes, CRLF tolerated. Errors name the 1-based data row.
inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();

    CsvTable table;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool record_open = false;
    std::size_t logical_row = 0;  // 0 = header

    auto end_field = [&] {
        record.push_back(field);
        field.clear();
    };
    auto end_record = [&] {
        end_field();
        if (logical_row == 0) {
            table.header = record;
        } else {
            if (record.size() != table.header.size())
                throw std::runtime_error("csv: row " + std::to_string(logical_row) + " has " +
                                         std::to_string(record.size()) + " fields, expected " +
                                         std::to_string(table.header.size()));
            table.rows.push_back(record);
        }
        record.clear();
        record_open = false;
        ++logical_row;
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
                field.push_back(c);
            }
            record_open = true;
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                record_open = true;
                break;
            case ',':
                end_field();
                record_open = true;
                break;
            case '\r':
                break;
            case '\n':
                end_record();
                break;
            default:
                field.push_back(c);
                record_open = true;
                break;
        }
    }
    if (in_quotes)
        throw std::runtime_error("csv: row " + std::to_string(logical_row) + " has an unterminated quote");
    if (record_open || !field.empty() || !record.empty()) end_record();
    if (table.header.empty()) throw std::runtime_error("csv: '" + path + "' is empty");
    return table;
}

inline std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

// Fixed formats keep artifacts byte-identical across runs.
inline std::string fmt_g(double x, int significant) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", significant, x);
    return buf;
}

inline std::string fmt_f(double x, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, x);
    return buf;
}

inline void write_text_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace gaboost
