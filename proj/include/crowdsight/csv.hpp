#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "crowdsight/common.hpp"

namespace crowdsight {

// Minimal CSV support for the toolkit's fixed schemas: comma-separated,
// no quoting (no field ever contains a comma), LF or CRLF input, LF output.

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

// Reads all lines (tolerating CRLF); the final newline is optional.
inline std::vector<std::string> read_lines(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open " + file.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

inline double parse_number(const std::string& text, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw DataError(context + ": bad numeric field '" + text + "'");
    }
}

inline long long parse_integer(const std::string& text, const std::string& context) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw DataError(context + ": bad integer field '" + text + "'");
    }
}

}  // namespace crowdsight
