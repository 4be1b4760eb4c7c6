#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace crowdsight {

// Bad inputs (files, CSV rows, parameter ranges). CLI maps this to exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Axis-aligned box, pixel units. (x, y) is the top-left corner.
struct BBox {
    double x = 0;
    double y = 0;
    double w = 0;
    double h = 0;
};

// Shortest round-trip decimal rendering. Every float that leaves the library
// (CSV, reports, config dumps) goes through here so output is byte-stable.
inline std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

inline std::string format_int(long long value) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

inline std::string format_uint(unsigned long long value) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

}  // namespace crowdsight
