// Shortest round-trip text form of a double, for reproducible CSV output.

#ifndef GMVI_NUMERIC_IO_HPP
#define GMVI_NUMERIC_IO_HPP

#include <charconv>
#include <string>

namespace gmvi {

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace gmvi

#endif
