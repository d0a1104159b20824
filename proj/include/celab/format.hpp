#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace celab {

// Shortest representation that round-trips a double; used by every CSV/JSON
// writer so output bytes do not depend on locale or stream state.
inline std::string fmt_double(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v)
            break;
    }
    return buf;
}

} // namespace celab
