#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace frac {

/// Fractional order, strictly inside (0,1).
struct SParam {
    double s;
    explicit SParam(double value) : s(value) {
        if (!(value > 0.0) || !(value < 1.0)) {
            throw std::invalid_argument("SParam: s must satisfy 0 < s < 1, got " +
                                        std::to_string(value));
        }
    }
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double sgn(double x) { return (x > 0.0) - (x < 0.0); }
inline double sq(double x) { return x * x; }

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
    bool contains_open(double v) const { return v > lo && v < hi; }
    bool contains_closed(double v) const { return v >= lo && v <= hi; }
    bool intersects_open(const Interval& o) const { return lo < o.hi && o.lo < hi; }
};

}  // namespace frac
