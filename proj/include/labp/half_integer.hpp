#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace labp {

// Exact half-integer, stored as twice its value. Fractional matching and
// cover optima are always of this form, so equality tests are exact.
struct HalfInt {
    std::int64_t twice = 0;

    static HalfInt from_int(std::int64_t n) { return HalfInt{2 * n}; }
    static HalfInt nearest(double v) { return HalfInt{std::llround(2.0 * v)}; }

    double value() const { return 0.5 * static_cast<double>(twice); }
    bool is_integer() const { return twice % 2 == 0; }

    // "3/2" for odd numerators, plain integers otherwise.
    std::string str() const {
        if (is_integer()) return std::to_string(twice / 2);
        return std::to_string(twice) + "/2";
    }

    friend bool operator==(HalfInt a, HalfInt b) { return a.twice == b.twice; }
    friend bool operator!=(HalfInt a, HalfInt b) { return a.twice != b.twice; }
    friend bool operator<(HalfInt a, HalfInt b) { return a.twice < b.twice; }
    friend bool operator<=(HalfInt a, HalfInt b) { return a.twice <= b.twice; }
    friend HalfInt operator+(HalfInt a, HalfInt b) { return HalfInt{a.twice + b.twice}; }
};

}  // namespace labp
