#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace mediaseries::color {

struct Rgb {
    int r, g, b;
};

inline constexpr Rgb kCold{0x31, 0x36, 0x95};
inline constexpr Rgb kWarm{0xa5, 0x00, 0x26};
inline constexpr const char* kNeutral = "#eeeeee";

/// Linear RGB blend from cold (0) to warm (1); inputs are clamped.
inline Rgb ramp(double t) {
    t = std::isfinite(t) ? std::clamp(t, 0.0, 1.0) : 0.0;
    auto mix = [t](int a, int b) { return static_cast<int>(std::lround(a + (b - a) * t)); };
    return {mix(kCold.r, kWarm.r), mix(kCold.g, kWarm.g), mix(kCold.b, kWarm.b)};
}

inline std::string hex(Rgb c) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
    return buf;
}

inline std::string ramp_hex(double t) { return hex(ramp(t)); }

}  // namespace mediaseries::color
