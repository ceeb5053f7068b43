#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "panelmon/error.hpp"

namespace panelmon {

enum class ShiftForm { Jump = 0, Trend = 1, Oscillation = 2 };

inline constexpr std::size_t kNumShiftForms = 3;

inline const char* to_string(ShiftForm f) {
    switch (f) {
        case ShiftForm::Jump: return "jump";
        case ShiftForm::Trend: return "trend";
        case ShiftForm::Oscillation: return "oscillation";
    }
    return "?";
}

inline ShiftForm shift_form_from_string(const std::string& s) {
    if (s == "jump") return ShiftForm::Jump;
    if (s == "trend") return ShiftForm::Trend;
    if (s == "oscillation") return ShiftForm::Oscillation;
    throw ConfigError("unknown shift form '" + s + "'");
}

/// Additive deviation superposed on residuals from `onset` on:
///   jump         delta
///   trend        delta / trend_divisor * (t - onset)^trend_exponent
///   oscillation  delta * sin(eta_freq * pi * (t - onset))
struct ShiftSpec {
    ShiftForm form = ShiftForm::Jump;
    double delta = 0.0;
    std::size_t onset = 0;
    double eta_freq = 0.04;
    double trend_divisor = 150.0;
    double trend_exponent = 1.5;

    double at(std::size_t t) const {
        if (t < onset) return 0.0;
        const double u = static_cast<double>(t - onset);
        switch (form) {
            case ShiftForm::Jump: return delta;
            case ShiftForm::Trend: return delta / trend_divisor * std::pow(u, trend_exponent);
            case ShiftForm::Oscillation: return delta * std::sin(eta_freq * 3.14159265358979323846 * u);
        }
        return 0.0;
    }

    static ShiftSpec jump(double delta, std::size_t onset = 0) { return {ShiftForm::Jump, delta, onset}; }
};

}  // namespace panelmon
