#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "panelmon/error.hpp"
#include "panelmon/panel.hpp"
#include "panelmon/shifts.hpp"

namespace panelmon {

/// A shift planted on one process, in units of that process's noise sd.
struct PlantedShift {
    std::size_t process = 0;
    ShiftSpec shift;
};

/// Synthetic multiplicative panel: x(i,t) = c(t) * eta(i,t) with
/// c(t) = 100 + 50 sin(2 pi t / 500) and eta = 1 + 0.01 sigma_i N(0,1).
/// The first n_stable processes use sigma_stable, the rest sigma_unstable;
/// unstable processes optionally get a +0.05 jump at a staggered time.
struct FixtureSpec {
    std::size_t n_stable = 15;
    std::size_t n_unstable = 6;
    std::size_t length = 2000;
    double sigma_stable = 1.0;
    double sigma_unstable = 5.0;
    std::uint64_t seed = 1;
    bool unstable_jumps = true;
    double missing_fraction = 0.0;
    std::vector<PlantedShift> planted;

    void validate() const {
        if (n_stable + n_unstable < 2) throw ConfigError("fixture: at least 2 processes are required");
        if (length < 3) throw ConfigError("fixture: length must be at least 3");
        if (!(sigma_stable >= 0.0) || !(sigma_unstable >= 0.0)) throw ConfigError("fixture: sigmas must be >= 0");
        if (!(missing_fraction >= 0.0 && missing_fraction < 1.0))
            throw ConfigError("fixture: missing_fraction must lie in [0, 1)");
        for (const auto& p : planted)
            if (p.process >= n_stable + n_unstable) throw ConfigError("fixture: planted shift on an unknown process");
    }
};

inline Panel generate_fixture(const FixtureSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> nd;
    const std::size_t n = spec.n_stable + spec.n_unstable, T = spec.length;
    Panel p;
    for (std::size_t i = 0; i < n; ++i) p.ids.push_back("p" + std::to_string(i));
    p.data = MaskedGrid(n, T);
    for (std::size_t i = 0; i < n; ++i) {
        const bool unstable = i >= spec.n_stable;
        const double sigma = unstable ? spec.sigma_unstable : spec.sigma_stable;
        const std::size_t jump_at = T / 3 + (i * 37) % (T / 3);
        for (std::size_t t = 0; t < T; ++t) {
            const double c = 100.0 + 50.0 * std::sin(2.0 * 3.141592653589793 * static_cast<double>(t) / 500.0);
            double eta = 1.0 + 0.01 * sigma * nd(rng);
            if (unstable && spec.unstable_jumps && t >= jump_at) eta += 0.05;
            for (const auto& s : spec.planted)
                if (s.process == i) eta += 0.01 * sigma * s.shift.at(t);
            p.data.set(i, t, c * eta);
        }
    }
    if (spec.missing_fraction > 0.0) {
        std::mt19937_64 mrng(spec.seed ^ 0x5bd1e995ULL);
        std::bernoulli_distribution miss(spec.missing_fraction);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t t = 0; t < T; ++t)
                if (miss(mrng)) p.data.clear(i, t);
    }
    return p;
}

}  // namespace panelmon
