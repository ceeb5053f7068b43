#pragma once

// Shared synthetic data for the test suites.

#include "panelmon/fixture.hpp"

namespace fixtures {

inline panelmon::Panel stable_unstable_panel(std::size_t n_stable, std::size_t n_unstable, std::size_t T,
                                            double sigma_stable, double sigma_unstable, std::uint64_t seed,
                                            bool planted_jumps = false) {
    panelmon::FixtureSpec spec;
    spec.n_stable = n_stable;
    spec.n_unstable = n_unstable;
    spec.length = T;
    spec.sigma_stable = sigma_stable;
    spec.sigma_unstable = sigma_unstable;
    spec.seed = seed;
    spec.unstable_jumps = planted_jumps;
    return panelmon::generate_fixture(spec);
}

}  // namespace fixtures
