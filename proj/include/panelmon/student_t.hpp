#pragma once

#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "panelmon/error.hpp"
#include "panelmon/stats.hpp"

namespace panelmon {

/// Location-scale Student-t: loc + scale * T(nu).
struct StudentT {
    double loc = 0.0;
    double scale = 1.0;
    double nu = 5.0;

    double log_likelihood(std::span<const double> x) const {
        const double c = std::lgamma(0.5 * (nu + 1)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi) -
                         std::log(scale);
        double ll = 0.0;
        for (double v : x) {
            const double z = (v - loc) / scale;
            ll += c - 0.5 * (nu + 1) * std::log1p(z * z / nu);
        }
        return ll;
    }

    /// Sampling adaptor for IidSource.
    struct Distribution {
        double loc, scale;
        std::student_t_distribution<double> t;
        template <class G>
        double operator()(G& g) { return loc + scale * t(g); }
    };
    Distribution distribution() const { return {loc, scale, std::student_t_distribution<double>(nu)}; }
};

namespace detail {

/// EM for location and scale at fixed nu.
inline StudentT fit_student_t_fixed_nu(std::span<const double> x, double nu, double loc, double scale) {
    const double n = static_cast<double>(x.size());
    for (int it = 0; it < 500; ++it) {
        double sw = 0, swx = 0;
        std::vector<double> w(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double z = (x[i] - loc) / scale;
            w[i] = (nu + 1) / (nu + z * z);
            sw += w[i];
            swx += w[i] * x[i];
        }
        const double nloc = swx / sw;
        double ss = 0;
        for (std::size_t i = 0; i < x.size(); ++i) ss += w[i] * (x[i] - nloc) * (x[i] - nloc);
        const double nscale = std::sqrt(ss / n);
        const bool done = std::abs(nloc - loc) < 1e-10 * (1 + std::abs(loc)) && std::abs(nscale - scale) < 1e-10 * scale;
        loc = nloc;
        scale = nscale;
        if (done) break;
    }
    return {loc, scale, nu};
}

}  // namespace detail

/// Maximum-likelihood location-scale t: EM in (loc, scale), Brent search on
/// log(nu) over [log 1.5, log 500] for the profile likelihood.
inline StudentT fit_student_t(std::span<const double> x) {
    if (x.size() < 3) throw DataError("Student-t fit needs at least 3 values");
    const double med = stats::median(std::vector<double>(x.begin(), x.end()));
    const double s0 = std::max(stats::iqr(std::vector<double>(x.begin(), x.end())) / 1.349, 1e-12);
    auto neg_profile = [&](double log_nu) {
        const auto t = detail::fit_student_t_fixed_nu(x, std::exp(log_nu), med, s0);
        return -t.log_likelihood(x);
    };
    const auto best = boost::math::tools::brent_find_minima(neg_profile, std::log(1.5), std::log(500.0), 30);
    return detail::fit_student_t_fixed_nu(x, std::exp(best.first), med, s0);
}

}  // namespace panelmon
