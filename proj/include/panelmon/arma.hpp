#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>
#include <unsupported/Eigen/NumericalDiff>

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "panelmon/error.hpp"
#include "panelmon/rng.hpp"

namespace panelmon {

/// Regression on (1, t) with ARMA errors: with d(t) = x(t) - mean - trend t,
/// d(t) = sum_i phi_i d(t-i) + e(t) + sum_j theta_j e(t-j).
struct ArmaModel {
    std::vector<double> phi;
    std::vector<double> theta;
    double mean = 0.0;
    double sigma = 1.0;  // innovation standard deviation
    double trend = 0.0;  // slope per sample, t counted from the start of the series

    std::size_t p() const noexcept { return phi.size(); }
    std::size_t q() const noexcept { return theta.size(); }
    double level(std::size_t t) const { return mean + trend * static_cast<double>(t); }
};

/// Streaming ARMA recursion, usable both to simulate (feed innovations, get
/// observations) and to filter (feed observations, get innovations).
class ArmaState {
public:
    explicit ArmaState(const ArmaModel& m) : m_(&m), x_(m.p(), 0.0), e_(m.q(), 0.0) {}

    double simulate(double innovation) {
        const double dev = predict() + innovation;
        push(dev, innovation);
        return dev + m_->level(t_++);
    }

    double filter(double observation) {
        const double dev = observation - m_->level(t_++);
        const double e = dev - predict();
        push(dev, e);
        return e;
    }

private:
    double predict() const {
        double s = 0.0;
        for (std::size_t i = 0; i < x_.size(); ++i) s += m_->phi[i] * x_[i];
        for (std::size_t j = 0; j < e_.size(); ++j) s += m_->theta[j] * e_[j];
        return s;
    }
    void push(double dev, double e) {
        if (!x_.empty()) {
            std::copy_backward(x_.begin(), x_.end() - 1, x_.end());
            x_[0] = dev;
        }
        if (!e_.empty()) {
            std::copy_backward(e_.begin(), e_.end() - 1, e_.end());
            e_[0] = e;
        }
    }

    const ArmaModel* m_;
    std::vector<double> x_;  // most recent first
    std::vector<double> e_;
    std::size_t t_ = 0;
};

/// Gaussian ARMA path of length n after `burn_in` discarded samples.
template <class Rng>
std::vector<double> simulate_arma(const ArmaModel& m, std::size_t n, Rng& rng, std::size_t burn_in = 200) {
    std::normal_distribution<double> nd(0.0, m.sigma);
    ArmaState st(m);
    for (std::size_t t = 0; t < burn_in; ++t) st.simulate(nd(rng));
    std::vector<double> out(n);
    for (auto& v : out) v = st.simulate(nd(rng));
    return out;
}

/// Conditional (zero pre-sample) innovations of each series.
inline std::vector<std::vector<double>> arma_residuals(std::span<const std::vector<double>> series, const ArmaModel& m) {
    std::vector<std::vector<double>> out;
    out.reserve(series.size());
    for (const auto& x : series) {
        ArmaState st(m);
        std::vector<double> e(x.size());
        for (std::size_t t = 0; t < x.size(); ++t) e[t] = st.filter(x[t]);
        out.push_back(std::move(e));
    }
    return out;
}

inline bool arma_is_stationary(const std::vector<double>& phi) {
    if (phi.empty()) return true;
    const auto p = static_cast<Eigen::Index>(phi.size());
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) companion(0, i) = phi[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
    return companion.eigenvalues().cwiseAbs().maxCoeff() < 1.0;
}

struct ArmaFit {
    ArmaModel model;
    double css = 0.0;  // conditional sum of squares over the fitted samples
    std::size_t fitted_samples = 0;
};

namespace detail {

struct CssFunctor : Eigen::DenseFunctor<double> {
    CssFunctor(std::span<const std::vector<double>> s, std::size_t p, std::size_t q, bool trend, std::size_t skip,
               int n_values)
        : Eigen::DenseFunctor<double>(static_cast<int>(p + q + 1 + (trend ? 1 : 0)), n_values),
          series(s), p(p), q(q), with_trend(trend), skip(skip) {}

    ArmaModel unpack(const Eigen::VectorXd& v) const {
        ArmaModel m;
        m.phi.assign(v.data(), v.data() + p);
        m.theta.assign(v.data() + p, v.data() + p + q);
        m.mean = v(static_cast<Eigen::Index>(p + q));
        if (with_trend) m.trend = v(static_cast<Eigen::Index>(p + q + 1));
        return m;
    }

    int operator()(const Eigen::VectorXd& v, Eigen::VectorXd& f) const {
        const auto m = unpack(v);
        Eigen::Index j = 0;
        for (const auto& x : series) {
            ArmaState st(m);
            for (std::size_t t = 0; t < x.size(); ++t) {
                const double e = st.filter(x[t]);
                if (t >= skip) f(j++) = std::isfinite(e) ? e : 1e10;
            }
        }
        return 0;
    }

    std::span<const std::vector<double>> series;
    std::size_t p, q;
    bool with_trend;
    std::size_t skip;
};

}  // namespace detail

/// ARMA(p, q) with mean (and optionally a linear trend in the within-series
/// time index) fitted jointly to several series: a Hannan-Rissanen start (long
/// autoregression for the innovations, then least squares) refined by
/// Levenberg-Marquardt on the conditional sum of squares.
inline ArmaFit fit_arma(std::span<const std::vector<double>> series, std::size_t p, std::size_t q,
                        bool with_trend = false) {
    const std::size_t long_order = std::max<std::size_t>(20, 2 * (p + q));
    const std::size_t skip = p + q;
    std::size_t total = 0;
    for (const auto& x : series) {
        if (x.size() <= long_order + p + q + 2) throw DataError("ARMA fit: series too short");
        total += x.size();
    }
    // Deterministic part by pooled least squares on (1, t).
    double mean = 0.0, slope = 0.0;
    {
        double st = 0, sx = 0, stt = 0, stx = 0;
        for (const auto& x : series)
            for (std::size_t t = 0; t < x.size(); ++t) {
                const double u = static_cast<double>(t);
                st += u;
                sx += x[t];
                stt += u * u;
                stx += u * x[t];
            }
        const double n = static_cast<double>(total);
        if (with_trend) slope = (n * stx - st * sx) / (n * stt - st * st);
        mean = (sx - slope * st) / n;
    }
    std::vector<std::vector<double>> dev;
    for (const auto& x : series) {
        std::vector<double> d(x.size());
        for (std::size_t t = 0; t < x.size(); ++t) d[t] = x[t] - mean - slope * static_cast<double>(t);
        dev.push_back(std::move(d));
    }

    // Stage 1: long AR by least squares over all series.
    std::size_t rows = 0;
    for (const auto& x : series) rows += x.size() - long_order;
    Eigen::MatrixXd A(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(long_order));
    Eigen::VectorXd b(static_cast<Eigen::Index>(rows));
    Eigen::Index r = 0;
    for (const auto& x : dev)
        for (std::size_t t = long_order; t < x.size(); ++t, ++r) {
            b(r) = x[t];
            for (std::size_t i = 0; i < long_order; ++i) A(r, static_cast<Eigen::Index>(i)) = x[t - 1 - i];
        }
    const Eigen::VectorXd ar = A.colPivHouseholderQr().solve(b);
    const Eigen::VectorXd innov = b - A * ar;

    // Stage 2: regress on lagged values and lagged stage-1 innovations.
    const std::size_t lag = std::max(p, q);
    std::size_t rows2 = 0;
    for (const auto& x : series) rows2 += x.size() - long_order - lag;
    Eigen::MatrixXd A2(static_cast<Eigen::Index>(rows2), static_cast<Eigen::Index>(p + q));
    Eigen::VectorXd b2(static_cast<Eigen::Index>(rows2));
    Eigen::Index r2 = 0, base = 0;
    for (const auto& x : dev) {
        const std::size_t n_inn = x.size() - long_order;
        for (std::size_t u = lag; u < n_inn; ++u, ++r2) {
            const std::size_t t = u + long_order;
            b2(r2) = x[t];
            for (std::size_t i = 0; i < p; ++i) A2(r2, static_cast<Eigen::Index>(i)) = x[t - 1 - i];
            for (std::size_t j = 0; j < q; ++j)
                A2(r2, static_cast<Eigen::Index>(p + j)) = innov(base + static_cast<Eigen::Index>(u - 1 - j));
        }
        base += static_cast<Eigen::Index>(n_inn);
    }
    Eigen::VectorXd start(static_cast<Eigen::Index>(p + q + 1 + (with_trend ? 1 : 0)));
    if (p + q > 0) start.head(static_cast<Eigen::Index>(p + q)) = A2.colPivHouseholderQr().solve(b2);
    start(static_cast<Eigen::Index>(p + q)) = mean;
    if (with_trend) start(static_cast<Eigen::Index>(p + q + 1)) = slope;

    // Stage 3: conditional least squares. Pull an explosive start back inside.
    detail::CssFunctor fn(series, p, q, with_trend, skip, static_cast<int>(total - skip * series.size()));
    auto m0 = fn.unpack(start);
    if (!arma_is_stationary(m0.phi)) start.head(static_cast<Eigen::Index>(p)) *= 0.5;
    Eigen::NumericalDiff<detail::CssFunctor> nd(fn);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<detail::CssFunctor>> lm(nd);
    Eigen::VectorXd v = start;
    lm.minimize(v);

    ArmaFit fit;
    fit.model = fn.unpack(v);
    Eigen::VectorXd f(fn.values());
    fn(v, f);
    fit.css = f.squaredNorm();
    fit.fitted_samples = static_cast<std::size_t>(fn.values());
    if (!std::isfinite(fit.css) || !arma_is_stationary(fit.model.phi))
        throw NumericalError("ARMA fit diverged (non-finite or explosive solution)");
    fit.model.sigma = std::sqrt(fit.css / static_cast<double>(fit.fitted_samples));
    return fit;
}

}  // namespace panelmon
