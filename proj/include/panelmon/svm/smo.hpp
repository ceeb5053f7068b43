#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "panelmon/error.hpp"
#include "panelmon/svm/kernel.hpp"

namespace panelmon::svm {

struct SolverOptions {
    double tolerance = 1e-3;
    std::size_t max_iterations = 10'000'000;
    std::size_t cache_bytes = std::size_t{512} << 20;
};

/// Dual problem  min 1/2 a'Qa + p'a  s.t.  y'a = 0, 0 <= a_i <= C_i,
/// with Q_ij = y_i y_j K(x_(i mod n), x_(j mod n)) and y_i in {-1, +1}, where
/// n is the number of points behind the kernel cache. Classification uses
/// one copy of the points, regression two.
struct DualProblem {
    std::vector<double> p;
    std::vector<int> y;
    std::vector<double> C;

    std::size_t size() const { return p.size(); }
};

struct DualSolution {
    std::vector<double> alpha;
    double rho = 0.0;  // decision function is sum_i y_i a_i K(x_i, x) - rho
    double objective = 0.0;
    double max_violation = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

namespace detail {

template <class Scalar>
DualSolution solve_dual(const DualProblem& prob, KernelCache& cache, const SolverOptions& opt) {
    const std::size_t l = prob.size();
    const std::size_t n = cache.size();
    const std::size_t copies = l / n;
    constexpr double tau = 1e-12;
    constexpr double inf = std::numeric_limits<double>::infinity();
    const auto& C = prob.C;

    using Arr = Eigen::ArrayXd;
    std::vector<double> a(l, 0.0);
    Arr G = Eigen::Map<const Arr>(prob.p.data(), static_cast<Eigen::Index>(l));
    Arr ys(l), QD(n), obj(l), b(l), b_low(l), up(l), low(l);  // up/low: 1 if the variable may move up / down along y
    for (std::size_t s = 0; s < n; ++s) QD[s] = cache.diag(s);
    auto refresh = [&](std::size_t t) {
        const bool at_upper = a[t] >= C[t], at_lower = a[t] <= 0.0;
        up[t] = (ys[t] > 0 ? !at_upper : !at_lower) ? 1.0 : 0.0;
        low[t] = (ys[t] > 0 ? !at_lower : !at_upper) ? 1.0 : 0.0;
    };
    for (std::size_t t = 0; t < l; ++t) {
        if (prob.y[t] != 1 && prob.y[t] != -1) throw ConfigError("dual problem: labels must be +1 or -1");
        ys[t] = prob.y[t];
        refresh(t);
    }
    const auto N = static_cast<Eigen::Index>(n);

    DualSolution out;
    std::size_t it = 0;
    for (; it < opt.max_iterations; ++it) {
        {
            const double* g = G.data();
            const double* yv = ys.data();
            const double* u = up.data();
            double* bb = b.data();
            double* o = obj.data();
            for (std::size_t t = 0; t < l; ++t) {
                bb[t] = yv[t] * g[t];
                o[t] = u[t] > 0.0 ? -bb[t] : -inf;
            }
            // Separate loop: fused with the one above it no longer vectorizes.
            const double* lw = low.data();
            double* bl = b_low.data();
            for (std::size_t t = 0; t < l; ++t) bl[t] = lw[t] > 0.0 ? bb[t] : -inf;
        }
        const double gmax = obj.maxCoeff();
        if (gmax == -inf) {
            out.max_violation = 0.0;
            out.converged = true;
            break;
        }
        std::size_t i = 0;
        while (obj[i] != gmax) ++i;

        const auto& Ki = cache.template row<Scalar>(i % n);
        const double Kii = QD[i % n], yi = ys[i];
        const double gmax2 = b_low.maxCoeff();
        for (std::size_t c = 0; c < copies; ++c) {
            const Scalar* k = Ki.data();
            const double* qd = QD.data();
            const double* bb = b.data() + c * n;
            const double* yc = ys.data() + c * n;
            const double* lw = low.data() + c * n;
            double* o = obj.data() + c * n;
            for (std::size_t s = 0; s < n; ++s) {
                const double diff = gmax + bb[s];
                double quad = Kii + qd[s] - 2.0 * yi * yc[s] * k[s];
                quad = quad > 0.0 ? quad : tau;
                const double v = -(diff * diff) / quad;
                o[s] = ((lw[s] > 0.0) & (diff > 0.0)) ? v : inf;
            }
        }
        const double obj_min = obj.minCoeff();
        out.max_violation = std::max(0.0, gmax + gmax2);
        if (obj_min == inf || gmax + gmax2 < opt.tolerance) {
            out.converged = true;
            break;
        }
        std::size_t j = 0;
        while (obj[j] != obj_min) ++j;

        const auto& Kj = cache.template row<Scalar>(j % n);
        const double Qij = yi * ys[j] * Ki[static_cast<Eigen::Index>(j % n)];
        const double Cij[2] = {C[i], C[j]};
        const double old_i = a[i], old_j = a[j];
        const double qi = QD[i % n], qj = QD[j % n];
        if (ys[i] != ys[j]) {
            double quad = qi + qj + 2.0 * Qij;
            if (quad <= 0) quad = tau;
            const double delta = (-G[i] - G[j]) / quad;
            const double diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if (diff > 0) {
                if (a[j] < 0) a[j] = 0, a[i] = diff;
            } else if (a[i] < 0) {
                a[i] = 0, a[j] = -diff;
            }
            if (diff > Cij[0] - Cij[1]) {
                if (a[i] > Cij[0]) a[i] = Cij[0], a[j] = Cij[0] - diff;
            } else if (a[j] > Cij[1]) {
                a[j] = Cij[1], a[i] = Cij[1] + diff;
            }
        } else {
            double quad = qi + qj - 2.0 * Qij;
            if (quad <= 0) quad = tau;
            const double delta = (G[i] - G[j]) / quad;
            const double sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if (sum > Cij[0]) {
                if (a[i] > Cij[0]) a[i] = Cij[0], a[j] = sum - Cij[0];
            } else if (a[j] < 0) {
                a[j] = 0, a[i] = sum;
            }
            if (sum > Cij[1]) {
                if (a[j] > Cij[1]) a[j] = Cij[1], a[i] = sum - Cij[1];
            } else if (a[i] < 0) {
                a[i] = 0, a[j] = sum;
            }
        }
        const double di = yi * (a[i] - old_i), dj = ys[j] * (a[j] - old_j);
        const Arr w = di * Ki.array().template cast<double>() + dj * Kj.array().template cast<double>();
        for (std::size_t c = 0; c < copies; ++c) {
            const auto off = static_cast<Eigen::Index>(c * n);
            G.segment(off, N) += ys.segment(off, N) * w;
        }
        refresh(i);
        refresh(j);
    }
    out.iterations = it;

    double ub = inf, lb = -inf, sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < l; ++t) {
        const double yG = ys[t] * G[t];
        if (a[t] >= C[t]) {
            if (ys[t] < 0) ub = std::min(ub, yG);
            else lb = std::max(lb, yG);
        } else if (a[t] <= 0.0) {
            if (ys[t] > 0) ub = std::min(ub, yG);
            else lb = std::max(lb, yG);
        } else {
            ++n_free;
            sum_free += yG;
        }
    }
    if (n_free > 0) out.rho = sum_free / static_cast<double>(n_free);
    else if (std::isfinite(ub) && std::isfinite(lb)) out.rho = 0.5 * (ub + lb);
    else out.rho = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);
    double total = 0.0;
    for (std::size_t t = 0; t < l; ++t) total += a[t] * (G[t] + prob.p[t]);
    out.objective = 0.5 * total;
    out.alpha = std::move(a);
    return out;
}

}  // namespace detail

/// Pairwise coordinate ascent with second-order working-set selection. No
/// shrinking, so the iterate sequence depends only on the problem. Loops run
/// over contiguous arrays so that the compiler can vectorize them.
inline DualSolution solve_dual(const DualProblem& prob, KernelCache& cache, const SolverOptions& opt) {
    const std::size_t l = prob.size();
    const std::size_t n = cache.size();
    if (n == 0 || l % n != 0 || prob.y.size() != l || prob.C.size() != l)
        throw ConfigError("dual problem: variable count must be a multiple of the point count");
    return cache.single_precision() ? detail::solve_dual<float>(prob, cache, opt)
                                    : detail::solve_dual<double>(prob, cache, opt);
}

}  // namespace panelmon::svm
