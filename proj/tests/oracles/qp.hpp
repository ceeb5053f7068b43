#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

// Dense primal-dual interior point for
//   min 1/2 a'Qa + p'a  s.t.  y'a = 0, 0 <= a <= C.
// Returns the minimizer and the equality multiplier nu (Q a + p + nu y = zl - zu).
namespace oracle {

struct QpSolution {
    Eigen::VectorXd a;
    double nu = 0.0;
    double objective = 0.0;
};

inline QpSolution solve_box_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& p, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& C) {
    const Eigen::Index n = p.size();
    Eigen::VectorXd a = 0.5 * C, zl = Eigen::VectorXd::Ones(n), zu = Eigen::VectorXd::Ones(n);
    // Start on the equality plane.
    a -= y * (y.dot(a) / y.squaredNorm());
    a = a.cwiseMax(1e-3 * C).cwiseMin(0.999 * C);
    double nu = 0.0;
    for (int it = 0; it < 500; ++it) {
        const Eigen::VectorXd s = C - a;
        const Eigen::VectorXd rd = Q * a + p + nu * y - zl + zu;
        const double rp = y.dot(a);
        const double gap = a.dot(zl) + s.dot(zu);
        if (gap < 1e-13 * n && rd.norm() < 1e-11 && std::abs(rp) < 1e-11) break;
        const double mu = 0.1 * gap / (2.0 * static_cast<double>(n));
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + 1, n + 1);
        K.topLeftCorner(n, n) = Q;
        K.diagonal().head(n) += (zl.array() / a.array() + zu.array() / s.array()).matrix();
        K.block(0, n, n, 1) = y;
        K.block(n, 0, 1, n) = y.transpose();
        Eigen::VectorXd r(n + 1);
        r.head(n) = -rd + (mu / a.array() - zl.array() - mu / s.array() + zu.array()).matrix();
        r[n] = -rp;
        const Eigen::VectorXd d = K.fullPivLu().solve(r);
        const Eigen::VectorXd da = d.head(n);
        const Eigen::VectorXd dzl = ((mu - a.array() * zl.array() - zl.array() * da.array()) / a.array()).matrix();
        const Eigen::VectorXd dzu = ((mu - s.array() * zu.array() + zu.array() * da.array()) / s.array()).matrix();
        double step = 1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (da[i] < 0) step = std::min(step, -0.99 * a[i] / da[i]);
            if (da[i] > 0) step = std::min(step, 0.99 * s[i] / da[i]);
            if (dzl[i] < 0) step = std::min(step, -0.99 * zl[i] / dzl[i]);
            if (dzu[i] < 0) step = std::min(step, -0.99 * zu[i] / dzu[i]);
        }
        a += step * da;
        nu += step * d[n];
        zl += step * dzl;
        zu += step * dzu;
    }
    QpSolution out;
    out.a = a;
    out.nu = nu;
    out.objective = 0.5 * a.dot(Q * a) + p.dot(a);
    return out;
}

}  // namespace oracle
