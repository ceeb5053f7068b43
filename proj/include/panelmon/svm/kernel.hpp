#pragma once

#include <cmath>
#include <cstddef>
#include <iterator>
#include <list>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "panelmon/error.hpp"

namespace panelmon::svm {

enum class KernelType { Rbf, Linear };

inline const char* to_string(KernelType k) { return k == KernelType::Rbf ? "rbf" : "linear"; }

inline KernelType kernel_type_from_string(const std::string& s) {
    if (s == "rbf") return KernelType::Rbf;
    if (s == "linear") return KernelType::Linear;
    throw ConfigError("unknown kernel '" + s + "' (expected rbf or linear)");
}

struct Kernel {
    KernelType type = KernelType::Rbf;
    double gamma = 0.0;  // RBF only

    double operator()(const double* a, const double* b, std::size_t dim) const {
        double s = 0.0;
        if (type == KernelType::Linear) {
            for (std::size_t d = 0; d < dim; ++d) s += a[d] * b[d];
            return s;
        }
        for (std::size_t d = 0; d < dim; ++d) {
            const double u = a[d] - b[d];
            s += u * u;
        }
        return std::exp(-gamma * s);
    }
};

/// Row-major n x dim point set.
using Points = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// K(x, X_j) for every row j of X.
inline Eigen::VectorXd kernel_row(const Kernel& k, const Points& X, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    if (k.type == KernelType::Linear) return X * x.transpose();
    Eigen::VectorXd d2 = (X.rowwise() - x).rowwise().squaredNorm();
    return (-k.gamma * d2.array()).exp().matrix();
}

/// Same as kernel_row, using precomputed squared norms of the rows of X.
inline Eigen::VectorXd kernel_row(const Kernel& k, const Points& X, const Eigen::VectorXd& norms,
                                  const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    Eigen::VectorXd dot = X * x.transpose();
    if (k.type == KernelType::Linear) return dot;
    const double xx = x.squaredNorm();
    return (-k.gamma * ((norms.array() + xx) - 2.0 * dot.array()).max(0.0)).exp().matrix();
}

/// Kernel rows over a fixed point set with an LRU cache bounded in bytes.
/// Rows are computed in double. They are stored in double when the whole
/// matrix fits in the budget and in single precision otherwise, which doubles
/// the number of cached rows on large problems.
class KernelCache {
public:
    KernelCache(const Kernel& k, const Points& X, std::size_t budget_bytes)
        : kernel_(k), X_(X),
          single_(static_cast<double>(X.rows()) * static_cast<double>(X.rows()) * sizeof(double) >
                  static_cast<double>(budget_bytes)) {
        const std::size_t row_bytes = std::max<std::size_t>(1, X.rows() * (single_ ? sizeof(float) : sizeof(double)));
        const std::size_t capacity = std::max<std::size_t>(2, budget_bytes / row_bytes);
        rows_f_.capacity = rows_d_.capacity = capacity;
        diag_.resize(X.rows());
        norms_ = X.rowwise().squaredNorm();
        for (Eigen::Index i = 0; i < X.rows(); ++i) diag_[i] = kernel_(X.row(i).data(), X.row(i).data(), X.cols());
    }

    std::size_t size() const { return static_cast<std::size_t>(X_.rows()); }
    double diag(std::size_t i) const { return diag_[i]; }
    bool single_precision() const { return single_; }

    /// Row i; Scalar must match single_precision().
    template <class Scalar>
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& row(std::size_t i) {
        if constexpr (std::is_same_v<Scalar, float>) return rows_f_.get(i, [&](auto& out) { fill(i, out); });
        else return rows_d_.get(i, [&](auto& out) { fill(i, out); });
    }

private:
    template <class Scalar>
    struct Lru {
        using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
        std::size_t capacity = 2;
        std::list<std::pair<std::size_t, Vec>> entries;
        std::unordered_map<std::size_t, typename std::list<std::pair<std::size_t, Vec>>::iterator> index;

        template <class Fill>
        const Vec& get(std::size_t i, Fill&& fill) {
            if (auto it = index.find(i); it != index.end()) {
                entries.splice(entries.begin(), entries, it->second);
                return it->second->second;
            }
            if (entries.size() >= capacity) {
                // Reuse the evicted row's storage.
                index.erase(entries.back().first);
                entries.splice(entries.begin(), entries, std::prev(entries.end()));
                entries.front().first = i;
            } else {
                entries.emplace_front(i, Vec());
            }
            fill(entries.front().second);
            index[i] = entries.begin();
            return entries.front().second;
        }
    };

    template <class Vec>
    void fill(std::size_t i, Vec& out) {
        const auto r = static_cast<Eigen::Index>(i);
        scratch_.noalias() = X_ * X_.row(r).transpose();
        if (kernel_.type == KernelType::Rbf)
            scratch_ = (-kernel_.gamma * ((norms_.array() + norms_[r]) - 2.0 * scratch_.array()).max(0.0)).exp().matrix();
        out = scratch_.template cast<typename Vec::Scalar>();
    }

    Kernel kernel_;
    const Points& X_;
    bool single_;
    Eigen::VectorXd diag_;
    Eigen::VectorXd norms_;
    Eigen::VectorXd scratch_;
    Lru<float> rows_f_;
    Lru<double> rows_d_;
};

}  // namespace panelmon::svm
