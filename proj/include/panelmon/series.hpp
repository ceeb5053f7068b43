#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "panelmon/error.hpp"

namespace panelmon {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// A length-T vector of reals with an explicit observation mask.
/// Unobserved slots hold NaN so they can never leak into arithmetic silently.
struct MaskedSeries {
    std::vector<double> values;
    std::vector<std::uint8_t> observed;

    MaskedSeries() = default;
    explicit MaskedSeries(std::size_t n) : values(n, kMissing), observed(n, 0) {}

    /// Fully observed series.
    static MaskedSeries from_values(std::vector<double> v) {
        MaskedSeries s;
        s.observed.assign(v.size(), 1);
        s.values = std::move(v);
        return s;
    }

    /// NaN entries become missing.
    static MaskedSeries from_nan(std::vector<double> v) {
        MaskedSeries s;
        s.observed.resize(v.size());
        for (std::size_t t = 0; t < v.size(); ++t) s.observed[t] = std::isfinite(v[t]) ? 1 : 0;
        s.values = std::move(v);
        return s;
    }

    std::size_t size() const noexcept { return values.size(); }
    bool is_observed(std::size_t t) const noexcept { return observed[t] != 0; }

    void set(std::size_t t, double v) {
        values[t] = v;
        observed[t] = 1;
    }
    void clear(std::size_t t) {
        values[t] = kMissing;
        observed[t] = 0;
    }

    std::size_t count_observed() const noexcept {
        std::size_t n = 0;
        for (auto o : observed) n += o;
        return n;
    }
};

/// Dense row-major N x T matrix.
template <class T>
class Grid {
public:
    Grid() = default;
    Grid(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    T& operator()(std::size_t i, std::size_t t) { return data_[i * cols_ + t]; }
    const T& operator()(std::size_t i, std::size_t t) const { return data_[i * cols_ + t]; }

    std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    bool operator==(const Grid&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

/// Observed values plus mask, N processes by T times.
struct MaskedGrid {
    Grid<double> values;
    Grid<std::uint8_t> observed;

    MaskedGrid() = default;
    MaskedGrid(std::size_t n, std::size_t t) : values(n, t, kMissing), observed(n, t, 0) {}

    std::size_t rows() const noexcept { return values.rows(); }
    std::size_t cols() const noexcept { return values.cols(); }
    bool is_observed(std::size_t i, std::size_t t) const { return observed(i, t) != 0; }

    void set(std::size_t i, std::size_t t, double v) {
        values(i, t) = v;
        observed(i, t) = 1;
    }
    void clear(std::size_t i, std::size_t t) {
        values(i, t) = kMissing;
        observed(i, t) = 0;
    }

    MaskedSeries row(std::size_t i) const {
        MaskedSeries s;
        auto v = values.row(i);
        auto o = observed.row(i);
        s.values.assign(v.begin(), v.end());
        s.observed.assign(o.begin(), o.end());
        return s;
    }

    void set_row(std::size_t i, const MaskedSeries& s) {
        if (s.size() != cols()) throw DataError("row length mismatch");
        for (std::size_t t = 0; t < cols(); ++t) {
            values(i, t) = s.values[t];
            observed(i, t) = s.observed[t];
        }
    }
};

}  // namespace panelmon
