#pragma once

#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "panelmon/csv.hpp"
#include "panelmon/error.hpp"

namespace panelmon::svm {

struct RegressionMetrics {
    double mape = 0.0;   // percent
    double nrmse = 0.0;
    std::size_t n = 0;
};

inline RegressionMetrics regression_metrics(std::span<const double> y, std::span<const double> yhat) {
    if (y.empty() || y.size() != yhat.size()) throw DataError("metrics: need equal-length nonempty label vectors");
    double ape = 0.0, se = 0.0, ss = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
        if (y[j] == 0.0) throw DataError("metrics: MAPE undefined for a zero label");
        ape += std::abs((y[j] - yhat[j]) / y[j]);
        se += (y[j] - yhat[j]) * (y[j] - yhat[j]);
        ss += y[j] * y[j];
    }
    const auto n = static_cast<double>(y.size());
    return {ape / n * 100.0, std::sqrt(se / ss), y.size()};
}

/// Rows are true classes, columns predicted classes.
struct ClassificationMetrics {
    std::vector<std::string> class_names;
    std::vector<std::vector<std::size_t>> confusion;
    double accuracy = 0.0;  // percent
    std::size_t n = 0;

    double percent(std::size_t r, std::size_t c) const {
        return 100.0 * static_cast<double>(confusion[r][c]) / static_cast<double>(n);
    }
};

inline ClassificationMetrics classification_metrics(std::span<const int> y, std::span<const int> yhat,
                                                    std::vector<std::string> class_names) {
    if (y.empty() || y.size() != yhat.size()) throw DataError("metrics: need equal-length nonempty label vectors");
    const std::size_t g = class_names.size();
    ClassificationMetrics out;
    out.class_names = std::move(class_names);
    out.confusion.assign(g, std::vector<std::size_t>(g, 0));
    std::size_t correct = 0;
    for (std::size_t j = 0; j < y.size(); ++j) {
        if (y[j] < 0 || yhat[j] < 0 || static_cast<std::size_t>(y[j]) >= g || static_cast<std::size_t>(yhat[j]) >= g)
            throw DataError("metrics: class label out of range");
        ++out.confusion[static_cast<std::size_t>(y[j])][static_cast<std::size_t>(yhat[j])];
        correct += y[j] == yhat[j];
    }
    out.n = y.size();
    out.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(out.n);
    return out;
}

inline void write_confusion(std::ostream& out, const ClassificationMetrics& m, bool percentages) {
    out << "true";
    for (const auto& c : m.class_names) out << ',' << c;
    out << '\n';
    for (std::size_t r = 0; r < m.confusion.size(); ++r) {
        out << m.class_names[r];
        for (std::size_t c = 0; c < m.confusion.size(); ++c) {
            out << ',';
            if (percentages) out << csv::format(m.percent(r, c));
            else out << m.confusion[r][c];
        }
        out << '\n';
    }
}

inline void write_regression_metrics(std::ostream& out, const RegressionMetrics& m) {
    out << "n,mape,nrmse\n" << m.n << ',' << csv::format(m.mape) << ',' << csv::format(m.nrmse) << '\n';
}

}  // namespace panelmon::svm
