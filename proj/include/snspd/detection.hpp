#pragma once

// Phenomenological detection efficiency versus bias current.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "snspd/errors.hpp"

namespace snspd {

/// Photon detection probability as a function of i / I_c0. Either a
/// piecewise-linear table or, when the table is empty, a logistic step
/// qe_max / (1 + exp(-(x - x_half) / width)).
struct QeCurve {
    std::vector<std::pair<double, double>> table;  // (current fraction, probability), sorted
    double qe_max = 0.05;
    double x_half = 0.80;
    double width = 0.04;

    double operator()(double x) const {
        if (table.empty()) {
            return qe_max / (1.0 + std::exp(-(x - x_half) / width));
        }
        if (x <= table.front().first) return table.front().second;
        if (x >= table.back().first) return table.back().second;
        auto it = std::upper_bound(table.begin(), table.end(), x,
                                   [](double v, const auto& pt) { return v < pt.first; });
        const auto& [x1, y1] = *it;
        const auto& [x0, y0] = *(it - 1);
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    }

    void validate() const {
        for (std::size_t i = 0; i < table.size(); ++i) {
            if (table[i].second < 0.0 || table[i].second > 1.0) {
                throw DomainError("QE table probabilities must lie in [0, 1]");
            }
            if (i > 0 && !(table[i].first > table[i - 1].first)) {
                throw DomainError("QE table currents must be strictly increasing");
            }
        }
        if (table.empty() && (qe_max < 0.0 || qe_max > 1.0 || !(width > 0.0))) {
            throw DomainError("logistic QE needs qe_max in [0, 1] and width > 0");
        }
    }
};

}  // namespace snspd
