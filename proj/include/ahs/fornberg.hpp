#pragma once

#include <algorithm>
#include <vector>

namespace ahs {

// Finite-difference weights on arbitrary nodes (Fornberg's recursion).
// Returns w[d][j]: weight of node j for the d-th derivative at x0, d = 0..max_order.
inline std::vector<std::vector<double>> fornberg_weights(double x0, const std::vector<double>& x, int max_order) {
    const int n = static_cast<int>(x.size());
    std::vector<std::vector<double>> c(n, std::vector<double>(max_order + 1, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, max_order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<std::vector<double>> w(max_order + 1, std::vector<double>(n));
    for (int d = 0; d <= max_order; ++d)
        for (int j = 0; j < n; ++j) w[d][j] = c[j][d];
    return w;
}

} // namespace ahs
