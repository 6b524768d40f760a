#pragma once

// Dense tableau simplex with Bland's rule, used only as a test oracle.
// maximize c.x subject to A x <= b, x >= 0, with b >= 0 (origin feasible).

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace oracle {

inline double dense_lp_max(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                           const std::vector<double>& c) {
    const std::size_t m = A.size();
    const std::size_t n = c.size();
    // tableau rows: constraints with slack columns; last row is -c
    std::vector<std::vector<double>> T(m + 1, std::vector<double>(n + m + 1, 0.0));
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) T[i][j] = A[i][j];
        T[i][n + i] = 1.0;
        T[i][n + m] = b[i];
        basis[i] = n + i;
    }
    for (std::size_t j = 0; j < n; ++j) T[m][j] = -c[j];
    const double tol = 1e-12;
    for (int iter = 0; iter < 1000000; ++iter) {
        std::size_t col = n + m;
        for (std::size_t j = 0; j < n + m; ++j)
            if (T[m][j] < -tol) {
                col = j;
                break;
            }
        if (col == n + m) return T[m][n + m];
        std::size_t row = m;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i)
            if (T[i][col] > tol) {
                const double r = T[i][n + m] / T[i][col];
                if (r < best - 1e-14 || (std::abs(r - best) <= 1e-14 && basis[i] < basis[row])) {
                    best = r;
                    row = i;
                }
            }
        if (row == m) throw std::runtime_error("dense_lp: unbounded");
        const double p = T[row][col];
        for (auto& v : T[row]) v /= p;
        for (std::size_t i = 0; i <= m; ++i) {
            if (i == row || T[i][col] == 0.0) continue;
            const double f = T[i][col];
            for (std::size_t j = 0; j <= n + m; ++j) T[i][j] -= f * T[row][j];
        }
        basis[row] = col;
    }
    throw std::runtime_error("dense_lp: iteration limit");
}

/// sup sum w_j phi_j over |phi| <= 1, phi_j - phi_k <= |x_j - x_k| for all pairs.
/// Uses phi = p - 1 with 0 <= p <= 2.
inline double bl_norm_lp(const std::vector<std::array<double, 2>>& x, const std::vector<double>& w) {
    const std::size_t n = x.size();
    std::vector<std::vector<double>> A;
    std::vector<double> b;
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> row(n, 0.0);
        row[j] = 1.0;
        A.push_back(row);
        b.push_back(2.0);
        for (std::size_t k = 0; k < n; ++k) {
            if (k == j) continue;
            std::vector<double> r(n, 0.0);
            r[j] = 1.0;
            r[k] = -1.0;
            A.push_back(r);
            b.push_back(std::hypot(x[j][0] - x[k][0], x[j][1] - x[k][1]));
        }
    }
    double sw = 0.0;
    for (double v : w) sw += v;
    return dense_lp_max(A, b, w) - sw;
}

}  // namespace oracle
