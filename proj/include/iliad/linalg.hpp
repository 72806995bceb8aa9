#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace iliad {

// Dense row-major matrix, just large enough for the small description
// matrices handled here (at most a few dozen rows/columns).
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Singular values via cyclic Jacobi diagonalization of A^T A. Returns the
// values in descending order. Accurate to ~1e-12 at these sizes, which is
// ample for sigma_min floors of 1e-3.
inline std::vector<double> singular_values(const Matrix& a) {
    const std::size_t n = a.cols;
    std::vector<double> g(n * n, 0.0);  // A^T A, symmetric PSD
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < a.rows; ++r) s += a.at(r, i) * a.at(r, j);
            g[i * n + j] = s;
        }
    }

    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += g[p * n + q] * g[p * n + q];
        if (off < 1e-28) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = g[p * n + q];
                if (std::abs(apq) < 1e-30) continue;
                const double app = g[p * n + p];
                const double aqq = g[q * n + q];
                const double theta = 0.5 * std::atan2(2.0 * apq, aqq - app);
                const double c = std::cos(theta);
                const double s = std::sin(theta);
                for (std::size_t k = 0; k < n; ++k) {
                    const double gkp = g[k * n + p];
                    const double gkq = g[k * n + q];
                    g[k * n + p] = c * gkp - s * gkq;
                    g[k * n + q] = s * gkp + c * gkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double gpk = g[p * n + k];
                    const double gqk = g[q * n + k];
                    g[p * n + k] = c * gpk - s * gqk;
                    g[q * n + k] = s * gpk + c * gqk;
                }
            }
        }
    }

    std::vector<double> sv(n);
    for (std::size_t i = 0; i < n; ++i) sv[i] = std::sqrt(std::max(0.0, g[i * n + i]));
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

inline double min_singular_value(const Matrix& a) {
    const auto sv = singular_values(a);
    return sv.empty() ? 0.0 : sv.back();
}

inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return kl;
}

inline double l1_distance(std::span<const double> p, std::span<const double> q) {
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
    return d;
}

inline double l2_distance(std::span<const double> p, std::span<const double> q) {
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) d += (p[i] - q[i]) * (p[i] - q[i]);
    return std::sqrt(d);
}

inline double total_variation(std::span<const double> p, std::span<const double> q) {
    return 0.5 * l1_distance(p, q);
}

}  // namespace iliad
