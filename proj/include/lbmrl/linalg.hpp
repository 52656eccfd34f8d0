#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace lbmrl {

using Vec = std::vector<double>;

// Dense square matrix, row-major. Sized for small feature dimensions.
struct Mat {
    int n = 0;
    Vec a;

    Mat() = default;
    explicit Mat(int dim, double diag = 0.0) : n(dim), a(static_cast<std::size_t>(dim) * dim, 0.0) {
        for (int i = 0; i < dim; ++i) at(i, i) = diag;
    }

    double& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double at(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
};

inline Vec mat_vec(const Mat& m, const Vec& x) {
    Vec y(m.n, 0.0);
    for (int i = 0; i < m.n; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.n; ++j) s += m.at(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

inline double dot(const Vec& x, const Vec& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double quad_form(const Mat& m, const Vec& x) {
    return dot(x, mat_vec(m, x));
}

inline double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

// inv <- inverse of (M + phi phi^T) given inv = M^{-1} (Sherman-Morrison).
inline void sherman_morrison_update(Mat& inv, const Vec& phi) {
    Vec u = mat_vec(inv, phi);
    double denom = 1.0 + dot(phi, u);
    for (int i = 0; i < inv.n; ++i)
        for (int j = 0; j < inv.n; ++j)
            inv.at(i, j) -= u[i] * u[j] / denom;
}

// Gauss-Jordan with partial pivoting. Used as the direct-inversion check
// against the incrementally maintained inverse.
inline Mat invert(const Mat& m) {
    int n = m.n;
    Mat aug = m;
    Mat inv(n, 1.0);
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(aug.at(r, col)) > std::abs(aug.at(piv, col))) piv = r;
        if (std::abs(aug.at(piv, col)) < 1e-300)
            throw std::runtime_error("invert: matrix is singular");
        if (piv != col) {
            for (int j = 0; j < n; ++j) {
                std::swap(aug.at(piv, j), aug.at(col, j));
                std::swap(inv.at(piv, j), inv.at(col, j));
            }
        }
        double d = aug.at(col, col);
        for (int j = 0; j < n; ++j) {
            aug.at(col, j) /= d;
            inv.at(col, j) /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = aug.at(r, col);
            if (f == 0.0) continue;
            for (int j = 0; j < n; ++j) {
                aug.at(r, j) -= f * aug.at(col, j);
                inv.at(r, j) -= f * inv.at(col, j);
            }
        }
    }
    return inv;
}

inline Vec solve(const Mat& m, const Vec& b) { return mat_vec(invert(m), b); }

}  // namespace lbmrl
