#include "capstat/linalg.hpp"

#include <cmath>

namespace capstat {

std::optional<std::vector<double>> solve_linear_system(std::vector<double> a,
                                                       std::vector<double> b,
                                                       std::size_t n) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::fabs(a[col * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            double v = std::fabs(a[r * n + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best < 1e-12) return std::nullopt;
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[pivot * n + c], a[col * n + c]);
            std::swap(b[pivot], b[col]);
        }
        double inv = 1.0 / a[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = a[r * n + col] * inv;
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t ri = n; ri-- > 0;) {
        double s = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri * n + c] * x[c];
        x[ri] = s / a[ri * n + ri];
    }
    return x;
}

std::optional<std::vector<double>> least_squares(const std::vector<double>& x,
                                                 const std::vector<double>& y,
                                                 std::size_t n_rows, std::size_t n_cols) {
    // Normal equations X'X beta = X'y. Scale-stable enough for standardized
    // covariates and the small designs used here.
    std::vector<double> xtx(n_cols * n_cols, 0.0);
    std::vector<double> xty(n_cols, 0.0);
    for (std::size_t r = 0; r < n_rows; ++r) {
        const double* row = &x[r * n_cols];
        for (std::size_t i = 0; i < n_cols; ++i) {
            xty[i] += row[i] * y[r];
            for (std::size_t j = i; j < n_cols; ++j) xtx[i * n_cols + j] += row[i] * row[j];
        }
    }
    for (std::size_t i = 0; i < n_cols; ++i)
        for (std::size_t j = 0; j < i; ++j) xtx[i * n_cols + j] = xtx[j * n_cols + i];
    return solve_linear_system(std::move(xtx), std::move(xty), n_cols);
}

}  // namespace capstat
