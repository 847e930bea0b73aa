#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace capstat {

// Dense column-major-free helpers for the tiny systems this project solves
// (2x2 OLS normal equations, within-group outcome models on a handful of
// covariates). Gaussian elimination with partial pivoting; nullopt on a
// numerically singular matrix.
std::optional<std::vector<double>> solve_linear_system(std::vector<double> a,
                                                       std::vector<double> b,
                                                       std::size_t n);

// Least squares fit of y on the rows of x (n_rows x n_cols, row-major),
// solved via the normal equations. nullopt when X'X is singular.
std::optional<std::vector<double>> least_squares(const std::vector<double>& x,
                                                 const std::vector<double>& y,
                                                 std::size_t n_rows, std::size_t n_cols);

}  // namespace capstat
