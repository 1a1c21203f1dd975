#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace distobs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// (X + X^T) / 2
Matrix symmetrize(const Matrix& x);

double min_eigenvalue(const Matrix& symmetric);
double max_eigenvalue(const Matrix& symmetric);

/// Largest eigenvalue magnitude of a general square matrix.
double spectral_radius(const Matrix& m);

/// Numerical rank: singular values above 1e-8 * sigma_max * max(rows, cols).
int numerical_rank(const Matrix& m);
int numerical_rank(const Eigen::MatrixXcd& m);

Matrix kron(const Matrix& a, const Matrix& b);

/// Block diagonal of possibly non-square (or empty) blocks.
Matrix block_diagonal(std::span<const Matrix> blocks);

/// Vertical stack; all blocks must share a column count.
Matrix vertical_stack(std::span<const Matrix> blocks, Eigen::Index cols);

/// Functions of an SPD matrix via symmetric eigendecomposition. Eigenvalues
/// are floored at `floor` before the power is applied.
Matrix spd_sqrt(const Matrix& spd, double floor = 1e-12);
Matrix spd_inv_sqrt(const Matrix& spd, double floor = 1e-12);

bool is_symmetric(const Matrix& m, double rel_tol);

/// Frobenius distance to the nearest symmetric matrix relative to ||m||_F.
double asymmetry(const Matrix& m);

}  // namespace distobs
