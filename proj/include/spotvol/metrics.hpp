#pragma once

#include "spotvol/common.hpp"

#include <vector>

namespace spotvol {

struct MatrixNorms {
    double max_abs = 0.0;
    double spectral = 0.0;
    double frobenius = 0.0;
    double l1_induced = 0.0;  ///< max column absolute sum
};

MatrixNorms norms(const Matrix& A);

/// Largest singular value; symmetric inputs go through an eigendecomposition.
double spectral_norm(const Matrix& A);

/// max_i sum_j |A_ij|^q for q in [0, 1), with 0^0 counted as 0.
double inf_q_norm(const Matrix& A, double q);

/// p^(-1/2) * || Sigma^(-1/2) * Sigma_hat * Sigma^(-1/2) - I ||_F.
/// Sigma must be positive definite.
double relative_error_norm(const Matrix& sigma_hat, const Matrix& sigma);

/// Mean over replications of the per-replication mean over time points.
/// Rows must be nonempty and of equal length.
double aggregate(const std::vector<std::vector<double>>& per_rep_per_tau);

}  // namespace spotvol
