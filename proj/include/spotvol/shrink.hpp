#pragma once

#include "spotvol/common.hpp"

#include <limits>
#include <string>
#include <vector>

namespace spotvol {

enum class ShrinkageRule { None, Soft, Hard, Scad, AdaptiveLasso };

ShrinkageRule parse_rule(const std::string& name);
std::string rule_name(ShrinkageRule rule);

/// Off-diagonal thresholding specification. Thresholds are entrywise:
/// rho_ij = c_rho * sqrt(sigma_ii * sigma_jj) when correlation_scaled, or the
/// flat value c_rho otherwise. The diagonal is never shrunk.
struct ShrinkageSpec {
    ShrinkageRule rule = ShrinkageRule::Scad;
    double c_rho = 0.0;
    bool correlation_scaled = true;
    double scad_a = 3.7;
    double alasso_eta = 3.0;

    void validate() const;
};

/// Apply one generalized shrinkage rule to a scalar. All rules satisfy
/// |s(u)| <= |u|, s(u) = 0 for |u| <= rho, and |s(u) - u| <= rho.
double shrink_value(double u, double rho, const ShrinkageSpec& spec);

Matrix shrink_matrix(const Matrix& sigma_U, const ShrinkageSpec& spec);

/// Result of the minimal positive-definite threshold search.
struct CpdResult {
    double c_rho = 0.0;
    double lambda_min = 0.0;       ///< smallest eigenvalue of the shrunk matrix
    Matrix shrunk;                 ///< matrix shrunk at c_rho
    bool at_grid_start = false;    ///< first grid value already passed
    double c_fail = std::numeric_limits<double>::quiet_NaN();  ///< adjacent failing value
    double lambda_min_fail = std::numeric_limits<double>::quiet_NaN();
    bool diagonal_fallback = false;  ///< no grid value passed; kept the diagonal only
};

/// Smallest c on the grid (default 0, 0.01, ..., 1) whose shrunk matrix is
/// positive definite (smallest eigenvalue above 1e-10), refined by bisection
/// to the nearest thousandth. The returned value passes the definiteness test
/// and the adjacent thousandth below it fails, which is the certificate the
/// result carries. When even the full grid fails (possible only for inputs
/// whose off-diagonals exceed the correlation bound), the matrix is truncated
/// to its diagonal and flagged.
CpdResult min_cpd(const Matrix& sigma_U, const ShrinkageSpec& spec,
                  const std::vector<double>& grid = {});

/// Low-rank-plus-sparse spot estimate.
struct SpotEstimate {
    double tau = 0.0;
    int k_hat = -1;
    double c_rho = std::numeric_limits<double>::quiet_NaN();
    Matrix sigma_tilde_C;
    Matrix sigma_hat_U;
    Matrix sigma_hat_X;
    Matrix loadings;  ///< empty when assembled from a common matrix directly
};

/// Assemble sigma_hat_X = sigma_tilde_C + sigma_hat_U.
SpotEstimate poet_estimate(const Matrix& sigma_tilde_C, const Matrix& sigma_U_shrunk);

/// Same, with the common part built as loadings * loadings'.
SpotEstimate poet_estimate_from_loadings(const Matrix& loadings, const Matrix& sigma_U_shrunk);

/// Inverse of loadings * loadings' + sigma_U via the Sherman-Morrison-Woodbury
/// identity; costs one p x p factorization plus k x k work.
Matrix precision_matrix(const Matrix& loadings, const Matrix& sigma_U_shrunk);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& sym);

}  // namespace spotvol
