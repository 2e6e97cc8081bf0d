#pragma once

#include "spotvol/common.hpp"
#include "spotvol/kernels.hpp"
#include "spotvol/preavg.hpp"

#include <utility>
#include <vector>

namespace spotvol {

/// Kernel realized spot volatility matrix at one time point,
///   Sigma~_X(tau) = sum_j K_h(t_j - tau) * dX~_j * dX~_j',
/// with its eigendecomposition. When the pseudo-grid is shorter than the
/// cross-section the eigenpairs come from the increment Gram matrix, so
/// eigvecs holds only the leading columns and eigvals is zero-padded to p.
struct SpotRaw {
    double tau = 0.0;
    double h = 0.0;
    Matrix sigma_X;
    Vector eigvals;          ///< size p, descending, clipped at 0
    Matrix eigvecs;          ///< p x m orthonormal columns, m = #available pairs
    double kernel_mass = 0.0;  ///< sum_j K_h(t_j - tau) * delta0, ~1 away from edges
    bool boundary = false;     ///< tau outside [h, T - h]
};

SpotRaw realized_spot_matrix(const FilteredPanel& panel, const KernelSpec& kernel, double h,
                             double tau);

/// Split into the top-k eigenpart and the remainder; the two add back to
/// sigma_X exactly.
std::pair<Matrix, Matrix> spectral_split(const SpotRaw& raw, int k);

/// Eigenvalue-ratio criterion: argmax over l in [1, k_max] of lam_l / lam_{l+1},
/// ties going to the smallest l, zero denominators counting as infinite ratios.
int estimate_factor_number(const Vector& eigvals, int k_max);

/// Default ratio-search depth: min(p, N)/2 capped at 20.
int default_k_max(int p, int N);

/// Local principal components of the kernel-weighted increments
/// dX~_j * K_h^(1/2)(t_j - tau): orthonormal factor increments from the N x N
/// Gram matrix, loadings, residuals, and the residual covariance.
struct LocalPcaFit {
    double tau = 0.0;
    double h = 0.0;
    int k = 0;
    Matrix factors;        ///< N x k, F'F = I_k
    Matrix loadings;       ///< p x k
    Matrix residuals;      ///< p x N
    Matrix sigma_check_U;  ///< p x p residual covariance
    double kernel_mass = 0.0;
    bool boundary = false;
};

LocalPcaFit local_pca(const FilteredPanel& panel, const KernelSpec& kernel, double h, double tau,
                      int k);

/// Leave-one-out bandwidth selection for the spot matrix: at each tau the
/// increment nearest tau is held out and its normalized squared value is
/// predicted by the diagonal of the spot estimate built from the rest.
double cv_bandwidth_spot(const FilteredPanel& panel, const KernelSpec& kernel,
                         const std::vector<double>& candidates,
                         const std::vector<double>& tau_grid);

}  // namespace spotvol
