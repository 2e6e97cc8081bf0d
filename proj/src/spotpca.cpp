#include "spotvol/spotpca.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spotvol {

namespace {

struct WeightedIncrements {
    Matrix A;               // p x n_w, columns dX~_j * sqrt(w_j) for retained j
    std::vector<int> cols;  // retained increment indices, 1-based into the grid
    double mass = 0.0;      // sum_j w_j * delta0 over all increments
    int N = 0;
};

WeightedIncrements weighted_increments(const FilteredPanel& panel, const KernelSpec& kernel,
                                       double h, double tau) {
    if (!(h > panel.delta0))
        throw std::invalid_argument("spot bandwidth must exceed the pseudo-grid step");
    if (!(tau > 0.0) || !(tau < panel.T)) throw OutOfRange("tau must lie in (0, T)");

    WeightedIncrements out;
    out.N = panel.increments();
    if (out.N < 1) throw EmptySeries("panel has no increments");

    std::vector<double> sqw;
    for (int j = 1; j <= out.N; ++j) {
        double w = kernel((panel.grid(j) - tau) / h) / h;
        if (w > 0.0) {
            out.cols.push_back(j);
            sqw.push_back(std::sqrt(w));
            out.mass += w * panel.delta0;
        }
    }
    if (out.cols.empty()) throw EmptySeries("kernel window holds no increments");

    out.A.resize(panel.assets(), static_cast<Eigen::Index>(out.cols.size()));
    for (std::size_t c = 0; c < out.cols.size(); ++c) {
        int j = out.cols[c];
        out.A.col(static_cast<Eigen::Index>(c)) =
            (panel.values.col(j) - panel.values.col(j - 1)) * sqw[c];
    }
    return out;
}

bool outside_theorem_range(const FilteredPanel& panel, double h, double tau) {
    return tau < h || tau > panel.T - h;
}

}  // namespace

SpotRaw realized_spot_matrix(const FilteredPanel& panel, const KernelSpec& kernel, double h,
                             double tau) {
    WeightedIncrements wi = weighted_increments(panel, kernel, h, tau);
    const int p = panel.assets();
    const int nw = static_cast<int>(wi.cols.size());

    SpotRaw raw;
    raw.tau = tau;
    raw.h = h;
    raw.kernel_mass = wi.mass;
    raw.boundary = outside_theorem_range(panel, h, tau);
    raw.sigma_X.noalias() = wi.A * wi.A.transpose();
    symmetrize(raw.sigma_X);

    raw.eigvals = Vector::Zero(p);
    if (p <= nw) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(raw.sigma_X);
        if (eig.info() != Eigen::Success) throw EigenFailure("spot matrix eig failed");
        raw.eigvals = eig.eigenvalues().reverse().cwiseMax(0.0);
        raw.eigvecs = eig.eigenvectors().rowwise().reverse();
    } else {
        Matrix gram = wi.A.transpose() * wi.A;
        symmetrize(gram);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
        if (eig.info() != Eigen::Success) throw EigenFailure("increment Gram eig failed");
        Vector lam = eig.eigenvalues().reverse().cwiseMax(0.0);
        const double tol = lam(0) > 0.0 ? 1e-14 * lam(0) : 0.0;
        int m = 0;
        while (m < nw && lam(m) > tol) ++m;
        raw.eigvals.head(nw) = lam;
        raw.eigvecs.resize(p, m);
        Matrix f = eig.eigenvectors().rowwise().reverse();
        for (int l = 0; l < m; ++l)
            raw.eigvecs.col(l) = wi.A * f.col(l) / std::sqrt(lam(l));
    }
    canonicalize_column_signs(raw.eigvecs);
    return raw;
}

std::pair<Matrix, Matrix> spectral_split(const SpotRaw& raw, int k) {
    const int p = static_cast<int>(raw.sigma_X.rows());
    if (k < 0 || k > p) throw std::invalid_argument("k must be in [0, p]");
    const int keff = std::min<int>(k, static_cast<int>(raw.eigvecs.cols()));
    Matrix common = Matrix::Zero(p, p);
    if (keff > 0) {
        common.noalias() = raw.eigvecs.leftCols(keff) *
                           raw.eigvals.head(keff).asDiagonal() *
                           raw.eigvecs.leftCols(keff).transpose();
        symmetrize(common);
    }
    return {common, raw.sigma_X - common};
}

int estimate_factor_number(const Vector& eigvals, int k_max) {
    if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
    if (eigvals.size() < k_max + 1)
        throw std::invalid_argument("need at least k_max + 1 eigenvalues");
    Vector lam = eigvals.cwiseMax(0.0);
    if (!(lam(0) > 0.0)) throw EigenFailure("all eigenvalues are zero");
    int best = 1;
    double best_ratio = -1.0;
    for (int l = 1; l <= k_max; ++l) {
        double num = lam(l - 1);
        double den = lam(l);
        double ratio;
        if (den > 0.0)
            ratio = num / den;
        else
            ratio = num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best = l;
        }
    }
    return best;
}

int default_k_max(int p, int N) {
    int m = std::min(p, N) / 2;
    return std::clamp(m, 1, 20);
}

LocalPcaFit local_pca(const FilteredPanel& panel, const KernelSpec& kernel, double h, double tau,
                      int k) {
    const int p = panel.assets();
    WeightedIncrements wi = weighted_increments(panel, kernel, h, tau);
    const int nw = static_cast<int>(wi.cols.size());
    if (k < 0 || k > std::min(p, wi.N))
        throw std::invalid_argument("k must be in [0, min(p, N)]");

    LocalPcaFit fit;
    fit.tau = tau;
    fit.h = h;
    fit.k = k;
    fit.kernel_mass = wi.mass;
    fit.boundary = outside_theorem_range(panel, h, tau);
    fit.factors = Matrix::Zero(wi.N, k);
    fit.residuals = Matrix::Zero(p, wi.N);

    const int keff = std::min(k, nw);
    Matrix f_sub = Matrix::Zero(nw, keff);
    if (keff > 0) {
        Matrix gram = wi.A.transpose() * wi.A;
        symmetrize(gram);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
        if (eig.info() != Eigen::Success) throw EigenFailure("increment Gram eig failed");
        f_sub = eig.eigenvectors().rowwise().reverse().leftCols(keff);
        canonicalize_column_signs(f_sub);
    }

    fit.loadings = Matrix::Zero(p, k);
    fit.loadings.leftCols(keff).noalias() = wi.A * f_sub;
    Matrix resid_sub = wi.A;
    if (keff > 0) resid_sub.noalias() -= fit.loadings.leftCols(keff) * f_sub.transpose();
    for (int c = 0; c < nw; ++c) {
        const int j = wi.cols[static_cast<std::size_t>(c)] - 1;
        fit.residuals.col(j) = resid_sub.col(c);
        if (keff > 0) fit.factors.row(j).head(keff) = f_sub.row(c);
    }
    fit.sigma_check_U.noalias() = resid_sub * resid_sub.transpose();
    symmetrize(fit.sigma_check_U);
    return fit;
}

double cv_bandwidth_spot(const FilteredPanel& panel, const KernelSpec& kernel,
                         const std::vector<double>& candidates,
                         const std::vector<double>& tau_grid) {
    if (candidates.empty()) throw std::invalid_argument("no bandwidth candidates");
    if (tau_grid.empty()) throw std::invalid_argument("empty tau grid");
    const int N = panel.increments();
    const int p = panel.assets();
    if (N < 2) throw EmptySeries("panel has too few increments for CV");
    for (double h : candidates)
        if (!(h > panel.delta0))
            throw std::invalid_argument("spot bandwidth candidates must exceed the grid step");

    Matrix sq(p, N);
    for (int j = 1; j <= N; ++j)
        sq.col(j - 1) = (panel.values.col(j) - panel.values.col(j - 1)).array().square().matrix();

    std::vector<double> sorted(candidates);
    std::sort(sorted.begin(), sorted.end());

    double best_h = 0.0;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t valid = 0;
    for (double h : sorted) {
        double loss = 0.0;
        std::size_t degenerate = 0;
        for (double tau : tau_grid) {
            if (!(tau > 0.0) || !(tau < panel.T)) throw OutOfRange("tau must lie in (0, T)");
            int jstar = std::clamp(static_cast<int>(std::llround(tau / panel.delta0)), 1, N);
            double wsum = 0.0;
            Vector s = Vector::Zero(p);
            for (int j = 1; j <= N; ++j) {
                double w = kernel((panel.grid(j) - tau) / h) / h;
                if (w <= 0.0) continue;
                if (j == jstar) continue;
                wsum += w;
                s += w * sq.col(j - 1);
            }
            if (wsum <= 0.0) {
                ++degenerate;
                continue;
            }
            Vector proxy = sq.col(jstar - 1) / panel.delta0;
            loss += (proxy - s).squaredNorm();
        }
        if (degenerate * 2 > tau_grid.size()) continue;
        ++valid;
        if (loss < best_loss) {
            best_loss = loss;
            best_h = h;
        }
    }
    if (valid == 0) throw AllDegenerate("every spot bandwidth candidate has empty windows");
    return best_h;
}

}  // namespace spotvol
