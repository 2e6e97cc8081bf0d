#include "spotvol/shrink.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spotvol {

namespace {

constexpr double kPdTol = 1e-10;

void check_symmetric_square(const Matrix& A, const char* what) {
    if (A.rows() != A.cols()) throw ShapeMismatch(std::string(what) + " must be square");
    double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw std::invalid_argument(std::string(what) + " must be symmetric");
}

bool is_pd(const Matrix& A) {
    Matrix shifted = A - kPdTol * Matrix::Identity(A.rows(), A.cols());
    return Eigen::LLT<Matrix>(shifted).info() == Eigen::Success;
}

Matrix shrink_with_c(const Matrix& sigma, const ShrinkageSpec& base, double c) {
    ShrinkageSpec spec = base;
    spec.c_rho = c;
    return shrink_matrix(sigma, spec);
}

}  // namespace

ShrinkageRule parse_rule(const std::string& name) {
    if (name == "none" || name == "naive") return ShrinkageRule::None;
    if (name == "soft") return ShrinkageRule::Soft;
    if (name == "hard") return ShrinkageRule::Hard;
    if (name == "scad") return ShrinkageRule::Scad;
    if (name == "alasso" || name == "adaptive-lasso") return ShrinkageRule::AdaptiveLasso;
    throw std::invalid_argument("unknown shrinkage rule: " + name);
}

std::string rule_name(ShrinkageRule rule) {
    switch (rule) {
        case ShrinkageRule::None: return "naive";
        case ShrinkageRule::Soft: return "soft";
        case ShrinkageRule::Hard: return "hard";
        case ShrinkageRule::Scad: return "scad";
        case ShrinkageRule::AdaptiveLasso: return "alasso";
    }
    return "?";
}

void ShrinkageSpec::validate() const {
    if (!(c_rho >= 0.0)) throw std::invalid_argument("c_rho must be >= 0");
    if (rule == ShrinkageRule::Scad && !(scad_a > 2.0))
        throw std::invalid_argument("SCAD requires a > 2");
    if (rule == ShrinkageRule::AdaptiveLasso && !(alasso_eta >= 1.0))
        throw std::invalid_argument("adaptive lasso requires eta >= 1");
}

double shrink_value(double u, double rho, const ShrinkageSpec& spec) {
    if (!(rho >= 0.0)) throw std::invalid_argument("threshold must be >= 0");
    const double au = std::abs(u);
    const double sign = u < 0.0 ? -1.0 : 1.0;
    switch (spec.rule) {
        case ShrinkageRule::None:
            return u;
        case ShrinkageRule::Soft:
            return sign * std::max(au - rho, 0.0);
        case ShrinkageRule::Hard:
            return au > rho ? u : 0.0;
        case ShrinkageRule::AdaptiveLasso: {
            if (au == 0.0) return 0.0;
            double f = 1.0 - std::pow(rho / au, spec.alasso_eta);
            return u * std::max(f, 0.0);
        }
        case ShrinkageRule::Scad: {
            const double a = spec.scad_a;
            if (au <= 2.0 * rho) return sign * std::max(au - rho, 0.0);
            if (au <= a * rho) return ((a - 1.0) * u - sign * a * rho) / (a - 2.0);
            return u;
        }
    }
    return u;
}

Matrix shrink_matrix(const Matrix& sigma_U, const ShrinkageSpec& spec) {
    spec.validate();
    check_symmetric_square(sigma_U, "sigma_U");
    if (spec.rule == ShrinkageRule::None) return sigma_U;
    const Eigen::Index p = sigma_U.rows();
    if (spec.correlation_scaled) {
        for (Eigen::Index i = 0; i < p; ++i)
            if (!(sigma_U(i, i) > 0.0))
                throw NonPositiveDiagonal("correlation-scaled threshold needs positive diagonal");
    }
    Matrix out = sigma_U;
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i + 1; j < p; ++j) {
            double rho = spec.correlation_scaled
                             ? spec.c_rho * std::sqrt(sigma_U(i, i) * sigma_U(j, j))
                             : spec.c_rho;
            double v = shrink_value(sigma_U(i, j), rho, spec);
            out(i, j) = v;
            out(j, i) = v;
        }
    }
    return out;
}

double min_eigenvalue(const Matrix& sym) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw EigenFailure("eigenvalue computation failed");
    return eig.eigenvalues().minCoeff();
}

CpdResult min_cpd(const Matrix& sigma_U, const ShrinkageSpec& spec,
                  const std::vector<double>& grid_in) {
    check_symmetric_square(sigma_U, "sigma_U");
    const Eigen::Index p = sigma_U.rows();
    for (Eigen::Index i = 0; i < p; ++i)
        if (!(sigma_U(i, i) > 0.0))
            throw NonPositiveDiagonal("minimal-PD search needs positive diagonal");
    if (spec.rule == ShrinkageRule::None)
        throw std::invalid_argument("minimal-PD search needs a shrinkage rule");

    std::vector<double> grid = grid_in;
    if (grid.empty()) {
        grid.reserve(101);
        for (int g = 0; g <= 100; ++g) grid.push_back(g / 100.0);
    }
    std::sort(grid.begin(), grid.end());
    if (!(grid.front() >= 0.0)) throw std::invalid_argument("grid values must be >= 0");

    CpdResult res;
    std::size_t pass_idx = grid.size();
    for (std::size_t g = 0; g < grid.size(); ++g) {
        Matrix cand = shrink_with_c(sigma_U, spec, grid[g]);
        if (is_pd(cand)) {
            pass_idx = g;
            res.shrunk = std::move(cand);
            break;
        }
    }

    if (pass_idx == grid.size()) {
        // Off-diagonals that survive even c = 1 violate the Cauchy-Schwarz
        // bound of a genuine covariance; keep the (positive) diagonal.
        Matrix diag = Matrix(sigma_U.diagonal().asDiagonal());
        if (!is_pd(diag)) throw NoPDInRange("diagonal is not positive definite");
        res.c_rho = grid.back();
        res.lambda_min = sigma_U.diagonal().minCoeff();
        res.shrunk = std::move(diag);
        res.diagonal_fallback = true;
        res.c_fail = grid.back();
        res.lambda_min_fail = min_eigenvalue(shrink_with_c(sigma_U, spec, grid.back()));
        return res;
    }

    if (pass_idx == 0) {
        res.c_rho = grid.front();
        res.lambda_min = min_eigenvalue(res.shrunk);
        res.at_grid_start = true;
        return res;
    }

    // Bisect between the failing and passing grid values, keeping the
    // invariant that lo was tested and failed while hi was tested and passed.
    // Grids aligned to thousandths walk exact thousandths, so the returned
    // bracket is an adjacent pair of 3-decimal values.
    double lo = grid[pass_idx - 1];
    double hi = grid[pass_idx];
    auto thousandth = [](double x) { return std::abs(x * 1000.0 - std::round(x * 1000.0)) < 1e-9; };
    const bool aligned = thousandth(lo) && thousandth(hi);
    Matrix hi_matrix = std::move(res.shrunk);
    while (hi - lo > 1e-3 + 1e-12) {
        double mid = aligned ? std::round((lo + hi) * 500.0) / 1000.0 : 0.5 * (lo + hi);
        if (!(mid > lo) || !(mid < hi)) break;
        Matrix cand = shrink_with_c(sigma_U, spec, mid);
        if (is_pd(cand)) {
            hi = mid;
            hi_matrix = std::move(cand);
        } else {
            lo = mid;
        }
    }
    res.c_rho = hi;
    res.shrunk = std::move(hi_matrix);
    res.lambda_min = min_eigenvalue(res.shrunk);
    res.c_fail = lo;
    res.lambda_min_fail = min_eigenvalue(shrink_with_c(sigma_U, spec, lo));
    return res;
}

SpotEstimate poet_estimate(const Matrix& sigma_tilde_C, const Matrix& sigma_U_shrunk) {
    check_symmetric_square(sigma_tilde_C, "sigma_tilde_C");
    check_symmetric_square(sigma_U_shrunk, "sigma_hat_U");
    if (sigma_tilde_C.rows() != sigma_U_shrunk.rows())
        throw ShapeMismatch("common and idiosyncratic parts disagree on p");
    SpotEstimate est;
    est.sigma_tilde_C = sigma_tilde_C;
    est.sigma_hat_U = sigma_U_shrunk;
    est.sigma_hat_X = sigma_tilde_C + sigma_U_shrunk;
    return est;
}

SpotEstimate poet_estimate_from_loadings(const Matrix& loadings, const Matrix& sigma_U_shrunk) {
    check_symmetric_square(sigma_U_shrunk, "sigma_hat_U");
    if (loadings.rows() != sigma_U_shrunk.rows())
        throw ShapeMismatch("loadings and sigma_hat_U disagree on p");
    Matrix common = loadings * loadings.transpose();
    symmetrize(common);
    SpotEstimate est = poet_estimate(common, sigma_U_shrunk);
    est.loadings = loadings;
    est.k_hat = static_cast<int>(loadings.cols());
    return est;
}

Matrix precision_matrix(const Matrix& loadings, const Matrix& sigma_U_shrunk) {
    check_symmetric_square(sigma_U_shrunk, "sigma_hat_U");
    const Eigen::Index p = sigma_U_shrunk.rows();
    if (loadings.size() > 0 && loadings.rows() != p)
        throw ShapeMismatch("loadings and sigma_hat_U disagree on p");

    Matrix shifted = sigma_U_shrunk - kPdTol * Matrix::Identity(p, p);
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("sigma_hat_U must be positive definite");
    Eigen::LLT<Matrix> llt_u(sigma_U_shrunk);
    if (llt_u.info() != Eigen::Success)
        throw std::invalid_argument("sigma_hat_U must be positive definite");

    Matrix u_inv = llt_u.solve(Matrix::Identity(p, p));
    const Eigen::Index k = loadings.size() > 0 ? loadings.cols() : 0;
    if (k == 0) return 0.5 * (u_inv + u_inv.transpose());

    Matrix B = llt_u.solve(loadings);                   // Sigma_U^-1 * Lambda
    Matrix inner = Matrix::Identity(k, k) + loadings.transpose() * B;
    symmetrize(inner);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(inner, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw EigenFailure("inner matrix eig failed");
    double lmin = eig.eigenvalues().minCoeff();
    double lmax = eig.eigenvalues().maxCoeff();
    if (!(lmin > 0.0) || lmax / lmin > 1e12)
        throw SingularInner("k x k inner matrix is numerically singular");

    Matrix P = u_inv - B * inner.llt().solve(B.transpose());
    return 0.5 * (P + P.transpose());
}

}  // namespace spotvol
