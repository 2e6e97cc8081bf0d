#include "spotvol/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>

namespace spotvol {

namespace {

bool numerically_symmetric(const Matrix& A) {
    if (A.rows() != A.cols()) return false;
    double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    return (A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

}  // namespace

double spectral_norm(const Matrix& A) {
    if (A.size() == 0) throw std::invalid_argument("empty matrix");
    if (numerically_symmetric(A)) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(A, Eigen::EigenvaluesOnly);
        if (eig.info() != Eigen::Success) throw EigenFailure("spectral norm eig failed");
        return eig.eigenvalues().cwiseAbs().maxCoeff();
    }
    Eigen::BDCSVD<Matrix> svd(A);
    return svd.singularValues()(0);
}

MatrixNorms norms(const Matrix& A) {
    if (A.size() == 0) throw std::invalid_argument("empty matrix");
    MatrixNorms n;
    n.max_abs = A.cwiseAbs().maxCoeff();
    n.spectral = spectral_norm(A);
    n.frobenius = A.norm();
    n.l1_induced = A.cwiseAbs().colwise().sum().maxCoeff();
    return n;
}

double inf_q_norm(const Matrix& A, double q) {
    if (A.size() == 0) throw std::invalid_argument("empty matrix");
    if (!(q >= 0.0) || q >= 1.0) throw std::invalid_argument("q must lie in [0, 1)");
    double best = 0.0;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        double row = 0.0;
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            double a = std::abs(A(i, j));
            if (a == 0.0) continue;  // 0^0 := 0
            row += q == 0.0 ? 1.0 : std::pow(a, q);
        }
        best = std::max(best, row);
    }
    return best;
}

double relative_error_norm(const Matrix& sigma_hat, const Matrix& sigma) {
    if (sigma.rows() != sigma.cols() || sigma_hat.rows() != sigma_hat.cols())
        throw ShapeMismatch("matrices must be square");
    if (sigma.rows() != sigma_hat.rows()) throw ShapeMismatch("dimension mismatch");
    const Eigen::Index p = sigma.rows();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (sigma + sigma.transpose()));
    if (eig.info() != Eigen::Success) throw EigenFailure("reference matrix eig failed");
    if (!(eig.eigenvalues().minCoeff() > 0.0))
        throw NotPD("reference matrix is not positive definite");
    Vector inv_sqrt = eig.eigenvalues().cwiseSqrt().cwiseInverse();
    Matrix root = eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
    Matrix M = root * sigma_hat * root - Matrix::Identity(p, p);
    return M.norm() / std::sqrt(static_cast<double>(p));
}

double aggregate(const std::vector<std::vector<double>>& per_rep_per_tau) {
    if (per_rep_per_tau.empty()) throw RaggedInput("no replications");
    const std::size_t width = per_rep_per_tau.front().size();
    if (width == 0) throw RaggedInput("empty replication row");
    double total = 0.0;
    for (const auto& row : per_rep_per_tau) {
        if (row.size() != width) throw RaggedInput("replication rows differ in length");
        double s = 0.0;
        for (double v : row) s += v;
        total += s / static_cast<double>(width);
    }
    return total / static_cast<double>(per_rep_per_tau.size());
}

}  // namespace spotvol
