#include "spotvol/sim.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spotvol {

namespace {

// Coefficient tables of the variance dynamics; assets are 1-indexed here.
struct LoadingCoef {
    double a, b, s;
};

LoadingCoef loading_coef(int i1, int l, int p) {
    double ip = static_cast<double>(i1) / p;
    switch (l) {
        case 0: return {0.01 + ip, 0.006 + ip / 100.0, 0.3 + ip / 5.0};
        case 1: return {0.0115 + ip, 0.007 + ip / 100.0, 0.4 + ip / 5.0};
        case 2: return {0.0105 + ip, 0.008 + ip / 100.0, 0.4 + ip / 5.0};
        default:
            throw std::invalid_argument("simulator defines at most 3 factor loadings");
    }
}

struct IdioCoef {
    double a, b, s;
};

IdioCoef idio_coef(int i1, int p) {
    double ip = static_cast<double>(i1) / p;
    return {0.0017 + ip, 0.00053 + ip / 100.0, 0.0013 + ip / 10.0};
}

double chi_value(const NoiseSpec& noise, double t, double T) {
    if (noise.chi == ChiProfile::Constant) return noise.chi_a;
    double u = t / T - 0.5;
    return noise.chi_a + noise.chi_b * u * u;
}

}  // namespace

void TickSeries::validate(double T) const {
    if (times.size() != prices.size()) throw ShapeMismatch("tick times/prices length mismatch");
    if (times.size() < 2) throw EmptySeries("tick series needs at least 2 observations");
    double prev = 0.0;
    for (std::size_t j = 0; j < times.size(); ++j) {
        if (!std::isfinite(times[j]) || !std::isfinite(prices[j]))
            throw NonFiniteState("non-finite tick");
        if (times[j] <= prev) throw OutOfRange("tick times must be strictly increasing and > 0");
        if (times[j] > T * (1.0 + 1e-12)) throw OutOfRange("tick time beyond T");
        prev = times[j];
    }
}

void SimConfig::validate() const {
    if (p < 1) throw std::invalid_argument("p must be >= 1");
    if (k < 0 || k > 3) throw std::invalid_argument("k must be in [0, 3]");
    if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
    if (!(delta > 0.0) || delta >= T) throw std::invalid_argument("delta must be in (0, T)");
    if (corr_band < 0) throw std::invalid_argument("corr_band must be >= 0");
    if (sampling.mode == SamplingMode::Synchronous) {
        if (sampling.sync_step < 1) throw std::invalid_argument("sync_step must be >= 1");
    } else {
        if (!(sampling.lambda_low > 0.0) || sampling.lambda_high < sampling.lambda_low)
            throw std::invalid_argument("require 0 < lambda_low <= lambda_high");
    }
    if (noise.mode == NoiseMode::SignalProportional) {
        if (noise.sigma_eps < 0.0) throw std::invalid_argument("sigma_eps must be >= 0");
    } else {
        if (noise.beta < 0.0 || noise.beta >= 0.5)
            throw std::invalid_argument("power-law noise requires beta in [0, 1/2)");
        if (noise.chi_a < 0.0) throw std::invalid_argument("chi_a must be >= 0");
    }
    if (loading_init_scale < 0.0 || idio_init_scale < 0.0)
        throw std::invalid_argument("init scales must be >= 0");
}

Matrix build_banded_correlation(int p, double rho, int band) {
    if (p < 1) throw std::invalid_argument("p must be >= 1");
    if (band < 0) throw std::invalid_argument("band must be >= 0");
    if (!(rho > -1.0 && rho < 1.0)) throw std::invalid_argument("rho must be in (-1, 1)");
    Matrix A = Matrix::Identity(p, p);
    for (int i = 0; i < p; ++i) {
        for (int j = i + 1; j <= std::min(p - 1, i + band); ++j) {
            double v = std::pow(rho, j - i);
            A(i, j) = v;
            A(j, i) = v;
        }
    }
    // Eigenvalue clip plus unit-diagonal renormalization until the floor holds.
    constexpr double floor = 1e-8;
    for (int pass = 0; pass < 8; ++pass) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(A);
        if (eig.info() != Eigen::Success) throw EigenFailure("banded correlation eig failed");
        if (eig.eigenvalues().minCoeff() >= floor) return A;
        Vector clipped = eig.eigenvalues().cwiseMax(2.0 * floor);
        A = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
        Vector d = A.diagonal().cwiseSqrt();
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) A(i, j) /= d(i) * d(j);
        symmetrize(A);
    }
    throw EigenFailure("banded correlation repair did not converge");
}

GroundTruth simulate_ground_truth(const SimConfig& cfg) {
    cfg.validate();
    const int p = cfg.p;
    const int k = cfg.k;
    const int M = static_cast<int>(std::floor(cfg.T / cfg.delta + 1e-9));
    if (M < 1) throw std::invalid_argument("T/delta must allow at least one step");
    const double dt = cfg.delta;
    const double sq_dt = std::sqrt(dt);

    GroundTruth gt;
    gt.p = p;
    gt.k = k;
    gt.T = cfg.T;
    gt.delta = dt;
    gt.times = Vector::LinSpaced(M + 1, 0.0, M * dt);

    {
        std::mt19937_64 rng = make_rng(cfg.seed, Stream::Rho, 0);
        gt.rho = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
    }
    gt.corr = build_banded_correlation(p, gt.rho, cfg.corr_band);

    // Idiosyncratic driver: correlated increments dW^U = sqrt(dt) * L * Z with
    // one independent standard-normal stream per asset.
    Matrix Z(p, M);
    parallel_for(static_cast<std::size_t>(p), [&](std::size_t i) {
        std::mt19937_64 rng = make_rng(cfg.seed, Stream::IdioDriver, i);
        std::normal_distribution<double> normal;
        for (int m = 0; m < M; ++m) Z(static_cast<int>(i), m) = normal(rng);
    });
    Eigen::LLT<Matrix> llt(gt.corr);
    if (llt.info() != Eigen::Success) throw EigenFailure("correlation Cholesky failed");
    Matrix dWU = llt.matrixL() * Z;
    dWU *= sq_dt;
    Z.resize(0, 0);

    Matrix dWF(std::max(k, 1), M);
    for (int l = 0; l < k; ++l) {
        std::mt19937_64 rng = make_rng(cfg.seed, Stream::FactorDriver, l);
        std::normal_distribution<double> normal;
        for (int m = 0; m < M; ++m) dWF(l, m) = normal(rng);
    }
    dWF *= sq_dt;

    gt.loadings.assign(M + 1, Matrix(p, k));
    gt.idio_vol.resize(p, M + 1);

    parallel_for(static_cast<std::size_t>(p), [&](std::size_t iu) {
        const int i = static_cast<int>(iu);
        const int i1 = i + 1;
        std::vector<std::mt19937_64> load_rng;
        if (cfg.loading_driver == LoadingDriver::IndependentPerLoading) {
            for (int l = 0; l < k; ++l)
                load_rng.push_back(make_rng(cfg.seed, Stream::LoadingDriver,
                                            static_cast<std::uint64_t>(i) * 3 + l));
        } else {
            load_rng.push_back(make_rng(cfg.seed, Stream::LoadingDriver, i));
        }
        std::normal_distribution<double> normal;

        std::vector<LoadingCoef> lc;
        for (int l = 0; l < k; ++l) lc.push_back(loading_coef(i1, l, p));
        IdioCoef ic = idio_coef(i1, p);

        std::vector<double> v(k);
        for (int l = 0; l < k; ++l) v[l] = cfg.loading_init_scale * lc[l].a;
        double w = cfg.idio_init_scale * ic.a;

        // The variance dynamics pin the loading only up to sign; an equiprobable
        // per-(asset, factor) sign keeps the k loading columns near-orthogonal
        // instead of collapsing them onto the common +sqrt(a) ramp.
        std::mt19937_64 sign_rng = make_rng(cfg.seed, Stream::LoadingSign, iu);
        std::vector<double> sgn(k);
        for (int l = 0; l < k; ++l) sgn[l] = (sign_rng() & 1ull) ? 1.0 : -1.0;

        for (int m = 0; m <= M; ++m) {
            for (int l = 0; l < k; ++l) gt.loadings[m](i, l) = sgn[l] * std::sqrt(v[l]);
            gt.idio_vol(i, m) = std::sqrt(w);
            if (m == M || cfg.freeze_coefficients) continue;

            double shared = 0.0;
            if (cfg.loading_driver == LoadingDriver::SharedPerAsset && k > 0)
                shared = normal(load_rng[0]) * sq_dt;
            for (int l = 0; l < k; ++l) {
                double dw = cfg.loading_driver == LoadingDriver::IndependentPerLoading
                                ? normal(load_rng[l]) * sq_dt
                                : shared;
                double diff = cfg.zero_diffusion ? 0.0 : lc[l].s * std::sqrt(v[l]) * dw;
                v[l] = std::max(0.0, v[l] + lc[l].b * (lc[l].a - v[l]) * dt + diff);
            }
            double diff = cfg.zero_diffusion ? 0.0 : ic.s * std::sqrt(w) * dWU(i, m);
            w = std::max(0.0, w + ic.b * (ic.a - w) * dt + diff);
        }
    });

    gt.X.resize(p, M + 1);
    gt.X.col(0).setZero();
    for (int m = 0; m < M; ++m) {
        gt.X.col(m + 1) = gt.X.col(m) + gt.idio_vol.col(m).cwiseProduct(dWU.col(m));
        if (k > 0) gt.X.col(m + 1) += gt.loadings[m] * dWF.col(m).head(k);
    }

    if (!gt.X.allFinite() || !gt.idio_vol.allFinite())
        throw NonFiniteState("simulated state contains non-finite values");
    for (const Matrix& L : gt.loadings)
        if (!L.allFinite()) throw NonFiniteState("simulated loadings contain non-finite values");
    return gt;
}

int GroundTruth::snap_index(double t) const {
    int m = static_cast<int>(std::llround(t / delta));
    return std::clamp(m, 0, steps());
}

Vector GroundTruth::spot_diag(int m) const {
    Vector d = idio_vol.col(m).array().square().matrix();
    if (k > 0) d += loadings[m].rowwise().squaredNorm();
    return d;
}

SpotTruth true_spot_volatility(const GroundTruth& gt, double tau) {
    if (!(tau > 0.0) || !(tau < gt.T)) throw OutOfRange("tau must lie in (0, T)");
    const int m = gt.snap_index(tau);
    SpotTruth out;
    out.sigma_C = gt.k > 0 ? Matrix(gt.loadings[m] * gt.loadings[m].transpose())
                           : Matrix::Zero(gt.p, gt.p);
    Vector d = gt.idio_vol.col(m);
    out.sigma_U = d.asDiagonal() * gt.corr * d.asDiagonal();
    symmetrize(out.sigma_U);
    out.sigma_X = out.sigma_C + out.sigma_U;
    return out;
}

std::vector<TickSeries> contaminate_and_sample(const GroundTruth& gt, const SimConfig& cfg) {
    cfg.validate();
    if (gt.p != cfg.p) throw ShapeMismatch("ground truth and config disagree on p");
    const int M = gt.steps();
    std::vector<TickSeries> out(static_cast<std::size_t>(gt.p));

    parallel_for(static_cast<std::size_t>(gt.p), [&](std::size_t iu) {
        const int i = static_cast<int>(iu);
        TickSeries ts;
        ts.asset_id = i;

        std::vector<int> idx;
        if (cfg.sampling.mode == SamplingMode::Synchronous) {
            for (std::int64_t m = cfg.sampling.sync_step; m <= M; m += cfg.sampling.sync_step)
                idx.push_back(static_cast<int>(m));
        } else {
            std::mt19937_64 clock = make_rng(cfg.seed, Stream::SamplingClock, iu);
            double lambda = std::uniform_real_distribution<double>(
                cfg.sampling.lambda_low, cfg.sampling.lambda_high)(clock);
            std::exponential_distribution<double> gap(1.0 / (lambda * gt.delta));
            double t = gap(clock);
            int prev = 0;
            while (t <= gt.T) {
                int m = static_cast<int>(std::llround(t / gt.delta));
                if (m > M) break;
                if (m > prev) {
                    idx.push_back(m);
                    prev = m;
                }
                t += gap(clock);
            }
        }
        if (idx.size() < 2) throw EmptySeries("sampling produced fewer than 2 observations");

        const double n_obs = static_cast<double>(idx.size());
        std::mt19937_64 noise_rng = make_rng(cfg.seed, Stream::Noise, iu);
        std::normal_distribution<double> normal;
        ts.times.reserve(idx.size());
        ts.prices.reserve(idx.size());
        for (int m : idx) {
            double t = gt.times[m];
            double sd;
            if (cfg.noise.mode == NoiseMode::SignalProportional) {
                double var_ii = gt.idio_vol(i, m) * gt.idio_vol(i, m);
                if (gt.k > 0) var_ii += gt.loadings[m].row(i).squaredNorm();
                sd = cfg.noise.sigma_eps * std::sqrt(var_ii);
            } else {
                sd = std::pow(n_obs, -cfg.noise.beta) * chi_value(cfg.noise, t, gt.T);
            }
            ts.times.push_back(t);
            ts.prices.push_back(gt.X(i, m) + sd * normal(noise_rng));
        }
        out[iu] = std::move(ts);
    });
    return out;
}

}  // namespace spotvol
