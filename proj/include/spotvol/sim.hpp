#pragma once

#include "spotvol/common.hpp"

#include <cstdint>
#include <vector>

namespace spotvol {

/// Observed tick stream of one asset. Times are day fractions in (0, T],
/// strictly increasing; prices are noisy log-prices.
struct TickSeries {
    int asset_id = 0;
    std::vector<double> times;
    std::vector<double> prices;

    std::size_t size() const { return times.size(); }
    void validate(double T) const;
};

enum class SamplingMode { Synchronous, PoissonClock };

struct SamplingSpec {
    SamplingMode mode = SamplingMode::Synchronous;
    /// Synchronous: emit every `sync_step`-th fine-grid point.
    std::int64_t sync_step = 1;
    /// PoissonClock: per-asset mean gap multiplier drawn uniformly from
    /// [lambda_low, lambda_high]; the mean inter-arrival is multiplier * delta.
    double lambda_low = 1.0;
    double lambda_high = 3.0;
};

enum class NoiseMode {
    /// Noise sd at time t is sigma_eps * sqrt(sigma_X_ii(t)).
    SignalProportional,
    /// Noise sd for asset i is n_i^(-beta) * chi(t), chi either constant or
    /// the U-shape a + b*(t/T - 1/2)^2.
    PowerLaw,
};

enum class ChiProfile { Constant, UShape };

struct NoiseSpec {
    NoiseMode mode = NoiseMode::SignalProportional;
    double sigma_eps = 0.05;
    double beta = 0.0;
    ChiProfile chi = ChiProfile::Constant;
    double chi_a = 1.0;
    double chi_b = 0.0;
};

/// Brownian drivers of the squared-loading processes: one independent motion
/// per (asset, factor) pair, or one per asset shared across its loadings.
enum class LoadingDriver { IndependentPerLoading, SharedPerAsset };

struct SimConfig {
    int p = 100;
    int k = 3;
    double T = 1.0;
    double delta = 1.0 / 2340.0;
    std::uint64_t seed = 1;
    SamplingSpec sampling;
    NoiseSpec noise;
    LoadingDriver loading_driver = LoadingDriver::IndependentPerLoading;
    int corr_band = 3;

    // Diagnostic knobs for closed-form checks.
    bool freeze_coefficients = false;  ///< hold loadings and idio vol at t=0 values
    bool zero_diffusion = false;       ///< drop the diffusion terms of both variance SDEs
    double loading_init_scale = 1.0;   ///< scales the squared loadings at t=0
    double idio_init_scale = 1.0;      ///< scales the squared idio vol at t=0

    void validate() const;
};

/// Latent state of one simulated day on the fine grid t_m = m * delta.
struct GroundTruth {
    int p = 0;
    int k = 0;
    double T = 1.0;
    double delta = 0.0;
    double rho = 0.0;              ///< correlation parameter actually drawn
    Vector times;                  ///< M+1 grid times
    Matrix X;                      ///< p x (M+1) latent log-prices, X(.,0) = 0
    std::vector<Matrix> loadings;  ///< M+1 entries of p x k
    Matrix idio_vol;               ///< p x (M+1), nonnegative
    Matrix corr;                   ///< p x p idiosyncratic correlation

    int steps() const { return static_cast<int>(times.size()) - 1; }
    /// Nearest fine-grid index for a time in [0, T].
    int snap_index(double t) const;
    /// Diagonal of the true spot matrix at grid index m.
    Vector spot_diag(int m) const;
};

struct SpotTruth {
    Matrix sigma_X;
    Matrix sigma_C;
    Matrix sigma_U;
};

/// Unit-diagonal correlation with entries rho^|i-j| inside the band, zero
/// outside, repaired to have smallest eigenvalue >= 1e-8.
Matrix build_banded_correlation(int p, double rho, int band = 3);

/// Euler scheme on the squared loading and idio-variance processes; negative
/// proposals are clamped to zero before square roots are taken.
GroundTruth simulate_ground_truth(const SimConfig& cfg);

/// True spot matrices at tau, snapped to the nearest fine-grid point.
SpotTruth true_spot_volatility(const GroundTruth& gt, double tau);

/// Sample observation times per asset and add market-microstructure noise.
std::vector<TickSeries> contaminate_and_sample(const GroundTruth& gt, const SimConfig& cfg);

}  // namespace spotvol
