#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spotvol/preavg.hpp"
#include "spotvol/shrink.hpp"
#include "spotvol/sim.hpp"
#include "spotvol/spotpca.hpp"

namespace spotvol {

// How the number of common components is chosen at each evaluation time.
struct FactorSelection {
    int fixed_k = -1;  // >= 0 pins the factor count, disabling the ratio criterion
    int k_max = 0;     // search bound for the ratio criterion; 0 means automatic
};

struct EstimateOptions {
    double horizon = 1.0;
    KernelSpec filter_kernel{KernelName::Gaussian, false};
    KernelSpec spot_kernel{KernelName::Epanechnikov, false};

    // Pseudo-sampling step for the filtered grid; 0 selects it from the
    // sparsest series via the n^{-2/3} rule.
    double delta0 = 0.0;

    // Pre-averaging bandwidth. A single positive value is broadcast to all
    // series, a vector must match the panel size, and empty means
    // cross-validate per series.
    std::vector<double> filter_bandwidths;
    std::vector<double> filter_candidates;  // CV grid; empty means automatic

    // Smoothing bandwidth for the spot covariance. 0 means cross-validate.
    double spot_bandwidth = 0.0;
    std::vector<double> spot_candidates;  // CV grid; empty means automatic

    std::vector<double> taus;  // evaluation times; empty means 10 equispaced
    FactorSelection factors;

    ShrinkageSpec shrinkage;        // applied to the residual covariance
    bool minimal_constant = true;   // search the smallest c that keeps PD
    std::vector<double> cpd_grid;   // constant grid for the search; empty = default

    bool allow_boundary = false;    // keep taus closer than h to the edges
    bool compute_precision = false;
    unsigned threads = 0;
};

// Result at one evaluation time. A non-empty `error` marks a failure local
// to this tau; other taus are unaffected.
struct TauEstimate {
    double tau = 0.0;
    int k_hat = 0;
    Matrix sigma_x;       // common + shrunk remainder
    Matrix sigma_c;       // rank-k common part
    Matrix sigma_u;       // shrunk remainder
    Matrix loadings;      // p x k_hat
    double c_rho = std::numeric_limits<double>::quiet_NaN();
    double lambda_min = std::numeric_limits<double>::quiet_NaN();
    bool diagonal_fallback = false;
    double kernel_mass = 0.0;
    bool boundary = false;
    std::optional<Matrix> precision;
    std::string error;            // empty when the estimate is usable
    std::string precision_error;  // precision-only failure, estimate still valid

    bool ok() const { return error.empty(); }
};

struct EstimateRun {
    double horizon = 0.0;
    double delta0 = 0.0;
    double spot_bandwidth = 0.0;
    std::vector<double> filter_bandwidths;
    std::vector<int> degenerate_counts;
    std::vector<TauEstimate> taus;
};

// jT/(count+1) for j = 1..count: interior, equispaced, symmetric about T/2.
std::vector<double> default_tau_grid(double horizon, int count = 10);

// Factor count at one evaluation time: the pinned value when given, otherwise
// the eigenvalue-ratio criterion restricted to the window's positive spectrum.
int select_factor_count(const SpotRaw& raw, const FactorSelection& sel, int p, int N);

// Geometric grid of smoothing bandwidths that keeps every tau at least one
// bandwidth away from the sample edges. The lower end is floored so the
// kernel window spans enough grid increments to resolve the factor spikes;
// a window narrower than the factor count would be removed entirely by the
// spectral split.
std::vector<double> default_spot_candidates(double horizon, double delta0,
                                            const std::vector<double>& taus,
                                            const KernelSpec& kernel);

// Full estimation from raw tick series: filter, smooth, split, shrink.
EstimateRun estimate_ticks(const std::vector<TickSeries>& ticks,
                           const EstimateOptions& opt);

// Same pipeline starting from an already-filtered panel.
EstimateRun estimate_panel(const FilteredPanel& panel, const EstimateOptions& opt);

}  // namespace spotvol
