#pragma once

#include "spotvol/common.hpp"
#include "spotvol/kernels.hpp"
#include "spotvol/sim.hpp"

#include <vector>

namespace spotvol {

/// Kernel-filter output on one evaluation grid.
struct FilterResult {
    Vector values;
    /// Grid indices whose kernel window held no tick; their values were copied
    /// from the nearest grid point with a populated window.
    std::vector<int> degenerate;
};

/// Weighted average of observed prices around each grid point,
///   X~(t) = sum_j (t_j - t_{j-1}) * L_b(t_j - t) * Y_j,
/// with t_0 := 0, so the first tick carries its full spacing from the open.
FilterResult kernel_filter(const TickSeries& ticks, const KernelSpec& kernel, double b,
                           const std::vector<double>& grid);

/// Leave-one-out bandwidth selection. Prediction error is averaged over ticks
/// inside [0.05*T_i, 0.95*T_i] (T_i = last tick); candidates where more than
/// half of those points have empty leave-one-out windows are disqualified.
double cv_bandwidth_preaverage(const TickSeries& ticks, const KernelSpec& kernel,
                               const std::vector<double>& candidates);

/// Pre-averaging bandwidths: per-asset fixed values (size p, or size 1 to
/// broadcast), or cross-validation over `candidates` when `fixed` is empty
/// (empty candidates fall back to the per-asset default grid).
struct BandwidthChoice {
    std::vector<double> fixed;
    std::vector<double> candidates;
};

/// Common-grid panel of filtered log-prices.
struct FilteredPanel {
    double T = 1.0;
    double delta0 = 0.0;
    Vector grid;                         ///< N+1 points j * delta0
    Matrix values;                       ///< p x (N+1)
    Vector bandwidths;                   ///< per-asset b actually used
    std::vector<int> degenerate_counts;  ///< per-asset imputed grid points

    int assets() const { return static_cast<int>(values.rows()); }
    int increments() const { return static_cast<int>(grid.size()) - 1; }
};

FilteredPanel build_panel(const std::vector<TickSeries>& ticks, const KernelSpec& kernel,
                          double T, double delta0, const BandwidthChoice& bandwidth);

/// Default pseudo-grid spacing: N = floor(min_i n_i ^ (2/3)) cells over [0, T].
double default_pseudo_step(const std::vector<TickSeries>& ticks, double T);

/// Default bandwidth grid: 10 geometric points from twice the median tick gap
/// up to 0.1 * T.
std::vector<double> default_bandwidth_candidates(const TickSeries& ticks, double T);

}  // namespace spotvol
