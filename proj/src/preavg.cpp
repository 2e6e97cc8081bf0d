#include "spotvol/preavg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spotvol {

namespace {

void check_ticks_for_filter(const TickSeries& ticks) {
    if (ticks.times.empty()) throw EmptySeries("kernel filter needs at least one tick");
    if (ticks.times.size() != ticks.prices.size())
        throw ShapeMismatch("tick times/prices length mismatch");
    double prev = 0.0;
    for (std::size_t j = 0; j < ticks.times.size(); ++j) {
        if (!std::isfinite(ticks.times[j]) || !std::isfinite(ticks.prices[j]))
            throw NonFiniteState("non-finite tick");
        if (ticks.times[j] <= prev)
            throw OutOfRange("tick times must be strictly increasing and > 0");
        prev = ticks.times[j];
    }
}

// Window of tick indices with |t_j - g| <= radius.
std::pair<std::size_t, std::size_t> tick_window(const std::vector<double>& times, double g,
                                                double radius) {
    if (!std::isfinite(radius)) return {0, times.size()};
    auto lo = std::lower_bound(times.begin(), times.end(), g - radius);
    auto hi = std::upper_bound(times.begin(), times.end(), g + radius);
    return {static_cast<std::size_t>(lo - times.begin()),
            static_cast<std::size_t>(hi - times.begin())};
}

}  // namespace

FilterResult kernel_filter(const TickSeries& ticks, const KernelSpec& kernel, double b,
                           const std::vector<double>& grid) {
    if (!(b > 0.0)) throw std::invalid_argument("bandwidth must be positive");
    check_ticks_for_filter(ticks);
    if (!std::is_sorted(grid.begin(), grid.end()))
        throw std::invalid_argument("evaluation grid must be sorted");

    const auto& t = ticks.times;
    const auto& y = ticks.prices;
    const double radius = kernel.radius() * b;

    FilterResult out;
    out.values = Vector::Zero(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t g = 0; g < grid.size(); ++g) {
        auto [lo, hi] = tick_window(t, grid[g], radius);
        if (lo == hi) {
            if (kernel.compact()) {
                out.degenerate.push_back(static_cast<int>(g));
                continue;
            }
            // Gaussian tails: fall back to the full sum for this point.
            lo = 0;
            hi = t.size();
        }
        double acc = 0.0;
        for (std::size_t j = lo; j < hi; ++j) {
            double spacing = t[j] - (j == 0 ? 0.0 : t[j - 1]);
            acc += spacing * kernel((t[j] - grid[g]) / b) / b * y[j];
        }
        out.values(static_cast<Eigen::Index>(g)) = acc;
    }

    // Impute empty-window points from the nearest populated grid point.
    if (!out.degenerate.empty() &&
        out.degenerate.size() < grid.size()) {
        std::vector<bool> bad(grid.size(), false);
        for (int g : out.degenerate) bad[static_cast<std::size_t>(g)] = true;
        for (int g : out.degenerate) {
            for (std::size_t d = 1; d < grid.size(); ++d) {
                std::size_t gl = static_cast<std::size_t>(g);
                if (gl >= d && !bad[gl - d]) {
                    out.values(g) = out.values(static_cast<Eigen::Index>(gl - d));
                    break;
                }
                if (gl + d < grid.size() && !bad[gl + d]) {
                    out.values(g) = out.values(static_cast<Eigen::Index>(gl + d));
                    break;
                }
            }
        }
    }
    return out;
}

double cv_bandwidth_preaverage(const TickSeries& ticks, const KernelSpec& kernel,
                               const std::vector<double>& candidates) {
    check_ticks_for_filter(ticks);
    if (ticks.times.size() < 2) throw EmptySeries("leave-one-out needs at least 2 ticks");
    if (candidates.empty()) throw std::invalid_argument("no bandwidth candidates");
    for (double b : candidates)
        if (!(b > 0.0)) throw std::invalid_argument("bandwidth candidates must be positive");

    const auto& t = ticks.times;
    const auto& y = ticks.prices;
    const std::size_t n = t.size();
    const double Ti = t.back();
    const double lo_t = 0.05 * Ti;
    const double hi_t = 0.95 * Ti;

    std::vector<std::size_t> eval;
    for (std::size_t j = 0; j < n; ++j)
        if (t[j] >= lo_t && t[j] <= hi_t) eval.push_back(j);
    if (eval.empty()) throw std::invalid_argument("empty evaluation window for bandwidth CV");

    std::vector<double> sorted(candidates);
    std::sort(sorted.begin(), sorted.end());

    double best_b = 0.0;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t valid_candidates = 0;
    for (double b : sorted) {
        const double radius = kernel.radius() * b;
        double loss = 0.0;
        std::size_t degenerate = 0;
        std::size_t used = 0;
        for (std::size_t j : eval) {
            auto [wlo, whi] = tick_window(t, t[j], radius);
            if (whi - wlo <= 1) {
                ++degenerate;
                continue;
            }
            double acc = 0.0;
            for (std::size_t m = wlo; m < whi; ++m) {
                if (m == j) continue;
                double spacing = t[m] - (m == 0 ? 0.0 : t[m - 1]);
                // Removing tick j widens the spacing of the next tick.
                if (m == j + 1) spacing = t[m] - (j == 0 ? 0.0 : t[j - 1]);
                acc += spacing * kernel((t[m] - t[j]) / b) / b * y[m];
            }
            loss += (y[j] - acc) * (y[j] - acc);
            ++used;
        }
        if (degenerate * 2 > eval.size()) continue;
        ++valid_candidates;
        loss /= static_cast<double>(used);
        if (loss < best_loss) {
            best_loss = loss;
            best_b = b;
        }
    }
    if (valid_candidates == 0)
        throw AllDegenerate("every bandwidth candidate leaves most windows empty");
    return best_b;
}

double default_pseudo_step(const std::vector<TickSeries>& ticks, double T) {
    if (ticks.empty()) throw EmptySeries("no tick series");
    std::size_t n_min = ticks.front().size();
    for (const auto& ts : ticks) n_min = std::min(n_min, ts.size());
    if (n_min < 2) throw EmptySeries("tick series needs at least 2 observations");
    int N = static_cast<int>(std::floor(std::pow(static_cast<double>(n_min), 2.0 / 3.0)));
    N = std::max(N, 2);
    return T / static_cast<double>(N);
}

std::vector<double> default_bandwidth_candidates(const TickSeries& ticks, double T) {
    if (ticks.times.size() < 2) throw EmptySeries("tick series needs at least 2 observations");
    std::vector<double> gaps;
    gaps.reserve(ticks.times.size() - 1);
    for (std::size_t j = 1; j < ticks.times.size(); ++j)
        gaps.push_back(ticks.times[j] - ticks.times[j - 1]);
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    double lo = 2.0 * gaps[gaps.size() / 2];
    double hi = 0.1 * T;
    if (!(lo > 0.0)) lo = hi;
    if (lo >= hi) return {lo};
    const int count = 10;
    std::vector<double> out;
    out.reserve(count);
    double ratio = std::pow(hi / lo, 1.0 / (count - 1));
    double b = lo;
    for (int c = 0; c < count; ++c, b *= ratio) out.push_back(b);
    out.back() = hi;
    return out;
}

FilteredPanel build_panel(const std::vector<TickSeries>& ticks, const KernelSpec& kernel,
                          double T, double delta0, const BandwidthChoice& bandwidth) {
    if (ticks.empty()) throw EmptySeries("no tick series");
    if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
    if (!(delta0 > 0.0) || delta0 >= T)
        throw std::invalid_argument("pseudo-grid step must be in (0, T)");
    const int p = static_cast<int>(ticks.size());
    if (!bandwidth.fixed.empty() && bandwidth.fixed.size() != 1 &&
        bandwidth.fixed.size() != static_cast<std::size_t>(p))
        throw ShapeMismatch("fixed bandwidths must have one entry or one per asset");

    const int N = static_cast<int>(std::floor(T / delta0 + 1e-9));
    FilteredPanel panel;
    panel.T = T;
    panel.delta0 = delta0;
    panel.grid = Vector::LinSpaced(N + 1, 0.0, N * delta0);
    panel.values.resize(p, N + 1);
    panel.bandwidths.resize(p);
    panel.degenerate_counts.assign(static_cast<std::size_t>(p), 0);

    std::vector<double> grid(panel.grid.data(), panel.grid.data() + panel.grid.size());
    parallel_for(static_cast<std::size_t>(p), [&](std::size_t i) {
        const TickSeries& ts = ticks[i];
        double b;
        if (!bandwidth.fixed.empty()) {
            b = bandwidth.fixed.size() == 1 ? bandwidth.fixed[0] : bandwidth.fixed[i];
            if (!(b > 0.0)) throw std::invalid_argument("fixed bandwidth must be positive");
        } else {
            std::vector<double> cands = bandwidth.candidates.empty()
                                            ? default_bandwidth_candidates(ts, T)
                                            : bandwidth.candidates;
            b = cv_bandwidth_preaverage(ts, kernel, cands);
        }
        FilterResult fr = kernel_filter(ts, kernel, b, grid);
        panel.values.row(static_cast<Eigen::Index>(i)) = fr.values.transpose();
        panel.bandwidths(static_cast<Eigen::Index>(i)) = b;
        panel.degenerate_counts[i] = static_cast<int>(fr.degenerate.size());
    });

    if (!panel.values.allFinite()) throw NonFiniteState("filtered panel contains non-finite values");
    return panel;
}

}  // namespace spotvol
