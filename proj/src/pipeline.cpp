#include "spotvol/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace spotvol {

std::vector<double> default_tau_grid(double horizon, int count) {
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (count < 1) throw std::invalid_argument("need at least one evaluation time");
    std::vector<double> taus(static_cast<std::size_t>(count));
    for (int j = 1; j <= count; ++j) {
        taus[static_cast<std::size_t>(j - 1)] = horizon * j / (count + 1.0);
    }
    return taus;
}

std::vector<double> default_spot_candidates(double horizon, double delta0,
                                            const std::vector<double>& taus,
                                            const KernelSpec& kernel) {
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (!(delta0 > 0.0)) throw std::invalid_argument("delta0 must be positive");
    if (taus.empty()) throw std::invalid_argument("need at least one evaluation time");
    double hi = horizon / 2.0;
    for (double tau : taus) hi = std::min({hi, tau, horizon - tau});
    // Keep at least ~24 increments inside the effective kernel support so the
    // window Gram matrix has rank to spare beyond the factor spikes.
    const double reach = std::min(kernel.radius(), 2.0);
    double lo = std::max({1.5 * delta0, 12.0 * delta0 / reach, hi / 20.0});
    if (!(hi > lo)) return {std::max(hi, 1.5 * delta0)};
    const int count = 8;
    std::vector<double> grid(static_cast<std::size_t>(count));
    const double step = std::log(hi / lo) / (count - 1);
    for (int i = 0; i < count; ++i) grid[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
    grid.back() = hi;
    return grid;
}

int select_factor_count(const SpotRaw& raw, const FactorSelection& sel, int p, int N) {
    if (sel.fixed_k >= 0) return sel.fixed_k;
    const int avail = static_cast<int>(raw.eigvecs.cols());
    // A window with a single usable eigenpair leaves no ratio to compare.
    if (avail <= 1) return avail;
    int k_max = sel.k_max > 0 ? sel.k_max : default_k_max(p, N);
    // Search only the top half of the usable spectrum: ratios near the window
    // rank ride a vanishing tail and would masquerade as factor gaps.
    k_max = std::min(k_max, std::max(1, avail / 2));
    return estimate_factor_number(raw.eigvals, k_max);
}

EstimateRun estimate_panel(const FilteredPanel& panel, const EstimateOptions& opt) {
    const int p = panel.assets();
    const int N = panel.increments();
    if (p < 1 || N < 1) throw std::invalid_argument("panel is empty");
    const double T = panel.T;

    std::vector<double> taus = opt.taus.empty() ? default_tau_grid(T) : opt.taus;
    for (double tau : taus) {
        if (!(tau > 0.0) || !(tau < T)) {
            throw std::invalid_argument("evaluation times must lie strictly inside (0, T)");
        }
    }
    if (opt.shrinkage.rule != ShrinkageRule::None) opt.shrinkage.validate();
    if (opt.factors.fixed_k > std::min(p, N)) {
        throw std::invalid_argument("fixed factor count exceeds min(p, N)");
    }

    double h = opt.spot_bandwidth;
    if (!(h > 0.0)) {
        const std::vector<double>& cands =
            opt.spot_candidates.empty()
                ? default_spot_candidates(T, panel.delta0, taus, opt.spot_kernel)
                : opt.spot_candidates;
        h = cv_bandwidth_spot(panel, opt.spot_kernel, cands, taus);
    }
    if (!opt.allow_boundary) {
        for (double tau : taus) {
            if (tau < h || tau > T - h) {
                std::ostringstream msg;
                msg << "evaluation time " << tau << " is within one bandwidth (" << h
                    << ") of the sample edge";
                throw std::invalid_argument(msg.str());
            }
        }
    }

    EstimateRun run;
    run.horizon = T;
    run.delta0 = panel.delta0;
    run.spot_bandwidth = h;
    run.filter_bandwidths.assign(panel.bandwidths.data(), panel.bandwidths.data() + p);
    run.degenerate_counts = panel.degenerate_counts;
    run.taus.resize(taus.size());

    parallel_for(
        taus.size(),
        [&](std::size_t ti) {
            TauEstimate& out = run.taus[ti];
            out.tau = taus[ti];
            try {
                SpotRaw raw = realized_spot_matrix(panel, opt.spot_kernel, h, taus[ti]);
                out.kernel_mass = raw.kernel_mass;
                out.boundary = raw.boundary;
                const int k = select_factor_count(raw, opt.factors, p, N);
                out.k_hat = k;
                auto split = spectral_split(raw, k);
                Matrix& common = split.first;
                Matrix& remainder = split.second;

                const int kc = std::min<int>(k, static_cast<int>(raw.eigvecs.cols()));
                Matrix loadings(p, kc);
                for (int l = 0; l < kc; ++l) {
                    loadings.col(l) = raw.eigvecs.col(l) * std::sqrt(std::max(raw.eigvals(l), 0.0));
                }
                out.loadings = loadings;

                Matrix shrunk;
                if (opt.shrinkage.rule == ShrinkageRule::None) {
                    shrunk = remainder;
                } else if (opt.minimal_constant) {
                    CpdResult cpd = min_cpd(remainder, opt.shrinkage, opt.cpd_grid);
                    out.c_rho = cpd.c_rho;
                    out.lambda_min = cpd.lambda_min;
                    out.diagonal_fallback = cpd.diagonal_fallback;
                    shrunk = std::move(cpd.shrunk);
                } else {
                    shrunk = shrink_matrix(remainder, opt.shrinkage);
                    out.c_rho = opt.shrinkage.c_rho;
                    out.lambda_min = min_eigenvalue(shrunk);
                }
                out.sigma_c = std::move(common);
                out.sigma_u = shrunk;
                out.sigma_x = out.sigma_c + shrunk;
                if (opt.compute_precision) {
                    try {
                        out.precision = precision_matrix(loadings, shrunk);
                    } catch (const std::exception& e) {
                        out.precision_error = e.what();
                    }
                }
            } catch (const std::exception& e) {
                out.error = e.what();
            }
        },
        opt.threads);
    return run;
}

EstimateRun estimate_ticks(const std::vector<TickSeries>& ticks, const EstimateOptions& opt) {
    if (ticks.empty()) throw std::invalid_argument("no tick series given");
    if (!(opt.horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    const double delta0 = opt.delta0 > 0.0 ? opt.delta0 : default_pseudo_step(ticks, opt.horizon);
    BandwidthChoice bw;
    if (!opt.filter_bandwidths.empty()) {
        bw.fixed = opt.filter_bandwidths;
    } else {
        bw.candidates = opt.filter_candidates;
    }
    FilteredPanel panel = build_panel(ticks, opt.filter_kernel, opt.horizon, delta0, bw);
    return estimate_panel(panel, opt);
}

}  // namespace spotvol
