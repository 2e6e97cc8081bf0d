#include "spotvol/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <utility>

#include "json.hpp"
#include "spotvol/metrics.hpp"

namespace spotvol {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

SamplingMode parse_sampling(const std::string& name) {
    if (name == "sync" || name == "synchronous") return SamplingMode::Synchronous;
    if (name == "async" || name == "poisson") return SamplingMode::PoissonClock;
    throw std::invalid_argument("unknown sampling mode: " + name);
}

std::string sampling_name(SamplingMode mode) {
    return mode == SamplingMode::Synchronous ? "sync" : "async";
}

NoiseMode parse_noise_mode(const std::string& name) {
    if (name == "proportional") return NoiseMode::SignalProportional;
    if (name == "power-law" || name == "powerlaw") return NoiseMode::PowerLaw;
    throw std::invalid_argument("unknown noise mode: " + name);
}

std::string noise_mode_name(NoiseMode mode) {
    return mode == NoiseMode::SignalProportional ? "proportional" : "power-law";
}

ChiProfile parse_chi_profile(const std::string& name) {
    if (name == "constant") return ChiProfile::Constant;
    if (name == "ushape" || name == "u-shape") return ChiProfile::UShape;
    throw std::invalid_argument("unknown chi profile: " + name);
}

std::string chi_profile_name(ChiProfile profile) {
    return profile == ChiProfile::Constant ? "constant" : "ushape";
}

LoadingDriver parse_loading_driver(const std::string& name) {
    if (name == "independent") return LoadingDriver::IndependentPerLoading;
    if (name == "shared") return LoadingDriver::SharedPerAsset;
    throw std::invalid_argument("unknown loading driver: " + name);
}

std::string loading_driver_name(LoadingDriver driver) {
    return driver == LoadingDriver::IndependentPerLoading ? "independent" : "shared";
}

namespace {

constexpr std::uint64_t kCellStride = 1000003;  // seeds per cell; bounds replications

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double se_of(const std::vector<double>& v) {
    const std::size_t n = v.size();
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
}

double nan_mean(const std::vector<double>& v) {
    double s = 0.0;
    std::size_t n = 0;
    for (double x : v) {
        if (std::isfinite(x)) {
            s += x;
            ++n;
        }
    }
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    return s / static_cast<double>(n);
}

SimConfig make_sim_config(const HarnessConfig& cfg, int p, double sigma_eps, SamplingMode mode,
                          std::uint64_t seed) {
    SimConfig sc;
    sc.p = p;
    sc.k = cfg.factors;
    sc.T = cfg.horizon;
    sc.delta = cfg.delta;
    sc.seed = seed;
    sc.sampling.mode = mode;
    sc.noise.mode = NoiseMode::SignalProportional;
    sc.noise.sigma_eps = sigma_eps;
    return sc;
}

struct PilotOut {
    std::vector<double> filter_bw;
    double spot_bw = 0.0;
};

// Pilot draws fix the tuning constants for a cell: per-asset filter bandwidths
// and the smoothing bandwidth are cross-validated on a handful of independent
// replications and averaged, then held fixed across the evaluation draws.
PilotOut run_pilot(const HarnessConfig& cfg, int p, double sigma_eps, SamplingMode mode,
                   std::uint64_t cell_offset, const std::vector<double>& taus) {
    PilotOut out;
    const bool need_b = !(cfg.filter_bandwidth > 0.0);
    const bool need_h = !(cfg.spot_bandwidth > 0.0);
    if (!need_b && !need_h) {
        out.filter_bw.assign(static_cast<std::size_t>(p), cfg.filter_bandwidth);
        out.spot_bw = cfg.spot_bandwidth;
        return out;
    }
    std::vector<double> b_sum(static_cast<std::size_t>(p), 0.0);
    double h_sum = 0.0;
    for (int c = 0; c < cfg.cv_replications; ++c) {
        const std::uint64_t seed =
            derive_seed(cfg.seed, Stream::CvReplication, cell_offset + static_cast<std::uint64_t>(c));
        const SimConfig sc = make_sim_config(cfg, p, sigma_eps, mode, seed);
        const GroundTruth gt = simulate_ground_truth(sc);
        const std::vector<TickSeries> ticks = contaminate_and_sample(gt, sc);
        const double delta0 =
            cfg.delta0 > 0.0 ? cfg.delta0 : default_pseudo_step(ticks, cfg.horizon);
        BandwidthChoice bw;
        if (!need_b) bw.fixed = {cfg.filter_bandwidth};
        const FilteredPanel panel = build_panel(ticks, cfg.filter_kernel, cfg.horizon, delta0, bw);
        if (need_b) {
            for (int i = 0; i < p; ++i) b_sum[static_cast<std::size_t>(i)] += panel.bandwidths(i);
        }
        if (need_h) {
            h_sum += cv_bandwidth_spot(
                panel, cfg.spot_kernel,
                default_spot_candidates(cfg.horizon, delta0, taus, cfg.spot_kernel), taus);
        }
    }
    const double reps = static_cast<double>(cfg.cv_replications);
    if (need_b) {
        out.filter_bw.resize(static_cast<std::size_t>(p));
        for (int i = 0; i < p; ++i) {
            out.filter_bw[static_cast<std::size_t>(i)] = b_sum[static_cast<std::size_t>(i)] / reps;
        }
    } else {
        out.filter_bw.assign(static_cast<std::size_t>(p), cfg.filter_bandwidth);
    }
    out.spot_bw = need_h ? h_sum / reps : cfg.spot_bandwidth;
    return out;
}

struct RepOut {
    std::vector<double> msn_u;  // per rule, mean over evaluation times
    std::vector<double> msn_x;
    std::vector<double> mrn_x;
    std::vector<double> c_rho;
};

RepOut run_replication(const HarnessConfig& cfg, int p, double sigma_eps, SamplingMode mode,
                       std::uint64_t rep_seed, const std::vector<double>& filter_bw,
                       double spot_bw, const std::vector<double>& taus) {
    const SimConfig sc = make_sim_config(cfg, p, sigma_eps, mode, rep_seed);
    const GroundTruth gt = simulate_ground_truth(sc);
    const std::vector<TickSeries> ticks = contaminate_and_sample(gt, sc);
    const double delta0 = cfg.delta0 > 0.0 ? cfg.delta0 : default_pseudo_step(ticks, cfg.horizon);
    BandwidthChoice bw;
    bw.fixed = filter_bw;
    const FilteredPanel panel = build_panel(ticks, cfg.filter_kernel, cfg.horizon, delta0, bw);
    const int N = panel.increments();

    const std::size_t n_rules = cfg.rules.size();
    std::vector<std::vector<double>> mu(n_rules), mx(n_rules), rx(n_rules), cs(n_rules);
    for (double tau : taus) {
        const SpotTruth truth = true_spot_volatility(gt, tau);
        const SpotRaw raw = realized_spot_matrix(panel, cfg.spot_kernel, spot_bw, tau);
        const int k = select_factor_count(raw, cfg.selection, p, N);
        const auto split = spectral_split(raw, k);
        for (std::size_t ri = 0; ri < n_rules; ++ri) {
            Matrix shrunk;
            double c = std::numeric_limits<double>::quiet_NaN();
            if (cfg.rules[ri] == ShrinkageRule::None) {
                shrunk = split.second;
            } else {
                ShrinkageSpec spec;
                spec.rule = cfg.rules[ri];
                spec.correlation_scaled = true;
                spec.scad_a = cfg.scad_a;
                spec.alasso_eta = cfg.alasso_eta;
                CpdResult cpd = min_cpd(split.second, spec);
                shrunk = std::move(cpd.shrunk);
                c = cpd.c_rho;
            }
            const Matrix sigma_x = split.first + shrunk;
            mu[ri].push_back(spectral_norm(shrunk - truth.sigma_U));
            mx[ri].push_back(spectral_norm(sigma_x - truth.sigma_X));
            rx[ri].push_back(relative_error_norm(sigma_x, truth.sigma_X));
            cs[ri].push_back(c);
        }
    }
    RepOut out;
    out.msn_u.resize(n_rules);
    out.msn_x.resize(n_rules);
    out.mrn_x.resize(n_rules);
    out.c_rho.resize(n_rules);
    for (std::size_t ri = 0; ri < n_rules; ++ri) {
        out.msn_u[ri] = mean_of(mu[ri]);
        out.msn_x[ri] = mean_of(mx[ri]);
        out.mrn_x[ri] = mean_of(rx[ri]);
        out.c_rho[ri] = nan_mean(cs[ri]);
    }
    return out;
}

std::string fmt_cell(double v) {
    if (!std::isfinite(v)) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

void HarnessConfig::validate() const {
    if (panel_sizes.empty()) throw std::invalid_argument("panel_sizes must be nonempty");
    for (int p : panel_sizes) {
        if (p < 1) throw std::invalid_argument("panel sizes must be positive");
    }
    if (noise_levels.empty()) throw std::invalid_argument("noise_levels must be nonempty");
    for (double s : noise_levels) {
        if (!(s >= 0.0)) throw std::invalid_argument("noise levels must be nonnegative");
    }
    if (sampling_modes.empty()) throw std::invalid_argument("sampling_modes must be nonempty");
    if (rules.empty()) throw std::invalid_argument("rules must be nonempty");
    if (replications < 1) throw std::invalid_argument("replications must be at least 1");
    if (static_cast<std::uint64_t>(replications) >= kCellStride) {
        throw std::invalid_argument("replications must be below 1000003");
    }
    const bool needs_cv = !(filter_bandwidth > 0.0) || !(spot_bandwidth > 0.0);
    if (needs_cv && cv_replications < 1) {
        throw std::invalid_argument("cv_replications must be at least 1 when bandwidths are cross-validated");
    }
    if (cv_replications < 0 || static_cast<std::uint64_t>(cv_replications) >= kCellStride) {
        throw std::invalid_argument("cv_replications out of range");
    }
    if (tau_count < 1) throw std::invalid_argument("tau_count must be at least 1");
    if (factors < 0 || factors > 3) throw std::invalid_argument("factors must be in [0, 3]");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (!(delta > 0.0) || delta >= horizon) {
        throw std::invalid_argument("delta must lie in (0, horizon)");
    }
    if (delta0 < 0.0 || delta0 >= horizon / 2.0) {
        throw std::invalid_argument("delta0 must be 0 (automatic) or in (0, horizon/2)");
    }
    if (filter_bandwidth < 0.0) throw std::invalid_argument("filter_bandwidth must be nonnegative");
    if (spot_bandwidth < 0.0) throw std::invalid_argument("spot_bandwidth must be nonnegative");
    if (!(scad_a > 2.0)) throw std::invalid_argument("scad_a must exceed 2");
    if (!(alasso_eta >= 1.0)) throw std::invalid_argument("alasso_eta must be at least 1");
}

bool HarnessResult::all_ok() const {
    for (const CellResult& cell : cells) {
        if (!cell.ok) return false;
    }
    return true;
}

HarnessResult run_tables(const HarnessConfig& cfg) {
    cfg.validate();
    const std::vector<double> taus = default_tau_grid(cfg.horizon, cfg.tau_count);
    HarnessResult result;
    std::uint64_t cell_index = 0;
    for (int p : cfg.panel_sizes) {
        for (double sigma_eps : cfg.noise_levels) {
            for (SamplingMode mode : cfg.sampling_modes) {
                CellResult cell;
                cell.p = p;
                cell.sigma_eps = sigma_eps;
                cell.mode = mode;
                cell.taus = taus;
                for (ShrinkageRule r : cfg.rules) cell.rule_names.push_back(rule_name(r));
                cell.rules.resize(cfg.rules.size());
                const std::uint64_t offset = cell_index * kCellStride;
                try {
                    const PilotOut pilot = run_pilot(cfg, p, sigma_eps, mode, offset, taus);
                    cell.spot_bandwidth = pilot.spot_bw;
                    cell.mean_filter_bandwidth = mean_of(pilot.filter_bw);
                    const std::size_t reps = static_cast<std::size_t>(cfg.replications);
                    std::vector<RepOut> rep_out(reps);
                    parallel_for(
                        reps,
                        [&](std::size_t r) {
                            const std::uint64_t seed =
                                derive_seed(cfg.seed, Stream::Replication, offset + r);
                            rep_out[r] = run_replication(cfg, p, sigma_eps, mode, seed,
                                                         pilot.filter_bw, pilot.spot_bw, taus);
                        },
                        cfg.threads);
                    for (std::size_t ri = 0; ri < cfg.rules.size(); ++ri) {
                        RuleSummary& rs = cell.rules[ri];
                        std::vector<double> cs;
                        for (const RepOut& ro : rep_out) {
                            rs.rep_msn_u.push_back(ro.msn_u[ri]);
                            rs.rep_msn_x.push_back(ro.msn_x[ri]);
                            rs.rep_mrn_x.push_back(ro.mrn_x[ri]);
                            cs.push_back(ro.c_rho[ri]);
                        }
                        rs.msn_u = mean_of(rs.rep_msn_u);
                        rs.msn_x = mean_of(rs.rep_msn_x);
                        rs.mrn_x = mean_of(rs.rep_mrn_x);
                        rs.se_msn_u = se_of(rs.rep_msn_u);
                        rs.se_msn_x = se_of(rs.rep_msn_x);
                        rs.se_mrn_x = se_of(rs.rep_mrn_x);
                        rs.mean_c_rho = nan_mean(cs);
                    }
                    cell.ok = true;
                } catch (const std::exception& e) {
                    cell.ok = false;
                    cell.error = e.what();
                }
                result.cells.push_back(std::move(cell));
                ++cell_index;
            }
        }
    }
    return result;
}

void write_tables(const HarnessResult& result, const HarnessConfig& cfg, const std::string& dir) {
    fs::create_directories(dir);
    struct MetricDef {
        const char* label;
        double RuleSummary::*value;
        double RuleSummary::*se;
    };
    const MetricDef metrics[3] = {
        {"msn_u", &RuleSummary::msn_u, &RuleSummary::se_msn_u},
        {"msn_x", &RuleSummary::msn_x, &RuleSummary::se_msn_x},
        {"mrn_x", &RuleSummary::mrn_x, &RuleSummary::se_mrn_x},
    };
    const SamplingMode mode_order[2] = {SamplingMode::Synchronous, SamplingMode::PoissonClock};
    for (int m = 0; m < 3; ++m) {
        for (int mi = 0; mi < 2; ++mi) {
            const SamplingMode mode = mode_order[mi];
            if (std::find(cfg.sampling_modes.begin(), cfg.sampling_modes.end(), mode) ==
                cfg.sampling_modes.end()) {
                continue;
            }
            const int table_no = 2 * m + mi + 1;
            const fs::path path = fs::path(dir) / ("table" + std::to_string(table_no) + ".csv");
            std::ofstream out(path);
            if (!out) throw IoError("cannot open " + path.string() + " for writing");
            out << "p,sigma_eps";
            for (const ShrinkageRule r : cfg.rules) {
                out << ',' << rule_name(r) << ',' << rule_name(r) << "_se";
            }
            out << '\n';
            for (const CellResult& cell : result.cells) {
                if (cell.mode != mode) continue;
                out << cell.p << ',' << fmt_cell(cell.sigma_eps);
                for (std::size_t ri = 0; ri < cell.rules.size(); ++ri) {
                    if (!cell.ok) {
                        out << ",NA,NA";
                    } else {
                        out << ',' << fmt_cell(cell.rules[ri].*(metrics[m].value)) << ','
                            << fmt_cell(cell.rules[ri].*(metrics[m].se));
                    }
                }
                out << '\n';
            }
            if (!out) throw IoError("failed while writing " + path.string());
        }
    }

    ordered_json root;
    ordered_json config;
    config["panel_sizes"] = cfg.panel_sizes;
    config["noise_levels"] = cfg.noise_levels;
    {
        std::vector<std::string> modes;
        for (SamplingMode mode : cfg.sampling_modes) modes.push_back(sampling_name(mode));
        config["sampling_modes"] = modes;
    }
    {
        std::vector<std::string> names;
        for (ShrinkageRule r : cfg.rules) names.push_back(rule_name(r));
        config["rules"] = names;
    }
    config["replications"] = cfg.replications;
    config["cv_replications"] = cfg.cv_replications;
    config["tau_count"] = cfg.tau_count;
    config["factors"] = cfg.factors;
    config["fixed_k"] = cfg.selection.fixed_k;
    config["k_max"] = cfg.selection.k_max;
    config["horizon"] = cfg.horizon;
    config["delta"] = cfg.delta;
    config["seed"] = cfg.seed;
    config["filter_kernel"] = cfg.filter_kernel.str();
    config["spot_kernel"] = cfg.spot_kernel.str();
    config["delta0"] = cfg.delta0;
    config["filter_bandwidth"] = cfg.filter_bandwidth;
    config["spot_bandwidth"] = cfg.spot_bandwidth;
    config["scad_a"] = cfg.scad_a;
    config["alasso_eta"] = cfg.alasso_eta;
    root["config"] = std::move(config);

    ordered_json cells = ordered_json::array();
    for (const CellResult& cell : result.cells) {
        ordered_json jc;
        jc["p"] = cell.p;
        jc["sigma_eps"] = cell.sigma_eps;
        jc["mode"] = sampling_name(cell.mode);
        jc["ok"] = cell.ok;
        jc["error"] = cell.error;
        jc["spot_bandwidth"] = cell.spot_bandwidth;
        jc["mean_filter_bandwidth"] = cell.mean_filter_bandwidth;
        jc["taus"] = cell.taus;
        ordered_json rules;
        for (std::size_t ri = 0; ri < cell.rules.size(); ++ri) {
            const RuleSummary& rs = cell.rules[ri];
            ordered_json jr;
            jr["msn_u"] = rs.msn_u;
            jr["se_msn_u"] = rs.se_msn_u;
            jr["msn_x"] = rs.msn_x;
            jr["se_msn_x"] = rs.se_msn_x;
            jr["mrn_x"] = rs.mrn_x;
            jr["se_mrn_x"] = rs.se_mrn_x;
            jr["mean_c_rho"] = rs.mean_c_rho;
            jr["rep_msn_u"] = rs.rep_msn_u;
            jr["rep_msn_x"] = rs.rep_msn_x;
            jr["rep_mrn_x"] = rs.rep_mrn_x;
            rules[cell.rule_names[ri]] = std::move(jr);
        }
        jc["rules"] = std::move(rules);
        cells.push_back(std::move(jc));
    }
    root["cells"] = std::move(cells);

    const fs::path jpath = fs::path(dir) / "tables.json";
    std::ofstream jout(jpath);
    if (!jout) throw IoError("cannot open " + jpath.string() + " for writing");
    jout << root.dump(2) << '\n';
    if (!jout) throw IoError("failed while writing " + jpath.string());
}

}  // namespace spotvol
