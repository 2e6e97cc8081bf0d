#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spotvol/harness.hpp"
#include "spotvol/io.hpp"
#include "spotvol/pipeline.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitIncomplete = 4;

struct SimulateArgs {
    std::string out;
    int p = 100;
    int k = 3;
    double horizon = 1.0;
    double delta = 1.0 / 2340.0;
    std::uint64_t seed = 1;
    std::string sampling = "sync";
    std::int64_t sync_step = 1;
    double lambda_low = 1.0;
    double lambda_high = 3.0;
    std::string noise = "proportional";
    double sigma_eps = 0.05;
    double beta = 0.1;
    std::string chi = "constant";
    double chi_a = 1.0;
    double chi_b = 0.0;
    std::string loading_driver = "independent";
    int corr_band = 3;
    std::vector<double> taus;
    int tau_count = 10;
    bool binary = false;
    bool freeze_coefficients = false;
    bool zero_diffusion = false;
};

struct EstimateArgs {
    std::string in;
    std::string out;
    double horizon = 1.0;
    std::string filter_kernel = "gaussian";
    std::string spot_kernel = "epanechnikov";
    double delta0 = 0.0;
    std::vector<double> filter_bandwidths;
    std::vector<double> filter_candidates;
    double spot_bandwidth = 0.0;
    std::vector<double> spot_candidates;
    std::vector<double> taus;
    int tau_count = 10;
    int fixed_k = -1;
    int k_max = 0;
    std::string rule = "scad";
    double c_rho = -1.0;
    bool flat_threshold = false;
    double scad_a = 3.7;
    double alasso_eta = 3.0;
    std::vector<double> cpd_grid;
    bool allow_boundary = false;
    bool precision = false;
    unsigned threads = 0;
    bool binary = false;
};

struct EvaluateArgs {
    std::string estimate_dir;
    std::string truth_dir;
    std::string out;
};

struct TablesArgs {
    std::string out;
    std::vector<int> panel_sizes{100};
    std::vector<double> noise_levels{0.05, 0.1, 0.2};
    std::vector<std::string> modes{"sync", "async"};
    std::vector<std::string> rules{"naive", "scad", "alasso", "soft", "hard"};
    int replications = 20;
    int cv_replications = 5;
    int tau_count = 10;
    int factors = 3;
    int fixed_k = -1;
    int k_max = 0;
    double horizon = 1.0;
    double delta = 1.0 / 2340.0;
    std::uint64_t seed = 1;
    std::string filter_kernel = "gaussian";
    std::string spot_kernel = "epanechnikov";
    double delta0 = 0.0;
    double filter_bandwidth = 0.0;
    double spot_bandwidth = 0.0;
    double scad_a = 3.7;
    double alasso_eta = 3.0;
    unsigned threads = 0;
    bool dry_run = false;
};

void echo_config(const CLI::App& app, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/run.config";
    std::ofstream out(path);
    if (!out) throw spotvol::IoError("cannot open " + path + " for writing");
    // Unset list options echo as "{}", which the reader refuses; an absent key
    // means the same thing, so drop those lines.
    std::istringstream lines(app.config_to_str(true, false));
    std::string line;
    while (std::getline(lines, line)) {
        if (line.size() >= 4 && line.compare(line.size() - 4, 4, "\"{}\"") == 0) continue;
        if (line.size() >= 2 && line.compare(line.size() - 2, 2, "{}") == 0) continue;
        out << line << '\n';
    }
    if (!out) throw spotvol::IoError("failed while writing " + path);
}

int run_simulate(const CLI::App& app, const SimulateArgs& args) {
    spotvol::SimConfig cfg;
    cfg.p = args.p;
    cfg.k = args.k;
    cfg.T = args.horizon;
    cfg.delta = args.delta;
    cfg.seed = args.seed;
    cfg.sampling.mode = spotvol::parse_sampling(args.sampling);
    cfg.sampling.sync_step = args.sync_step;
    cfg.sampling.lambda_low = args.lambda_low;
    cfg.sampling.lambda_high = args.lambda_high;
    cfg.noise.mode = spotvol::parse_noise_mode(args.noise);
    cfg.noise.sigma_eps = args.sigma_eps;
    cfg.noise.beta = args.beta;
    cfg.noise.chi = spotvol::parse_chi_profile(args.chi);
    cfg.noise.chi_a = args.chi_a;
    cfg.noise.chi_b = args.chi_b;
    cfg.loading_driver = spotvol::parse_loading_driver(args.loading_driver);
    cfg.corr_band = args.corr_band;
    cfg.freeze_coefficients = args.freeze_coefficients;
    cfg.zero_diffusion = args.zero_diffusion;
    cfg.validate();

    std::vector<double> taus =
        args.taus.empty() ? spotvol::default_tau_grid(cfg.T, args.tau_count) : args.taus;
    for (double tau : taus) {
        if (!(tau > 0.0) || !(tau >= cfg.delta) || !(tau <= cfg.T)) {
            throw std::invalid_argument("truth times must lie in [delta, horizon]");
        }
    }

    const spotvol::GroundTruth gt = spotvol::simulate_ground_truth(cfg);
    const std::vector<spotvol::TickSeries> ticks = spotvol::contaminate_and_sample(gt, cfg);
    spotvol::write_simulation_dir(args.out, gt, ticks, taus, args.binary);
    echo_config(app, args.out);

    std::size_t total_ticks = 0;
    for (const auto& series : ticks) total_ticks += series.size();
    std::cout << "simulated " << cfg.p << " assets over [0, " << cfg.T << "], " << total_ticks
              << " ticks, truth stored at " << taus.size() << " times in " << args.out << "\n";
    return 0;
}

int run_estimate(const CLI::App& app, const EstimateArgs& args) {
    spotvol::EstimateOptions opt;
    opt.horizon = args.horizon;
    opt.filter_kernel = spotvol::KernelSpec::parse(args.filter_kernel);
    opt.spot_kernel = spotvol::KernelSpec::parse(args.spot_kernel);
    opt.delta0 = args.delta0;
    opt.filter_bandwidths = args.filter_bandwidths;
    opt.filter_candidates = args.filter_candidates;
    opt.spot_bandwidth = args.spot_bandwidth;
    opt.spot_candidates = args.spot_candidates;
    opt.taus = args.taus.empty() ? spotvol::default_tau_grid(args.horizon, args.tau_count)
                                 : args.taus;
    opt.factors.fixed_k = args.fixed_k;
    opt.factors.k_max = args.k_max;
    opt.shrinkage.rule = spotvol::parse_rule(args.rule);
    opt.shrinkage.correlation_scaled = !args.flat_threshold;
    opt.shrinkage.scad_a = args.scad_a;
    opt.shrinkage.alasso_eta = args.alasso_eta;
    if (args.c_rho >= 0.0) {
        opt.minimal_constant = false;
        opt.shrinkage.c_rho = args.c_rho;
    }
    opt.cpd_grid = args.cpd_grid;
    opt.allow_boundary = args.allow_boundary;
    opt.compute_precision = args.precision;
    opt.threads = args.threads;

    const std::vector<spotvol::TickSeries> ticks = spotvol::read_ticks_dir(args.in);
    const spotvol::EstimateRun run = spotvol::estimate_ticks(ticks, opt);
    spotvol::write_estimate_dir(args.out, run, args.binary);
    echo_config(app, args.out);

    std::size_t failed = 0;
    for (const auto& est : run.taus) {
        if (!est.ok()) ++failed;
    }
    std::cout << "estimated " << run.taus.size() - failed << "/" << run.taus.size()
              << " evaluation times (spot bandwidth " << run.spot_bandwidth << ", grid step "
              << run.delta0 << ") into " << args.out << "\n";
    for (const auto& est : run.taus) {
        if (!est.ok()) {
            std::cerr << "  tau " << est.tau << " failed: " << est.error << "\n";
        }
    }
    if (failed == run.taus.size()) {
        throw spotvol::Error("estimation failed at every evaluation time");
    }
    return 0;
}

int run_evaluate(const CLI::App& app, const EvaluateArgs& args) {
    const spotvol::EvalReport report =
        spotvol::evaluate_directories(args.estimate_dir, args.truth_dir);
    spotvol::write_eval_report(report, args.out);
    echo_config(app, args.out);
    std::cout << "compared " << report.taus.size() << " evaluation times (p = " << report.p
              << "): msn_x " << report.msn_x << ", mrn_x " << report.mrn_x << ", msn_u "
              << report.msn_u << "\n";
    return 0;
}

int run_tables_cmd(const CLI::App& app, const TablesArgs& args) {
    spotvol::HarnessConfig cfg;
    cfg.panel_sizes = args.panel_sizes;
    cfg.noise_levels = args.noise_levels;
    cfg.sampling_modes.clear();
    for (const std::string& m : args.modes) {
        cfg.sampling_modes.push_back(spotvol::parse_sampling(m));
    }
    cfg.rules.clear();
    for (const std::string& r : args.rules) cfg.rules.push_back(spotvol::parse_rule(r));
    cfg.replications = args.replications;
    cfg.cv_replications = args.cv_replications;
    cfg.tau_count = args.tau_count;
    cfg.factors = args.factors;
    cfg.selection.fixed_k = args.fixed_k;
    cfg.selection.k_max = args.k_max;
    cfg.horizon = args.horizon;
    cfg.delta = args.delta;
    cfg.seed = args.seed;
    cfg.filter_kernel = spotvol::KernelSpec::parse(args.filter_kernel);
    cfg.spot_kernel = spotvol::KernelSpec::parse(args.spot_kernel);
    cfg.delta0 = args.delta0;
    cfg.filter_bandwidth = args.filter_bandwidth;
    cfg.spot_bandwidth = args.spot_bandwidth;
    cfg.scad_a = args.scad_a;
    cfg.alasso_eta = args.alasso_eta;
    cfg.threads = args.threads;
    cfg.validate();
    if (args.dry_run) {
        std::cout << "configuration valid: " << cfg.panel_sizes.size() * cfg.noise_levels.size() *
                                                    cfg.sampling_modes.size()
                  << " cells, " << cfg.replications << " replications each\n";
        return 0;
    }

    const spotvol::HarnessResult result = spotvol::run_tables(cfg);
    spotvol::write_tables(result, cfg, args.out);
    echo_config(app, args.out);

    int bad = 0;
    for (const auto& cell : result.cells) {
        if (!cell.ok) {
            ++bad;
            std::cerr << "cell p=" << cell.p << " sigma_eps=" << cell.sigma_eps << " "
                      << spotvol::sampling_name(cell.mode) << " failed: " << cell.error << "\n";
        }
    }
    std::cout << "wrote tables for " << result.cells.size() - bad << "/" << result.cells.size()
              << " cells to " << args.out << "\n";
    return result.all_ok() ? 0 : kExitIncomplete;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-varying covariance matrix estimation for noisy, asynchronously "
                 "observed high-frequency prices"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default(true);
    app.set_config("--config", "", "Read options from a key=value file with one section per subcommand");

    SimulateArgs sim;
    CLI::App* simulate = app.add_subcommand(
        "simulate", "Draw one synthetic day of prices and store ticks plus the true spot matrices");
    simulate->configurable();
    simulate->fallthrough();
    simulate->add_option("--out", sim.out, "Output directory")->required();
    simulate->add_option("--p", sim.p, "Number of assets");
    simulate->add_option("--k", sim.k, "Number of common factors (0 to 3)");
    simulate->add_option("--horizon", sim.horizon, "Day length T");
    simulate->add_option("--delta", sim.delta, "Fine simulation step");
    simulate->add_option("--seed", sim.seed, "Seed of the master random stream");
    simulate->add_option("--sampling", sim.sampling, "Observation times: sync or async");
    simulate->add_option("--sync-step", sim.sync_step, "Keep every n-th fine-grid point (sync)");
    simulate->add_option("--lambda-low", sim.lambda_low, "Poisson gap multiplier, lower edge");
    simulate->add_option("--lambda-high", sim.lambda_high, "Poisson gap multiplier, upper edge");
    simulate->add_option("--noise", sim.noise, "Noise scale: proportional or power-law");
    simulate->add_option("--sigma-eps", sim.sigma_eps, "Proportional noise level");
    simulate->add_option("--beta", sim.beta, "Power-law exponent in [0, 1/2)");
    simulate->add_option("--chi", sim.chi, "Power-law time profile: constant or ushape");
    simulate->add_option("--chi-a", sim.chi_a, "Profile level");
    simulate->add_option("--chi-b", sim.chi_b, "Profile curvature");
    simulate->add_option("--loading-driver", sim.loading_driver,
                         "Loading shocks: independent or shared per asset");
    simulate->add_option("--corr-band", sim.corr_band, "Bandwidth of the idiosyncratic correlation");
    simulate->add_option("--taus", sim.taus, "Times at which the truth is stored");
    simulate->add_option("--tau-count", sim.tau_count, "Equispaced truth times when --taus is absent");
    simulate->add_flag("--binary", sim.binary, "Store matrices as binary blobs instead of CSV");
    simulate->add_flag("--freeze-coefficients", sim.freeze_coefficients,
                       "Diagnostic: hold loadings and idiosyncratic volatility at their opening values");
    simulate->add_flag("--zero-diffusion", sim.zero_diffusion,
                       "Diagnostic: drop the diffusion terms of the variance processes");

    EstimateArgs est;
    CLI::App* estimate = app.add_subcommand(
        "estimate", "Estimate spot covariance matrices from a directory of tick files");
    estimate->configurable();
    estimate->fallthrough();
    estimate->add_option("--in", est.in, "Directory of ticks_*.csv files")->required();
    estimate->add_option("--out", est.out, "Output directory")->required();
    estimate->add_option("--horizon", est.horizon, "Day length T");
    estimate->add_option("--filter-kernel", est.filter_kernel,
                         "Filter weight: gaussian, gaussian-exact, epanechnikov, uniform");
    estimate->add_option("--spot-kernel", est.spot_kernel, "Smoothing weight for the spot matrix");
    estimate->add_option("--delta0", est.delta0, "Pseudo-grid step (0: automatic)");
    estimate->add_option("--filter-bandwidth", est.filter_bandwidths,
                         "Filter bandwidth, one value or one per asset (absent: cross-validated)");
    estimate->add_option("--filter-candidates", est.filter_candidates,
                         "Cross-validation grid for the filter bandwidth");
    estimate->add_option("--spot-bandwidth", est.spot_bandwidth,
                         "Smoothing bandwidth (0: cross-validated)");
    estimate->add_option("--spot-candidates", est.spot_candidates,
                         "Cross-validation grid for the smoothing bandwidth");
    estimate->add_option("--taus", est.taus, "Evaluation times");
    estimate->add_option("--tau-count", est.tau_count, "Equispaced evaluation times when --taus is absent");
    estimate->add_option("--k", est.fixed_k, "Pin the factor count (absent: eigenvalue-ratio rule)");
    estimate->add_option("--k-max", est.k_max, "Search depth of the ratio rule (0: automatic)");
    estimate->add_option("--rule", est.rule, "Shrinkage rule: naive, soft, hard, scad, alasso");
    estimate->add_option("--c-rho", est.c_rho,
                         "Fixed threshold constant (absent: smallest constant keeping the matrix PD)");
    estimate->add_flag("--flat-threshold", est.flat_threshold,
                       "Threshold absolute entries instead of correlations");
    estimate->add_option("--scad-a", est.scad_a, "SCAD knee parameter (> 2)");
    estimate->add_option("--alasso-eta", est.alasso_eta, "Adaptive-lasso exponent (>= 1)");
    estimate->add_option("--cpd-grid", est.cpd_grid, "Search grid for the threshold constant");
    estimate->add_flag("--allow-boundary", est.allow_boundary,
                       "Keep evaluation times closer than one bandwidth to the edges");
    estimate->add_flag("--precision", est.precision, "Also invert each estimate");
    estimate->add_option("--threads", est.threads, "Worker threads (0: all cores)");
    estimate->add_flag("--binary", est.binary, "Store matrices as binary blobs instead of CSV");

    EvaluateArgs ev;
    CLI::App* evaluate = app.add_subcommand(
        "evaluate", "Compare stored estimates against stored simulation truth");
    evaluate->configurable();
    evaluate->fallthrough();
    evaluate->add_option("--estimates", ev.estimate_dir, "Directory written by estimate")->required();
    evaluate->add_option("--truth", ev.truth_dir, "Directory written by simulate")->required();
    evaluate->add_option("--out", ev.out, "Output directory")->required();

    TablesArgs tab;
    CLI::App* tables = app.add_subcommand(
        "reproduce-tables", "Monte-Carlo error tables over panel size, noise level and sampling");
    tables->configurable();
    tables->fallthrough();
    tables->add_option("--out", tab.out, "Output directory");
    tables->add_option("--p", tab.panel_sizes, "Panel sizes");
    tables->add_option("--sigma-eps", tab.noise_levels, "Proportional noise levels");
    tables->add_option("--modes", tab.modes, "Sampling modes: sync, async");
    tables->add_option("--rules", tab.rules, "Shrinkage rules to compare");
    tables->add_option("--replications", tab.replications, "Evaluation replications per cell");
    tables->add_option("--cv-replications", tab.cv_replications,
                       "Pilot replications whose bandwidths are averaged");
    tables->add_option("--tau-count", tab.tau_count, "Evaluation times per replication");
    tables->add_option("--factors", tab.factors, "Simulated factor count (0 to 3)");
    tables->add_option("--k", tab.fixed_k, "Pin the estimated factor count");
    tables->add_option("--k-max", tab.k_max, "Search depth of the ratio rule (0: automatic)");
    tables->add_option("--horizon", tab.horizon, "Day length T");
    tables->add_option("--delta", tab.delta, "Fine simulation step");
    tables->add_option("--seed", tab.seed, "Seed of the master random stream");
    tables->add_option("--filter-kernel", tab.filter_kernel, "Filter weight");
    tables->add_option("--spot-kernel", tab.spot_kernel, "Smoothing weight");
    tables->add_option("--delta0", tab.delta0, "Pseudo-grid step (0: automatic)");
    tables->add_option("--filter-bandwidth", tab.filter_bandwidth,
                       "Fixed filter bandwidth (0: cross-validated)");
    tables->add_option("--spot-bandwidth", tab.spot_bandwidth,
                       "Fixed smoothing bandwidth (0: cross-validated)");
    tables->add_option("--scad-a", tab.scad_a, "SCAD knee parameter (> 2)");
    tables->add_option("--alasso-eta", tab.alasso_eta, "Adaptive-lasso exponent (>= 1)");
    tables->add_option("--threads", tab.threads, "Worker threads (0: all cores)");
    tables->add_flag("--dry-run", tab.dry_run, "Validate the configuration and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (simulate->parsed()) return run_simulate(app, sim);
        if (estimate->parsed()) return run_estimate(app, est);
        if (evaluate->parsed()) return run_evaluate(app, ev);
        if (tables->parsed()) {
            if (!tab.dry_run && tab.out.empty()) {
                throw std::invalid_argument("--out is required unless --dry-run is given");
            }
            return run_tables_cmd(app, tab);
        }
        std::cerr << "no subcommand given\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
