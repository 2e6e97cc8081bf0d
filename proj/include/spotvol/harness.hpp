#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "spotvol/pipeline.hpp"

namespace spotvol {

SamplingMode parse_sampling(const std::string& name);
std::string sampling_name(SamplingMode mode);
NoiseMode parse_noise_mode(const std::string& name);
std::string noise_mode_name(NoiseMode mode);
ChiProfile parse_chi_profile(const std::string& name);
std::string chi_profile_name(ChiProfile profile);
LoadingDriver parse_loading_driver(const std::string& name);
std::string loading_driver_name(LoadingDriver driver);

// One Monte-Carlo study: the cross product of panel sizes, noise levels and
// sampling modes, each cell estimated under every listed shrinkage rule.
struct HarnessConfig {
    std::vector<int> panel_sizes{100};
    std::vector<double> noise_levels{0.05, 0.1, 0.2};
    std::vector<SamplingMode> sampling_modes{SamplingMode::Synchronous,
                                             SamplingMode::PoissonClock};
    std::vector<ShrinkageRule> rules{ShrinkageRule::None, ShrinkageRule::Scad,
                                     ShrinkageRule::AdaptiveLasso, ShrinkageRule::Soft,
                                     ShrinkageRule::Hard};
    int replications = 20;
    int cv_replications = 5;  ///< pilot draws whose bandwidths are averaged
    int tau_count = 10;
    int factors = 3;            ///< factor count of the simulated prices
    FactorSelection selection;  ///< factor choice on the estimation side
    double horizon = 1.0;
    double delta = 1.0 / 2340.0;
    std::uint64_t seed = 1;
    KernelSpec filter_kernel{KernelName::Gaussian, false};
    KernelSpec spot_kernel{KernelName::Epanechnikov, false};
    double delta0 = 0.0;            ///< 0: per-replication automatic rule
    double filter_bandwidth = 0.0;  ///< 0: cross-validated in the pilot phase
    double spot_bandwidth = 0.0;    ///< 0: cross-validated in the pilot phase
    double scad_a = 3.7;
    double alasso_eta = 3.0;
    unsigned threads = 0;

    void validate() const;
};

// Per-rule error summary of one cell. Vectors hold one entry per replication
// (the mean over evaluation times); scalars are their means and standard
// errors across replications.
struct RuleSummary {
    std::vector<double> rep_msn_u;
    std::vector<double> rep_msn_x;
    std::vector<double> rep_mrn_x;
    double msn_u = std::numeric_limits<double>::quiet_NaN();
    double msn_x = std::numeric_limits<double>::quiet_NaN();
    double mrn_x = std::numeric_limits<double>::quiet_NaN();
    double se_msn_u = std::numeric_limits<double>::quiet_NaN();
    double se_msn_x = std::numeric_limits<double>::quiet_NaN();
    double se_mrn_x = std::numeric_limits<double>::quiet_NaN();
    double mean_c_rho = std::numeric_limits<double>::quiet_NaN();
};

struct CellResult {
    int p = 0;
    double sigma_eps = 0.0;
    SamplingMode mode = SamplingMode::Synchronous;
    std::vector<double> taus;
    double spot_bandwidth = std::numeric_limits<double>::quiet_NaN();
    double mean_filter_bandwidth = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> rule_names;     ///< order matches `rules`
    std::vector<RuleSummary> rules;
    bool ok = false;
    std::string error;  ///< why the cell is reported as NA
};

struct HarnessResult {
    std::vector<CellResult> cells;
    bool all_ok() const;
};

HarnessResult run_tables(const HarnessConfig& cfg);

// One CSV per metric and sampling mode (rows: panel size x noise level,
// columns: value and standard error per rule) plus tables.json with the
// replication-level numbers.
void write_tables(const HarnessResult& result, const HarnessConfig& cfg, const std::string& dir);

// Simulation artifacts: per-asset tick files, true spot matrices at the given
// evaluation times, and manifest.json tying them together.
void write_simulation_dir(const std::string& dir, const GroundTruth& gt,
                          const std::vector<TickSeries>& ticks, const std::vector<double>& taus,
                          bool binary);

// Estimation artifacts: per-tau matrices and summary.json.
void write_estimate_dir(const std::string& dir, const EstimateRun& run, bool binary);

struct TauComparison {
    double tau = 0.0;
    bool ok = false;
    std::string error;
    int k_hat = -1;
    double msn_x = std::numeric_limits<double>::quiet_NaN();
    double mrn_x = std::numeric_limits<double>::quiet_NaN();
    double msn_u = std::numeric_limits<double>::quiet_NaN();
};

// Estimates compared against stored truth at the evaluation times the two
// directories share.
struct EvalReport {
    int p = 0;
    std::vector<TauComparison> taus;
    double msn_x = std::numeric_limits<double>::quiet_NaN();
    double mrn_x = std::numeric_limits<double>::quiet_NaN();
    double msn_u = std::numeric_limits<double>::quiet_NaN();
};

EvalReport evaluate_directories(const std::string& estimate_dir, const std::string& truth_dir);
void write_eval_report(const EvalReport& report, const std::string& dir);

}  // namespace spotvol
