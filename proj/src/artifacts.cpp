#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "spotvol/harness.hpp"
#include "spotvol/io.hpp"
#include "spotvol/metrics.hpp"

namespace spotvol {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string indexed_name(const char* stem, int index, bool binary) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03d.%s", stem, index, binary ? "bin" : "csv");
    return buf;
}

void write_matrix_any(const fs::path& path, const Matrix& A, const std::string& what,
                      bool binary) {
    if (binary) {
        write_matrix_binary(path.string(), A, what);
    } else {
        write_matrix_csv(path.string(), A);
    }
}

Matrix read_matrix_any(const fs::path& path) {
    if (path.extension() == ".bin") return read_matrix_binary(path.string());
    return read_matrix_csv(path.string());
}

ordered_json load_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return ordered_json::parse(in);
    } catch (const std::exception& e) {
        throw IoError("cannot parse " + path.string() + ": " + e.what());
    }
}

void dump_json(const ordered_json& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed while writing " + path.string());
}

std::string fmt_report(double v) {
    if (!std::isfinite(v)) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

void write_simulation_dir(const std::string& dir, const GroundTruth& gt,
                          const std::vector<TickSeries>& ticks, const std::vector<double>& taus,
                          bool binary) {
    const fs::path base(dir);
    fs::create_directories(base);
    ordered_json manifest;
    manifest["p"] = gt.p;
    manifest["k"] = gt.k;
    manifest["horizon"] = gt.T;
    manifest["delta"] = gt.delta;
    manifest["rho"] = gt.rho;
    manifest["binary"] = binary;

    ordered_json tick_files = ordered_json::array();
    for (std::size_t i = 0; i < ticks.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "ticks_%04d.csv", static_cast<int>(i));
        write_ticks_csv((base / buf).string(), ticks[i]);
        tick_files.push_back(buf);
    }
    manifest["tick_files"] = std::move(tick_files);

    ordered_json truth = ordered_json::array();
    for (std::size_t ti = 0; ti < taus.size(); ++ti) {
        const double tau = taus[ti];
        const SpotTruth spot = true_spot_volatility(gt, tau);
        const int i = static_cast<int>(ti);
        ordered_json entry;
        entry["tau"] = tau;
        entry["sigma_x"] = indexed_name("truth_sigma_x", i, binary);
        entry["sigma_c"] = indexed_name("truth_sigma_c", i, binary);
        entry["sigma_u"] = indexed_name("truth_sigma_u", i, binary);
        write_matrix_any(base / entry["sigma_x"].get<std::string>(), spot.sigma_X, "truth_sigma_x",
                         binary);
        write_matrix_any(base / entry["sigma_c"].get<std::string>(), spot.sigma_C, "truth_sigma_c",
                         binary);
        write_matrix_any(base / entry["sigma_u"].get<std::string>(), spot.sigma_U, "truth_sigma_u",
                         binary);
        truth.push_back(std::move(entry));
    }
    manifest["taus"] = std::move(truth);
    dump_json(manifest, base / "manifest.json");
}

void write_estimate_dir(const std::string& dir, const EstimateRun& run, bool binary) {
    const fs::path base(dir);
    fs::create_directories(base);
    ordered_json summary;
    summary["horizon"] = run.horizon;
    summary["delta0"] = run.delta0;
    summary["spot_bandwidth"] = run.spot_bandwidth;
    summary["filter_bandwidths"] = run.filter_bandwidths;
    summary["degenerate_counts"] = run.degenerate_counts;
    summary["binary"] = binary;

    ordered_json taus = ordered_json::array();
    for (std::size_t ti = 0; ti < run.taus.size(); ++ti) {
        const TauEstimate& est = run.taus[ti];
        const int i = static_cast<int>(ti);
        ordered_json entry;
        entry["tau"] = est.tau;
        entry["error"] = est.error;
        if (est.ok()) {
            entry["k_hat"] = est.k_hat;
            entry["c_rho"] = est.c_rho;
            entry["lambda_min"] = est.lambda_min;
            entry["diagonal_fallback"] = est.diagonal_fallback;
            entry["kernel_mass"] = est.kernel_mass;
            entry["boundary"] = est.boundary;
            entry["sigma_x"] = indexed_name("sigma_x", i, binary);
            entry["sigma_c"] = indexed_name("sigma_c", i, binary);
            entry["sigma_u"] = indexed_name("sigma_u", i, binary);
            entry["loadings"] = indexed_name("loadings", i, binary);
            write_matrix_any(base / entry["sigma_x"].get<std::string>(), est.sigma_x, "sigma_x", binary);
            write_matrix_any(base / entry["sigma_c"].get<std::string>(), est.sigma_c, "sigma_c", binary);
            write_matrix_any(base / entry["sigma_u"].get<std::string>(), est.sigma_u, "sigma_u", binary);
            write_matrix_any(base / entry["loadings"].get<std::string>(), est.loadings, "loadings",
                             binary);
            if (est.precision.has_value()) {
                entry["precision"] = indexed_name("precision", i, binary);
                write_matrix_any(base / entry["precision"].get<std::string>(), *est.precision,
                                 "precision", binary);
            }
            entry["precision_error"] = est.precision_error;
        }
        taus.push_back(std::move(entry));
    }
    summary["taus"] = std::move(taus);
    dump_json(summary, base / "summary.json");
}

EvalReport evaluate_directories(const std::string& estimate_dir, const std::string& truth_dir) {
    const fs::path est_base(estimate_dir);
    const fs::path truth_base(truth_dir);
    const ordered_json summary = load_json(est_base / "summary.json");
    const ordered_json manifest = load_json(truth_base / "manifest.json");

    EvalReport report;
    std::vector<double> vx;
    std::vector<double> vr;
    std::vector<double> vu;
    for (const auto& entry : summary.at("taus")) {
        TauComparison tc;
        tc.tau = entry.at("tau").get<double>();
        const std::string err = entry.at("error").get<std::string>();
        if (!err.empty()) {
            tc.error = err;
            report.taus.push_back(std::move(tc));
            continue;
        }
        tc.k_hat = entry.at("k_hat").get<int>();
        const ordered_json* match = nullptr;
        for (const auto& truth_entry : manifest.at("taus")) {
            if (std::abs(truth_entry.at("tau").get<double>() - tc.tau) <= 1e-9) {
                match = &truth_entry;
                break;
            }
        }
        if (match == nullptr) {
            tc.error = "no stored truth at this evaluation time";
            report.taus.push_back(std::move(tc));
            continue;
        }
        const Matrix est_x = read_matrix_any(est_base / entry.at("sigma_x").get<std::string>());
        const Matrix est_u = read_matrix_any(est_base / entry.at("sigma_u").get<std::string>());
        const Matrix truth_x =
            read_matrix_any(truth_base / match->at("sigma_x").get<std::string>());
        const Matrix truth_u =
            read_matrix_any(truth_base / match->at("sigma_u").get<std::string>());
        if (est_x.rows() != truth_x.rows() || est_x.cols() != truth_x.cols()) {
            throw ShapeMismatch("estimate and truth matrices disagree in shape");
        }
        report.p = static_cast<int>(est_x.rows());
        tc.msn_x = spectral_norm(est_x - truth_x);
        tc.mrn_x = relative_error_norm(est_x, truth_x);
        tc.msn_u = spectral_norm(est_u - truth_u);
        tc.ok = true;
        vx.push_back(tc.msn_x);
        vr.push_back(tc.mrn_x);
        vu.push_back(tc.msn_u);
        report.taus.push_back(std::move(tc));
    }
    auto mean_or_nan = [](const std::vector<double>& v) {
        if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    report.msn_x = mean_or_nan(vx);
    report.mrn_x = mean_or_nan(vr);
    report.msn_u = mean_or_nan(vu);
    return report;
}

void write_eval_report(const EvalReport& report, const std::string& dir) {
    const fs::path base(dir);
    fs::create_directories(base);
    ordered_json root;
    root["p"] = report.p;
    root["msn_x"] = report.msn_x;
    root["mrn_x"] = report.mrn_x;
    root["msn_u"] = report.msn_u;
    ordered_json taus = ordered_json::array();
    for (const TauComparison& tc : report.taus) {
        ordered_json entry;
        entry["tau"] = tc.tau;
        entry["ok"] = tc.ok;
        entry["error"] = tc.error;
        entry["k_hat"] = tc.k_hat;
        entry["msn_x"] = tc.msn_x;
        entry["mrn_x"] = tc.mrn_x;
        entry["msn_u"] = tc.msn_u;
        taus.push_back(std::move(entry));
    }
    root["taus"] = std::move(taus);
    dump_json(root, base / "report.json");

    const fs::path cpath = base / "report.csv";
    std::ofstream out(cpath);
    if (!out) throw IoError("cannot open " + cpath.string() + " for writing");
    out << "tau,ok,k_hat,msn_x,mrn_x,msn_u,error\n";
    for (const TauComparison& tc : report.taus) {
        out << format_double(tc.tau) << ',' << (tc.ok ? 1 : 0) << ',' << tc.k_hat << ','
            << fmt_report(tc.msn_x) << ',' << fmt_report(tc.mrn_x) << ',' << fmt_report(tc.msn_u)
            << ',' << tc.error << '\n';
    }
    if (!out) throw IoError("failed while writing " + cpath.string());
}

}  // namespace spotvol
