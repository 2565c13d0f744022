// Command-line front end: one subcommand per protocol, one config file each.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>

#include "prethermal/analysis.hpp"
#include "prethermal/drive.hpp"
#include "prethermal/error.hpp"
#include "prethermal/harness.hpp"
#include "prethermal/io.hpp"

namespace {

using namespace prethermal;
using nlohmann::json;

struct Common {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c, bool config_required = true) {
    cmd->add_option("-c,--config", c.config_path, "experiment config (JSON)")->check(CLI::ExistingFile)->required(config_required);
    cmd->add_option("-o,--out", c.out_dir, "output directory")->required();
    cmd->add_option("--seed", c.seed, "override campaign.base_seed");
}

harness::ExperimentConfig load(const Common& c) {
    harness::ExperimentConfig cfg = c.config_path.empty() ? harness::ExperimentConfig{} : harness::load_config(c.config_path);
    if (c.seed) cfg.campaign.base_seed = *c.seed;
    return cfg;
}

harness::OutputSet start_outputs(const std::string& command, const harness::ExperimentConfig& cfg) {
    harness::OutputSet out;
    out.set_manifest_field("command", command);
    out.set_manifest_field("config", cfg.to_json());
    out.set_manifest_field("workers", harness::effective_workers(cfg.campaign));
    out.set_manifest_field("seed_rule", "realization r uses stable_hash(base_seed, r); on-site fields use splitmix64(seed ^ field_salt)");
    return out;
}

void report(const json& manifest, const std::string& out_dir) {
    std::cout << "wrote " << manifest["outputs"].size() << " files and manifest.json to " << out_dir << "\n";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Disorder-averaged dipolar spin dynamics under (quasi-)periodic drives"};
    app.require_subcommand(1);
    app.set_version_flag("--version", harness::kSoftwareVersion);

    Common simulate_opts, t2_opts, sweep_opts, spectrum_opts, calibrate_opts, fit_opts;

    auto* simulate = app.add_subcommand("simulate", "run one campaign per configured drive frequency");
    add_common(simulate, simulate_opts);

    auto* dd_t2 = app.add_subcommand("dd-t2", "undriven decoupled coherence decay and its T2 fit");
    add_common(dd_t2, t2_opts);

    auto* sweep = app.add_subcommand("heating-sweep", "tau_star(omega) with scaling-model comparison");
    add_common(sweep, sweep_opts);

    auto* spectrum = app.add_subcommand("spectrum", "2D Fourier spectrum of the configured drive");
    add_common(spectrum, spectrum_opts);
    int n_max = drive::kDefaultNMax;
    int grid = drive::kDefaultGridSize;
    spectrum->add_option("--n-max", n_max, "largest |n1|, |n2|");
    spectrum->add_option("--grid", grid, "torus grid points per axis");

    auto* calibrate = app.add_subcommand("calibrate", "density whose simulated T2 matches a target");
    add_common(calibrate, calibrate_opts);
    double target_t2 = 6.8;
    double target_stderr = 0.8;
    std::vector<double> density_grid = {0.35, 0.5, 0.7, 1.0, 1.4};
    calibrate->add_option("--target-t2", target_t2, "target T2 in us");
    calibrate->add_option("--target-stderr", target_stderr, "target T2 standard error in us");
    calibrate->add_option("--grid", density_grid, "densities in ppm")->delimiter(',');

    auto* fit = app.add_subcommand("fit", "fit a trace CSV with the configured decay models");
    add_common(fit, fit_opts, false);
    std::string trace_path;
    fit->add_option("--trace", trace_path, "trace CSV (time_us,polarization,stderr)")->check(CLI::ExistingFile)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        const auto t0 = std::chrono::steady_clock::now();
        if (*simulate) {
            const harness::ExperimentConfig cfg = load(simulate_opts);
            harness::OutputSet out = start_outputs("simulate", cfg);
            std::vector<double> omegas;
            for (double nu : cfg.drive.omega_list_mhz) omegas.push_back(2.0 * std::numbers::pi * nu);
            if (cfg.drive.kind == drive::DriveKind::constant_zero || omegas.empty()) omegas = {0.0};
            json campaigns = json::array();
            for (std::size_t k = 0; k < omegas.size(); ++k) {
                const harness::CampaignResult r = harness::run_campaign(cfg, omegas[k]);
                harness::add_campaign_outputs(out, r, omegas.size() == 1 ? "trace" : "trace_omega_" + std::to_string(k));
                campaigns.push_back(r.manifest());
            }
            out.set_manifest_field("campaigns", campaigns);
            out.set_manifest_field("wall_seconds", seconds_since(t0));
            report(out.write(simulate_opts.out_dir), simulate_opts.out_dir);
        } else if (*dd_t2) {
            const harness::ExperimentConfig cfg = load(t2_opts);
            harness::OutputSet out = start_outputs("dd-t2", cfg);
            const harness::DdT2Result r = harness::run_dd_t2(cfg);
            harness::add_campaign_outputs(out, r.campaign, "trace");
            json fit_json = r.fit.to_json();
            fit_json["t2_us"] = r.fit.tau();
            fit_json["t2_stderr_us"] = r.fit.tau_stderr();
            out.add("t2_fit.json", fit_json.dump(2) + "\n");
            out.set_manifest_field("campaigns", json::array({r.campaign.manifest()}));
            out.set_manifest_field("wall_seconds", seconds_since(t0));
            report(out.write(t2_opts.out_dir), t2_opts.out_dir);
            std::cout << "T2 = " << r.fit.tau() << " +- " << r.fit.tau_stderr() << " us\n";
        } else if (*sweep) {
            const harness::ExperimentConfig cfg = load(sweep_opts);
            harness::OutputSet out = start_outputs("heating-sweep", cfg);
            const harness::HeatingSweepResult r = harness::heating_sweep(cfg);
            harness::add_sweep_outputs(out, r);
            json timings = json::array();
            for (const auto& p : r.points) timings.push_back({{"omega_rad_per_us", p.campaign.omega}, {"wall_seconds", p.campaign.wall_seconds}});
            out.set_manifest_field("timings", timings);
            out.set_manifest_field("wall_seconds", seconds_since(t0));
            report(out.write(sweep_opts.out_dir), sweep_opts.out_dir);
            if (r.scaling) std::cout << "best scaling model: " << analysis::to_string(r.scaling->best) << "\n";
            else std::cout << "scaling fit unavailable: " << r.scaling_error << "\n";
        } else if (*spectrum) {
            const harness::ExperimentConfig cfg = load(spectrum_opts);
            harness::OutputSet out = start_outputs("spectrum", cfg);
            if (cfg.drive.kind == drive::DriveKind::constant_zero) fail(ErrorKind::config, "spectrum needs a driven waveform");
            const double local = ensemble::local_energy_scale(cfg.density());
            json summary = json::array();
            for (std::size_t k = 0; k < cfg.drive.omega_list_mhz.size(); ++k) {
                const drive::DriveWaveform w = harness::resolve_waveform(cfg, 2.0 * std::numbers::pi * cfg.drive.omega_list_mhz[k]);
                const drive::FourierSpectrum2D f = drive::fourier2d(w, n_max, grid);
                const drive::ProjectedSpectrum p = drive::project_spectrum(f, w.omega, w.ratio);
                out.add("spectrum_omega_" + std::to_string(k) + ".csv", drive::spectrum_csv(p));
                summary.push_back({{"omega_rad_per_us", w.omega},
                                   {"power", f.power()},
                                   {"torus_mean_square", drive::torus_mean_square(w, grid)},
                                   {"local_energy_scale_rad_per_us", local},
                                   {"low_frequency_weight", drive::low_frequency_weight(p, local)},
                                   {"shell_maxima", f.shell_maxima()}});
            }
            out.add("spectrum_summary.json", summary.dump(2) + "\n");
            report(out.write(spectrum_opts.out_dir), spectrum_opts.out_dir);
        } else if (*calibrate) {
            const harness::ExperimentConfig cfg = load(calibrate_opts);
            harness::OutputSet out = start_outputs("calibrate", cfg);
            const harness::CalibrationResult r = harness::calibrate_density(target_t2, target_stderr, density_grid, cfg);
            json doc = r.to_json();
            doc["target_t2_us"] = target_t2;
            doc["target_t2_stderr_us"] = target_stderr;
            out.add("calibration.json", doc.dump(2) + "\n");
            std::string table = "density_ppm,t2_us,t2_stderr_us\n";
            for (const auto& p : r.grid) {
                table += io::format_double(p.density_ppm) + "," + io::format_double(p.t2_us) + "," + io::format_double(p.t2_stderr_us) + "\n";
            }
            out.add("calibration_table.csv", table);
            out.set_manifest_field("wall_seconds", seconds_since(t0));
            report(out.write(calibrate_opts.out_dir), calibrate_opts.out_dir);
            std::cout << "density = " << r.density_ppm << " +- " << r.density_stderr_ppm << " ppm\n";
        } else if (*fit) {
            const harness::ExperimentConfig cfg = load(fit_opts);
            harness::OutputSet out = start_outputs("fit", cfg);
            const propagator::TimeTrace trace = propagator::trace_from_csv(io::read_text(trace_path));
            json fits = json::array();
            for (analysis::DecayModel m : cfg.analysis.models) {
                fits.push_back(analysis::fit_decay(trace, m, cfg.analysis.T0_us, cfg.window_start()).to_json());
            }
            out.add("fit.json", fits.dump(2) + "\n");
            out.set_manifest_field("input_trace", {{"path", trace_path}, {"sha256", io::sha256_hex(io::read_text(trace_path))}});
            report(out.write(fit_opts.out_dir), fit_opts.out_dir);
        }
    } catch (const Error& e) {
        std::cerr << json{{"error", to_string(e.kind())}, {"message", e.what()}}.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
        return 3;
    }
    return 0;
}
