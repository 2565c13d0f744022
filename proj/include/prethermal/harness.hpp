#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "prethermal/analysis.hpp"
#include "prethermal/drive.hpp"
#include "prethermal/ensemble.hpp"
#include "prethermal/propagator.hpp"

namespace prethermal::harness {

inline constexpr const char* kSoftwareVersion = "prethermal 1.0.0";

/// Salt mixed into a realization seed to draw its on-site fields.
inline constexpr std::uint64_t kFieldSalt = 0x6F6E736974656669ULL;

// All frequencies in the configuration are ordinary frequencies in MHz;
// they are converted to angular frequency (rad/us) with a factor 2 pi on use.

struct EnsembleConfig {
    std::size_t n_spins = 9;
    double density_ppm = 0.7;
    ensemble::Geometry geometry = ensemble::Geometry::central_spin_sphere;
    double carbon_number_density = ensemble::kCarbonNumberDensity;  ///< nm^-3
};

struct HamiltonianConfig {
    double omega_rabi_mhz = 0.0;      ///< constant Rabi term and drive amplitude
    double onsite_width_mhz = 0.0;    ///< Gaussian sigma of h_i / 2 pi
};

struct DriveConfig {
    drive::DriveKind kind = drive::DriveKind::constant_zero;
    std::vector<double> omega_list_mhz;  ///< base drive frequencies
    double phi = drive::kGoldenRatio;
    double phase_offset_us = 0.0;        ///< the drive sees f(t + offset)
};

struct SamplingConfig {
    propagator::SamplingKind kind = propagator::SamplingKind::uniform;
    double interval_us = 1.0;  ///< uniform
    int center_stride = 1;     ///< rolling
};

struct PlanConfig {
    double total_time_us = 20.0;
    std::optional<double> dt_us;  ///< default_dt when absent
    double dd_tau_us = 0.0;
    SamplingConfig sampling;
};

struct CampaignConfig {
    std::size_t n_realizations = 1;
    std::uint64_t base_seed = 0;
    std::size_t workers = 1;
};

struct AnalysisConfig {
    double T0_us = 1e9;                          ///< fixed spin-lattice channel
    std::optional<double> window_start_us;       ///< default_window_start(density) when absent
    std::vector<analysis::DecayModel> models = {analysis::DecayModel::single_exp_T0};
};

struct ExperimentConfig {
    EnsembleConfig ensemble;
    HamiltonianConfig hamiltonian;
    DriveConfig drive;
    PlanConfig plan;
    CampaignConfig campaign;
    AnalysisConfig analysis;

    /// Strict parse: unknown keys and out-of-range values throw ErrorKind::config.
    static ExperimentConfig from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;
    void validate() const;

    double density() const;        ///< nm^-3
    double window_start() const;   ///< us
};

ExperimentConfig load_config(const std::filesystem::path& path);

/// Workers actually used: PRETHERMAL_WORKERS when set, config otherwise.
std::size_t effective_workers(const CampaignConfig& campaign);

// ---------------------------------------------------------------------------

struct RealizationRecord {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double norm_drift = 0.0;
};

struct CampaignResult {
    double omega = 0.0;  ///< rad/us, 0 when undriven
    propagator::TimeTrace trace;  ///< realization mean, stderr of the mean when n > 1
    std::vector<RealizationRecord> realizations;
    std::size_t n_failed = 0;
    double wall_seconds = 0.0;

    nlohmann::json manifest() const;
};

/// Waveform, plan and Hamiltonian inputs resolved for one base frequency.
drive::DriveWaveform resolve_waveform(const ExperimentConfig& config, double omega);
propagator::EvolutionPlan resolve_plan(const ExperimentConfig& config, double omega);

/// One disorder realization: ensemble and fields from stable_hash(base_seed, index).
propagator::DrivenResult run_realization(const ExperimentConfig& config, double omega, std::size_t index);

/// Disorder-averaged trace at base frequency omega (rad/us).
CampaignResult run_campaign(const ExperimentConfig& config, double omega = 0.0);

// ---------------------------------------------------------------------------

struct DdT2Result {
    CampaignResult campaign;
    analysis::FitResult fit;  ///< plain_exp from t = 0
};

/// Undriven, Omega = 0 coherence decay under the configured DD spacing.
DdT2Result run_dd_t2(const ExperimentConfig& config);

struct CalibrationPoint {
    double density_ppm = 0.0;
    double t2_us = 0.0;
    double t2_stderr_us = 0.0;
};

struct CalibrationResult {
    double density_ppm = 0.0;
    double density_stderr_ppm = 0.0;
    std::vector<CalibrationPoint> grid;
    nlohmann::json to_json() const;
};

/// Inverts a T2(density) table by log-log interpolation.
CalibrationResult invert_t2_table(double target_t2, double target_stderr, std::vector<CalibrationPoint> grid);
CalibrationResult calibrate_density(double target_t2, double target_stderr, const std::vector<double>& density_grid_ppm,
                                    const ExperimentConfig& config_template);

struct SweepPoint {
    CampaignResult campaign;
    propagator::TimeTrace analyzed;  ///< rolling-averaged when the drive is quasi-periodic
    std::vector<analysis::FitResult> fits;   ///< one per configured model
    std::vector<std::string> fit_errors;     ///< one per configured model, empty on success
};

struct HeatingSweepResult {
    std::vector<SweepPoint> points;  ///< ascending omega
    analysis::HeatingCurve curve;    ///< first configured model
    std::optional<analysis::ScalingResult> scaling;
    std::string scaling_error;
    std::optional<analysis::PlateauFit> plateau;
};

HeatingSweepResult heating_sweep(const ExperimentConfig& config);

// ---------------------------------------------------------------------------

/// Collects text outputs and writes them with a digest manifest.
class OutputSet {
  public:
    void add(std::string relative_path, std::string contents);
    void set_manifest_field(const std::string& key, nlohmann::json value);
    std::size_t size() const { return files_.size(); }

    /// Writes every file and manifest.json; returns the manifest.
    nlohmann::json write(const std::filesystem::path& out_dir) const;

  private:
    std::vector<std::pair<std::string, std::string>> files_;
    nlohmann::json extra_ = nlohmann::json::object();
};

void add_campaign_outputs(OutputSet& out, const CampaignResult& campaign, const std::string& stem);
void add_sweep_outputs(OutputSet& out, const HeatingSweepResult& sweep);
/// CSV of tau_star against omega with log10 columns and per-model predictions.
std::string scaling_table_csv(const HeatingSweepResult& sweep);

}  // namespace prethermal::harness
