#pragma once

#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "prethermal/propagator.hpp"

/// Post-processing of polarization traces: decay fits, heating curves,
/// scaling-model comparison, rolling averages, micromotion and shot noise.
namespace prethermal::analysis {

using propagator::TimeTrace;

// ---------------------------------------------------------------------------
// Decay fits

enum class DecayModel {
    single_exp_T0,     ///< A exp(-(t / tau + t / T0))
    stretched_exp_T0,  ///< A exp(-(t / tau)^{1/2}) exp(-t / T0)
    plain_exp,         ///< A exp(-t / tau), T0 ignored
};

std::string_view to_string(DecayModel model);
DecayModel decay_model_from_string(std::string_view name);

/// Parameter keys: "A", "tau_star_us" and, for the T0 models, "T0_us" (held fixed, stderr 0).
struct FitResult {
    DecayModel model = DecayModel::single_exp_T0;
    std::map<std::string, double> params;
    std::map<std::string, double> param_stderr;
    double chi2 = 0.0;
    double window_start = 0.0;  ///< us
    std::size_t n_points = 0;
    bool tau_unbounded = false;  ///< tau_star ran off to the no-heating limit
    int iterations = 0;

    double amplitude() const { return params.at("A"); }
    double tau() const { return params.at("tau_star_us"); }
    double tau_stderr() const { return param_stderr.at("tau_star_us"); }
    nlohmann::json to_json() const;
};

struct FitOptions {
    double log_tau_min = 0.0;         ///< ln(1 us)
    double log_tau_max = 11.512925465;  ///< ln(1e5 us)
    int grid_points = 31;
    int max_iterations = 300;
    double relative_tolerance = 1e-8;
};

/**
 * Weighted least squares on t >= window_start. Uses 1/stderr^2 weights when
 * the trace carries stderr, uniform weights otherwise. The optimizer starts
 * Gauss-Newton (with Levenberg damping) from every point of a log-tau grid and
 * keeps the lowest chi2, so it is deterministic.
 */
FitResult fit_decay(const TimeTrace& trace, DecayModel model, double T0, double window_start,
                    const FitOptions& options = {});

/// Evaluates the decay model at time t.
double decay_model_value(DecayModel model, double amplitude, double tau, double T0, double t);

/// 100 us scaled by the ratio of the experimental local energy scale to the simulated one.
double default_window_start(double density);
inline constexpr double kReferenceLocalScale = 2.0 * std::numbers::pi * 0.02;  ///< rad/us

// ---------------------------------------------------------------------------
// Heating curves and scaling

struct HeatingPoint {
    double omega = 0.0;  ///< rad/us
    FitResult fit;
};

struct HeatingCurve {
    std::vector<HeatingPoint> points;                     ///< ascending omega
    std::vector<std::pair<double, std::string>> failures;  ///< omega, reason
    nlohmann::json to_json() const;
};

HeatingCurve extract_heating_curve(const std::map<double, TimeTrace>& traces, double T0, double window_start,
                                   DecayModel model = DecayModel::single_exp_T0);

enum class ScalingModel {
    exponential,  ///< tau = c exp(omega / J_exp)
    power2,       ///< tau = a omega^2
    power4,       ///< tau = a omega^4
    stretched,    ///< tau = c exp((omega / omega0)^{1/2})
    power_half,   ///< tau = a omega^{1/2}
};

inline constexpr ScalingModel kScalingModels[] = {ScalingModel::exponential, ScalingModel::power2,
                                                  ScalingModel::power4, ScalingModel::stretched,
                                                  ScalingModel::power_half};

std::string_view to_string(ScalingModel model);
ScalingModel scaling_model_from_string(std::string_view name);

struct ScalingFit {
    ScalingModel model = ScalingModel::exponential;
    std::map<std::string, double> params;
    std::map<std::string, double> param_stderr;
    double chi2 = 0.0;                        ///< on ln tau
    std::vector<double> relative_residuals;   ///< (tau - model) / model
    double predict(double omega) const;
};

/// A model is reported as comparable when its chi2 is within this factor of the best.
inline constexpr double kComparableChi2Factor = 10.0;

struct ScalingResult {
    std::vector<double> omega;
    std::vector<double> tau;
    std::vector<ScalingFit> fits;  ///< one per model, in kScalingModels order
    ScalingModel best = ScalingModel::exponential;
    std::vector<ScalingModel> comparable;  ///< excluding best

    const ScalingFit& fit(ScalingModel model) const;
    nlohmann::json to_json() const;
};

/// Least squares on ln tau; every model is linear there. tau_stderr (optional)
/// sets weights (tau / stderr)^2.
ScalingResult fit_scaling(const std::vector<double>& omega, const std::vector<double>& tau,
                          const std::vector<double>& tau_stderr = {});
ScalingResult fit_scaling(const std::map<double, double>& curve);
ScalingResult fit_scaling(const HeatingCurve& curve);

// ---------------------------------------------------------------------------
// Trace utilities

/// One point per rolling center: the mean of its four tagged samples.
TimeTrace rolling_average(const TimeTrace& raw);

/// stddev / mean of the linearly detrended trace on [t_a, t_b].
double micromotion_amplitude(const TimeTrace& trace, double t_a, double t_b);

struct PlateauFit {
    double slope = 0.0;      ///< per (1 / omega)
    double intercept = 0.0;  ///< A(omega -> infinity)
    double slope_stderr = 0.0;
    double intercept_stderr = 0.0;
    double chi2 = 0.0;
    nlohmann::json to_json() const;
};

/// Weighted regression of A against 1/omega; `stderr` may be empty.
PlateauFit fit_plateau_extrapolation(const std::map<double, double>& amplitudes,
                                     const std::map<double, double>& stderr = {});

/**
 * Synthetic photon statistics. Each point becomes two readouts with mean counts
 * N_ph (1 +- P) / 2, perturbed by Gaussian noise of width sqrt(count), and P is
 * re-estimated as their normalized difference with propagated stderr.
 */
TimeTrace add_shot_noise(const TimeTrace& trace, std::int64_t photons_per_point, std::uint64_t seed);

}  // namespace prethermal::analysis
