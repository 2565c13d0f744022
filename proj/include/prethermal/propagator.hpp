#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "prethermal/drive.hpp"
#include "prethermal/hamiltonian.hpp"

/// Unitary time evolution: static and piecewise-constant driven propagation,
/// ideal global pulses, dynamical decoupling, and sampling schedules.
namespace prethermal::propagator {

using hamiltonian::ManyBodyOperator;
using hamiltonian::QuantumState;
using hamiltonian::StateVector;

struct KrylovOptions {
    double tolerance = 1e-12;    ///< local error bound per step
    int max_dimension = 64;
    int max_halvings = 30;
};

/// Dense eigendecomposition up to this many spins, Krylov above.
inline constexpr std::size_t kDenseMaxSpins = 11;

/**
 * Lanczos approximation of exp(-i H t) v, where H is applied by `apply`.
 * The step is split adaptively; a step that does not converge within
 * max_dimension iterations is halved, up to max_halvings times, before
 * krylov_failure is thrown.
 */
template <class Apply>
StateVector krylov_expm(const Apply& apply, const StateVector& v, double t, const KrylovOptions& options = {});

/// exp(-i H t) psi. Dense route at n_spins <= kDenseMaxSpins, Krylov otherwise.
QuantumState evolve_static(const QuantumState& psi, const ManyBodyOperator& h, double t,
                           const KrylovOptions& options = {});

enum class PulseAxis { plus_x, minus_x, plus_y, minus_y };

/// exp(-i angle sum_i S^axis_i) psi as an instantaneous global rotation.
QuantumState apply_global_pulse(const QuantumState& psi, PulseAxis axis, double angle);
void apply_global_pulse_inplace(StateVector& psi, PulseAxis axis, double angle);

enum class SamplingKind { stroboscopic, uniform, rolling };

struct SamplingSpec {
    SamplingKind kind = SamplingKind::uniform;
    double omega = 0.0;      ///< stroboscopic / rolling: base frequency, rad/us
    double ratio = drive::kGoldenRatio;  ///< rolling: second tone ratio
    double interval = 1.0;   ///< uniform: spacing, us
    int center_stride = 1;   ///< rolling: drive periods between consecutive centers

    static SamplingSpec stroboscopic(double omega);
    static SamplingSpec uniform(double interval);
    static SamplingSpec rolling(double omega, double ratio, int center_stride = 1);
};

struct EvolutionPlan {
    double total_time = 0.0;   ///< us
    double dt = 0.01;          ///< substep bound, us
    double dd_tau = 0.0;       ///< inter-pulse spacing, us; 0 disables decoupling
    SamplingSpec sampling;
    double drive_time_offset = 0.0;          ///< the drive sees f(t + offset)
    std::optional<std::size_t> observed_site;  ///< record 2<Sx_site> instead of (2/N)<Sx_tot>

    /// Throws invalid_plan when dt or the schedule violates the plan invariants.
    void validate(const drive::DriveWaveform& w) const;
    nlohmann::json to_json() const;
};

/// min(2 pi / (64 max tone), tau / 4, 0.01 us) with inactive constraints skipped.
double default_dt(const drive::DriveWaveform& w, double dd_tau);

struct SampleTimes {
    std::vector<double> times;      ///< ascending
    std::vector<int> center_index;  ///< rolling only: the center each time belongs to
    std::vector<double> centers;    ///< rolling only: t_c per center index
};

SampleTimes sampling_times(const EvolutionPlan& plan);

struct TimeTrace {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> stderr_values;  ///< empty when absent
    std::vector<int> center_index;      ///< rolling tags, empty otherwise
    std::vector<double> centers;
    nlohmann::json metadata = nlohmann::json::object();

    std::size_t size() const { return times.size(); }
    bool has_stderr() const { return !stderr_values.empty(); }
    /// Checks ascending times, |P| bound and per-column lengths; throws invalid_input.
    void validate() const;
};

/// CSV with header time_us,polarization,stderr (stderr column empty when absent).
std::string trace_csv(const TimeTrace& trace);
TimeTrace trace_from_csv(const std::string& text);

struct DrivenResult {
    TimeTrace trace;
    QuantumState final_state;
    double max_norm_drift = 0.0;
};

/**
 * Piecewise-constant propagation. On each substep [t, t + h] the Hamiltonian
 * is H_static + Omega f(t + h/2) sum_i Sx_i. With dd_tau > 0 ideal pi pulses
 * about +x, +x, -x, -x fire at tau/2, 3tau/2, 5tau/2, 7tau/2 of every 4 tau
 * cycle. Substeps are aligned to pulse and sample times; a sample at a pulse
 * time is taken before the pulse.
 */
DrivenResult evolve_driven(const QuantumState& psi, const ManyBodyOperator& h_static, const drive::DriveWaveform& w,
                           const EvolutionPlan& plan, const KrylovOptions& options = {});

}  // namespace prethermal::propagator

#include "prethermal/krylov_impl.hpp"
