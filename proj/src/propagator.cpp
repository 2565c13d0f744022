#include "prethermal/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "prethermal/error.hpp"
#include "prethermal/io.hpp"

namespace prethermal::propagator {

namespace {

using hamiltonian::Complex;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// exp(-i H t) through a stored eigendecomposition; real eigenvectors when H is real.
class DenseEvolver {
  public:
    explicit DenseEvolver(const ManyBodyOperator& h) {
        const hamiltonian::Eigensystem eig = hamiltonian::diagonalize(h, kDenseMaxSpins);
        values_ = eig.values;
        real_ = h.is_real();
        if (real_) {
            real_vectors_ = eig.vectors.real();
        } else {
            vectors_ = eig.vectors;
        }
    }

    void evolve(StateVector& psi, double t) const {
        if (t == 0.0) return;
        const Eigen::Index dim = psi.size();
        if (real_) {
            Eigen::MatrixXd parts(dim, 2);
            parts.col(0) = psi.real();
            parts.col(1) = psi.imag();
            Eigen::MatrixXd c = real_vectors_.transpose() * parts;
            for (Eigen::Index k = 0; k < dim; ++k) {
                const Complex z = Complex(c(k, 0), c(k, 1)) * std::exp(Complex(0.0, -values_[k] * t));
                c(k, 0) = z.real();
                c(k, 1) = z.imag();
            }
            const Eigen::MatrixXd back = real_vectors_ * c;
            psi.real() = back.col(0);
            psi.imag() = back.col(1);
        } else {
            Eigen::VectorXcd c = vectors_.adjoint() * psi;
            for (Eigen::Index k = 0; k < dim; ++k) c[k] *= std::exp(Complex(0.0, -values_[k] * t));
            psi = vectors_ * c;
        }
    }

  private:
    Eigen::VectorXd values_;
    Eigen::MatrixXd real_vectors_;
    Eigen::MatrixXcd vectors_;
    bool real_ = false;
};

/// Static evolution by whichever route fits the system size.
class StaticEvolver {
  public:
    StaticEvolver(const ManyBodyOperator& h, const KrylovOptions& options) : h_(h), options_(options) {
        if (h.n_spins() <= kDenseMaxSpins) dense_.emplace(h);
    }

    void evolve(StateVector& psi, double t) const {
        if (t == 0.0) return;
        if (dense_) {
            dense_->evolve(psi, t);
        } else {
            auto apply = [this](const StateVector& in, StateVector& out) { h_.apply(in, out); };
            psi = krylov_expm(apply, psi, t, options_);
        }
    }

  private:
    const ManyBodyOperator& h_;
    KrylovOptions options_;
    std::optional<DenseEvolver> dense_;
};

/// H_static + c sum_i Sx_i
struct DrivenApply {
    const ManyBodyOperator* h;
    double coefficient;

    void operator()(const StateVector& in, StateVector& out) const {
        h->apply(in, out);
        if (coefficient == 0.0) return;
        const double half = 0.5 * coefficient;
        const auto dim = static_cast<std::uint64_t>(in.size());
        for (std::uint64_t bit = 1; bit < dim; bit <<= 1) {
            for (std::uint64_t s = 0; s < dim; ++s) {
                out[static_cast<Eigen::Index>(s)] += half * in[static_cast<Eigen::Index>(s ^ bit)];
            }
        }
    }
};

std::string_view to_string(SamplingKind kind) {
    switch (kind) {
        case SamplingKind::stroboscopic: return "stroboscopic";
        case SamplingKind::uniform: return "uniform";
        case SamplingKind::rolling: return "rolling";
    }
    return "unknown";
}

}  // namespace

// ---------------------------------------------------------------------------

QuantumState evolve_static(const QuantumState& psi, const ManyBodyOperator& h, double t,
                           const KrylovOptions& options) {
    if (!(t >= 0.0)) fail(ErrorKind::invalid_input, "evolution time must be nonnegative");
    if (psi.dimension() != h.dimension()) fail(ErrorKind::invalid_input, "state and operator dimensions differ");
    StateVector v = psi.amplitudes();
    StaticEvolver(h, options).evolve(v, t);
    return QuantumState::unchecked(std::move(v));
}

void apply_global_pulse_inplace(StateVector& psi, PulseAxis axis, double angle) {
    if (angle == 0.0) return;
    const double signed_angle = (axis == PulseAxis::minus_x || axis == PulseAxis::minus_y) ? -angle : angle;
    const double c = std::cos(0.5 * signed_angle);
    const double s = std::sin(0.5 * signed_angle);
    const bool about_x = axis == PulseAxis::plus_x || axis == PulseAxis::minus_x;
    const auto dim = static_cast<std::uint64_t>(psi.size());
    // exp(-i a Sx) = [[c, -i s], [-i s, c]];  exp(-i a Sy) = [[c, -s], [s, c]] on (up, down)
    for (std::uint64_t bit = 1; bit < dim; bit <<= 1) {
        for (std::uint64_t s0 = 0; s0 < dim; ++s0) {
            if (s0 & bit) continue;
            const auto i0 = static_cast<Eigen::Index>(s0);
            const auto i1 = static_cast<Eigen::Index>(s0 | bit);
            const Complex up = psi[i0];
            const Complex down = psi[i1];
            if (about_x) {
                psi[i0] = c * up + Complex(0.0, -s) * down;
                psi[i1] = Complex(0.0, -s) * up + c * down;
            } else {
                psi[i0] = c * up - s * down;
                psi[i1] = s * up + c * down;
            }
        }
    }
}

QuantumState apply_global_pulse(const QuantumState& psi, PulseAxis axis, double angle) {
    StateVector v = psi.amplitudes();
    apply_global_pulse_inplace(v, axis, angle);
    return QuantumState::unchecked(std::move(v));
}

// ---------------------------------------------------------------------------

SamplingSpec SamplingSpec::stroboscopic(double omega) {
    SamplingSpec s;
    s.kind = SamplingKind::stroboscopic;
    s.omega = omega;
    return s;
}

SamplingSpec SamplingSpec::uniform(double interval) {
    SamplingSpec s;
    s.kind = SamplingKind::uniform;
    s.interval = interval;
    return s;
}

SamplingSpec SamplingSpec::rolling(double omega, double ratio, int center_stride) {
    SamplingSpec s;
    s.kind = SamplingKind::rolling;
    s.omega = omega;
    s.ratio = ratio;
    s.center_stride = center_stride;
    return s;
}

double default_dt(const drive::DriveWaveform& w, double dd_tau) {
    double dt = 0.01;
    if (w.is_driven()) dt = std::min(dt, kTwoPi / (64.0 * w.max_frequency()));
    if (dd_tau > 0.0) dt = std::min(dt, dd_tau / 4.0);
    return dt;
}

void EvolutionPlan::validate(const drive::DriveWaveform& w) const {
    w.validate();
    if (!(total_time >= 0.0)) fail(ErrorKind::invalid_plan, "total_time must be nonnegative");
    if (!(dt > 0.0)) fail(ErrorKind::invalid_plan, "dt must be positive");
    if (!(dd_tau >= 0.0)) fail(ErrorKind::invalid_plan, "dd_tau must be nonnegative");
    if (dd_tau > 0.0 && dt > 0.5 * dd_tau) {
        fail(ErrorKind::invalid_plan, "dt = " + io::format_double(dt) + " us exceeds dd_tau / 2");
    }
    if (w.is_driven()) {
        const double limit = kTwoPi / (64.0 * w.max_frequency());
        if (dt > limit * (1.0 + 1e-12)) {
            fail(ErrorKind::invalid_plan, "dt = " + io::format_double(dt) + " us exceeds 2 pi / (64 omega_max) = " +
                                              io::format_double(limit) + " us");
        }
    }
    switch (sampling.kind) {
        case SamplingKind::stroboscopic:
            if (!(sampling.omega > 0.0)) fail(ErrorKind::invalid_plan, "stroboscopic sampling needs omega > 0");
            break;
        case SamplingKind::uniform:
            if (!(sampling.interval > 0.0)) fail(ErrorKind::invalid_plan, "uniform sampling needs a positive interval");
            break;
        case SamplingKind::rolling:
            if (!(sampling.omega > 0.0)) fail(ErrorKind::invalid_plan, "rolling sampling needs omega > 0");
            if (!(sampling.ratio > 0.0)) fail(ErrorKind::invalid_plan, "rolling sampling needs ratio > 0");
            if (sampling.center_stride < 1) fail(ErrorKind::invalid_plan, "rolling center stride must be >= 1");
            break;
    }
}

nlohmann::json EvolutionPlan::to_json() const {
    nlohmann::json s = {{"kind", std::string(to_string(sampling.kind))}};
    switch (sampling.kind) {
        case SamplingKind::stroboscopic: s["omega_rad_per_us"] = sampling.omega; break;
        case SamplingKind::uniform: s["interval_us"] = sampling.interval; break;
        case SamplingKind::rolling:
            s["omega_rad_per_us"] = sampling.omega;
            s["ratio"] = sampling.ratio;
            s["center_stride"] = sampling.center_stride;
            break;
    }
    nlohmann::json out = {{"total_time_us", total_time},
                          {"dt_us", dt},
                          {"dd_tau_us", dd_tau},
                          {"drive_time_offset_us", drive_time_offset},
                          {"sampling", s}};
    if (observed_site) out["observed_site"] = *observed_site;
    return out;
}

SampleTimes sampling_times(const EvolutionPlan& plan) {
    SampleTimes out;
    const double end = plan.total_time * (1.0 + 1e-12) + 1e-12;
    const SamplingSpec& s = plan.sampling;
    switch (s.kind) {
        case SamplingKind::stroboscopic:
            for (long k = 0;; ++k) {
                const double t = kTwoPi * static_cast<double>(k) / s.omega;
                if (t > end) break;
                out.times.push_back(std::min(t, plan.total_time));
            }
            break;
        case SamplingKind::uniform:
            for (long k = 0;; ++k) {
                const double t = static_cast<double>(k) * s.interval;
                if (t > end) break;
                out.times.push_back(std::min(t, plan.total_time));
            }
            break;
        case SamplingKind::rolling: {
            const double slow_period = kTwoPi / (s.ratio * s.omega);
            const double offsets[4] = {-0.375 * slow_period, -0.125 * slow_period, 0.125 * slow_period,
                                       0.375 * slow_period};
            struct Tagged {
                double t;
                int center;
            };
            std::vector<Tagged> points;
            int center = 0;
            for (long k = 0;; k += s.center_stride) {
                const double tc = kTwoPi * static_cast<double>(k) / s.omega;
                if (tc + offsets[3] > end) break;
                if (tc + offsets[0] < 0.0) continue;
                out.centers.push_back(tc);
                for (double off : offsets) points.push_back({tc + off, center});
                ++center;
            }
            std::stable_sort(points.begin(), points.end(), [](const Tagged& a, const Tagged& b) { return a.t < b.t; });
            for (const Tagged& p : points) {
                out.times.push_back(p.t);
                out.center_index.push_back(p.center);
            }
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

void TimeTrace::validate() const {
    if (values.size() != times.size()) fail(ErrorKind::invalid_input, "trace values and times differ in length");
    if (!stderr_values.empty() && stderr_values.size() != times.size()) {
        fail(ErrorKind::invalid_input, "trace stderr and times differ in length");
    }
    if (!center_index.empty() && center_index.size() != times.size()) {
        fail(ErrorKind::invalid_input, "trace center tags and times differ in length");
    }
    for (std::size_t k = 1; k < times.size(); ++k) {
        if (!(times[k] > times[k - 1])) fail(ErrorKind::invalid_input, "trace times must be strictly increasing");
    }
    for (double v : values) {
        if (!(std::abs(v) <= 1.0 + 1e-9)) fail(ErrorKind::invalid_input, "polarization " + io::format_double(v) + " exceeds 1");
    }
}

std::string trace_csv(const TimeTrace& trace) {
    std::ostringstream out;
    out << "time_us,polarization,stderr\n";
    for (std::size_t k = 0; k < trace.size(); ++k) {
        out << io::format_double(trace.times[k]) << ',' << io::format_double(trace.values[k]) << ',';
        if (trace.has_stderr()) out << io::format_double(trace.stderr_values[k]);
        out << '\n';
    }
    return out.str();
}

TimeTrace trace_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("time_us,polarization", 0) != 0) {
        fail(ErrorKind::invalid_input, "trace CSV must start with the header time_us,polarization,stderr");
    }
    TimeTrace trace;
    bool any_stderr = false;
    bool all_stderr = true;
    std::vector<double> errs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a, b, c;
        std::getline(row, a, ',');
        std::getline(row, b, ',');
        std::getline(row, c, ',');
        try {
            trace.times.push_back(std::stod(a));
            trace.values.push_back(std::stod(b));
        } catch (const std::exception&) {
            fail(ErrorKind::invalid_input, "malformed trace row: " + line);
        }
        if (!c.empty()) {
            any_stderr = true;
            errs.push_back(std::stod(c));
        } else {
            all_stderr = false;
            errs.push_back(0.0);
        }
    }
    if (any_stderr && all_stderr) trace.stderr_values = std::move(errs);
    trace.validate();
    return trace;
}

// ---------------------------------------------------------------------------

DrivenResult evolve_driven(const QuantumState& psi, const ManyBodyOperator& h_static, const drive::DriveWaveform& w,
                           const EvolutionPlan& plan, const KrylovOptions& options) {
    plan.validate(w);
    if (psi.dimension() != h_static.dimension()) fail(ErrorKind::invalid_input, "state and operator dimensions differ");
    if (plan.observed_site && *plan.observed_site >= h_static.n_spins()) {
        fail(ErrorKind::invalid_plan, "observed site out of range");
    }

    const SampleTimes samples = sampling_times(plan);

    std::vector<double> pulse_times;
    std::vector<PulseAxis> pulse_axes;
    if (plan.dd_tau > 0.0) {
        const double tau = plan.dd_tau;
        const double offsets[4] = {0.5 * tau, 1.5 * tau, 2.5 * tau, 3.5 * tau};
        const PulseAxis axes[4] = {PulseAxis::plus_x, PulseAxis::plus_x, PulseAxis::minus_x, PulseAxis::minus_x};
        for (long cycle = 0;; ++cycle) {
            const double start = 4.0 * tau * static_cast<double>(cycle);
            if (start + offsets[0] > plan.total_time) break;
            for (int k = 0; k < 4; ++k) {
                const double t = start + offsets[k];
                if (t > plan.total_time) break;
                pulse_times.push_back(t);
                pulse_axes.push_back(axes[k]);
            }
        }
    }

    const bool driven = w.is_driven() && w.amplitude != 0.0;
    std::optional<StaticEvolver> static_evolver;
    if (!driven) static_evolver.emplace(h_static, options);

    StateVector state = psi.amplitudes();
    double now = 0.0;
    auto advance = [&](double target) {
        const double span = target - now;
        if (span <= 0.0) return;
        if (!driven) {
            static_evolver->evolve(state, span);
        } else {
            const auto steps = static_cast<long>(std::max(1.0, std::ceil(span / plan.dt - 1e-9)));
            const double h = span / static_cast<double>(steps);
            for (long k = 0; k < steps; ++k) {
                const double mid = now + (static_cast<double>(k) + 0.5) * h;
                const DrivenApply apply{&h_static, w.amplitude * drive::waveform_value(w, mid + plan.drive_time_offset)};
                state = krylov_expm(apply, state, h, options);
            }
        }
        now = target;
    };
    auto observe = [&]() {
        return plan.observed_site ? hamiltonian::site_polarization(state, *plan.observed_site)
                                  : hamiltonian::polarization(state);
    };

    DrivenResult result{TimeTrace{}, QuantumState::unchecked(StateVector()), 0.0};
    TimeTrace& trace = result.trace;
    trace.center_index = samples.center_index;
    trace.centers = samples.centers;
    trace.metadata = {{"plan", plan.to_json()},
                      {"drive", {{"kind", std::string(drive::to_string(w.kind))},
                                 {"omega_rad_per_us", w.omega},
                                 {"ratio", w.ratio},
                                 {"amplitude_rad_per_us", w.amplitude}}}};

    const double eps = 1e-9 * std::max({plan.dt, plan.dd_tau, 1e-6});
    std::size_t next_sample = 0;
    std::size_t next_pulse = 0;
    while (next_sample < samples.times.size() || next_pulse < pulse_times.size()) {
        const double ts = next_sample < samples.times.size() ? samples.times[next_sample] : INFINITY;
        const double tp = next_pulse < pulse_times.size() ? pulse_times[next_pulse] : INFINITY;
        if (ts <= tp + eps) {
            advance(std::max(now, ts));
            trace.times.push_back(ts);
            trace.values.push_back(observe());
            result.max_norm_drift = std::max(result.max_norm_drift, std::abs(state.norm() - 1.0));
            ++next_sample;
        } else {
            advance(tp);
            apply_global_pulse_inplace(state, pulse_axes[next_pulse], std::numbers::pi);
            ++next_pulse;
        }
    }
    result.max_norm_drift = std::max(result.max_norm_drift, std::abs(state.norm() - 1.0));
    result.final_state = QuantumState::unchecked(std::move(state));
    return result;
}

}  // namespace prethermal::propagator
