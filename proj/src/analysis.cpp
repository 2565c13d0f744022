#include "prethermal/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "prethermal/ensemble.hpp"
#include "prethermal/error.hpp"
#include "prethermal/io.hpp"
#include "prethermal/rng.hpp"

namespace prethermal::analysis {

namespace {

constexpr double kLogTauCap = 34.5;  // ~1e15 us
constexpr double kUnboundedFactor = 1e4;

nlohmann::json finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

nlohmann::json map_json(const std::map<std::string, double>& m) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [k, v] : m) out[k] = finite_or_null(v);
    return out;
}

struct Window {
    std::vector<double> t, y, w;
    bool weighted = false;
};

Window select_window(const TimeTrace& trace, double window_start) {
    Window win;
    // weights need a positive stderr at every point; a zero spread (e.g. P(0) = 1
    // in every realization) falls back to uniform weights
    win.weighted = trace.has_stderr();
    for (std::size_t k = 0; k < trace.size(); ++k) {
        if (trace.times[k] < window_start) continue;
        win.t.push_back(trace.times[k]);
        win.y.push_back(trace.values[k]);
        if (win.weighted) {
            const double s = trace.stderr_values[k];
            if (!(s > 0.0) || !std::isfinite(s)) win.weighted = false;
            win.w.push_back(win.weighted ? 1.0 / (s * s) : 1.0);
        } else {
            win.w.push_back(1.0);
        }
    }
    if (!win.weighted) std::fill(win.w.begin(), win.w.end(), 1.0);
    return win;
}

/// Shape g(t) = model / A and d ln g / d ln tau.
struct Shape {
    double g;
    double dlog;
};

Shape shape(DecayModel model, double tau, double T0, double t) {
    switch (model) {
        case DecayModel::single_exp_T0: return {std::exp(-(t / tau + t / T0)), t / tau};
        case DecayModel::stretched_exp_T0: {
            const double s = std::sqrt(t / tau);
            return {std::exp(-s - t / T0), 0.5 * s};
        }
        case DecayModel::plain_exp: return {std::exp(-t / tau), t / tau};
    }
    return {0.0, 0.0};
}

double chi2_of(const Window& win, DecayModel model, double a, double u, double T0) {
    const double tau = std::exp(u);
    double c = 0.0;
    for (std::size_t k = 0; k < win.t.size(); ++k) {
        const double r = win.y[k] - a * shape(model, tau, T0, win.t[k]).g;
        c += win.w[k] * r * r;
    }
    return c;
}

/// Best amplitude for fixed tau (the model is linear in A).
double profile_amplitude(const Window& win, DecayModel model, double u, double T0) {
    const double tau = std::exp(u);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < win.t.size(); ++k) {
        const double g = shape(model, tau, T0, win.t[k]).g;
        num += win.w[k] * g * win.y[k];
        den += win.w[k] * g * g;
    }
    return den > 0.0 ? num / den : 0.0;
}

struct Refined {
    double a, u, chi2;
    int iterations;
    bool converged;
};

Refined refine(const Window& win, DecayModel model, double a, double u, double T0, const FitOptions& options) {
    double chi2 = chi2_of(win, model, a, u, T0);
    double lambda = 1e-3;
    for (int it = 1; it <= options.max_iterations; ++it) {
        const double tau = std::exp(u);
        Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
        Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
        for (std::size_t k = 0; k < win.t.size(); ++k) {
            const Shape s = shape(model, tau, T0, win.t[k]);
            const Eigen::Vector2d j(s.g, a * s.g * s.dlog);
            const double r = win.y[k] - a * s.g;
            jtj += win.w[k] * j * j.transpose();
            jtr += win.w[k] * r * j;
        }
        bool accepted = false;
        for (int tries = 0; tries < 40; ++tries) {
            Eigen::Matrix2d damped = jtj;
            damped.diagonal() *= 1.0 + lambda;
            const Eigen::Vector2d step = damped.ldlt().solve(jtr);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            const double a_new = a + step[0];
            const double u_new = std::min(u + step[1], kLogTauCap);
            const double chi2_new = chi2_of(win, model, a_new, u_new, T0);
            if (chi2_new <= chi2) {
                const bool small = std::abs(a_new - a) <= options.relative_tolerance * std::abs(a_new) &&
                                   std::abs(u_new - u) <= options.relative_tolerance;
                const bool stalled = chi2 - chi2_new <= 1e-15 * chi2;
                a = a_new;
                u = u_new;
                chi2 = chi2_new;
                lambda = std::max(lambda * 0.1, 1e-12);
                accepted = true;
                if (small || (stalled && tries == 0) || u >= kLogTauCap) return {a, u, chi2, it, true};
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) return {a, u, chi2, it, true};  // no descent direction left: at a minimum
    }
    return {a, u, chi2, options.max_iterations, false};
}

/// Linear weighted least squares; returns coefficients, covariance and chi2.
struct LinearFit {
    Eigen::VectorXd coef;
    Eigen::MatrixXd cov;
    double chi2;
};

LinearFit linear_lsq(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w, bool absolute) {
    const Eigen::VectorXd sw = w.cwiseSqrt();
    const Eigen::MatrixXd xw = sw.asDiagonal() * x;
    const Eigen::VectorXd yw = sw.cwiseProduct(y);
    LinearFit out;
    out.coef = xw.colPivHouseholderQr().solve(yw);
    const Eigen::VectorXd r = yw - xw * out.coef;
    out.chi2 = r.squaredNorm();
    const Eigen::MatrixXd normal = xw.transpose() * xw;
    out.cov = normal.inverse();
    const auto dof = static_cast<double>(x.rows() - x.cols());
    if (!absolute) out.cov *= dof > 0 ? out.chi2 / dof : 0.0;
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(DecayModel model) {
    switch (model) {
        case DecayModel::single_exp_T0: return "single_exp_T0";
        case DecayModel::stretched_exp_T0: return "stretched_exp_T0";
        case DecayModel::plain_exp: return "plain_exp";
    }
    return "unknown";
}

DecayModel decay_model_from_string(std::string_view name) {
    for (DecayModel m : {DecayModel::single_exp_T0, DecayModel::stretched_exp_T0, DecayModel::plain_exp}) {
        if (name == to_string(m)) return m;
    }
    fail(ErrorKind::invalid_input, "unknown decay model '" + std::string(name) + "'");
}

double decay_model_value(DecayModel model, double amplitude, double tau, double T0, double t) {
    return amplitude * shape(model, tau, T0, t).g;
}

double default_window_start(double density) {
    return 100.0 * kReferenceLocalScale / ensemble::local_energy_scale(density);
}

nlohmann::json FitResult::to_json() const {
    return {{"model", std::string(analysis::to_string(model))},
            {"params", map_json(params)},
            {"param_stderr", map_json(param_stderr)},
            {"chi2", finite_or_null(chi2)},
            {"window_start_us", window_start},
            {"n_points", n_points},
            {"tau_unbounded", tau_unbounded},
            {"iterations", iterations}};
}

FitResult fit_decay(const TimeTrace& trace, DecayModel model, double T0, double window_start,
                    const FitOptions& options) {
    const bool uses_t0 = model != DecayModel::plain_exp;
    if (uses_t0 && !(T0 > 0.0)) fail(ErrorKind::invalid_input, "T0 must be positive");
    const Window win = select_window(trace, window_start);
    if (win.t.size() < 4) {
        fail(ErrorKind::insufficient_data, "only " + std::to_string(win.t.size()) + " points at t >= " +
                                               io::format_double(window_start) + " us; need 4");
    }
    const double t0 = uses_t0 ? T0 : std::numeric_limits<double>::infinity();

    Refined best{0.0, 0.0, std::numeric_limits<double>::infinity(), 0, false};
    int failures = 0;
    int total_iterations = 0;
    for (int g = 0; g < options.grid_points; ++g) {
        const double u0 = options.log_tau_min + (options.log_tau_max - options.log_tau_min) * g /
                                                    std::max(1, options.grid_points - 1);
        const double a0 = profile_amplitude(win, model, u0, t0);
        const Refined r = refine(win, model, a0, u0, t0, options);
        total_iterations += r.iterations;
        if (!r.converged || !std::isfinite(r.chi2)) {
            ++failures;
            continue;
        }
        if (r.chi2 < best.chi2) best = r;
    }
    if (!std::isfinite(best.chi2)) {
        fail(ErrorKind::fit_failure, std::string(to_string(model)) + " fit did not converge from any of " +
                                         std::to_string(options.grid_points) + " starts (" +
                                         std::to_string(win.t.size()) + " points, window " +
                                         io::format_double(window_start) + " us)");
    }

    FitResult out;
    out.model = model;
    out.window_start = window_start;
    out.n_points = win.t.size();
    out.chi2 = best.chi2;
    out.iterations = total_iterations;
    const double tau = std::exp(best.u);

    // covariance of (A, ln tau)
    Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
    for (std::size_t k = 0; k < win.t.size(); ++k) {
        const Shape s = shape(model, tau, t0, win.t[k]);
        const Eigen::Vector2d j(s.g, best.a * s.g * s.dlog);
        jtj += win.w[k] * j * j.transpose();
    }
    const double dof = static_cast<double>(win.t.size()) - 2.0;
    const double scale = win.weighted ? 1.0 : best.chi2 / dof;
    double sa = std::numeric_limits<double>::infinity();
    double su = std::numeric_limits<double>::infinity();
    if (std::abs(jtj.determinant()) > 1e-300 && jtj(1, 1) > 1e-30 * jtj(0, 0)) {
        const Eigen::Matrix2d cov = jtj.inverse() * scale;
        sa = std::sqrt(std::max(0.0, cov(0, 0)));
        su = std::sqrt(std::max(0.0, cov(1, 1)));
    }
    const double t_span = win.t.back();
    out.tau_unbounded = best.u >= kLogTauCap - 1e-9 || tau >= kUnboundedFactor * (uses_t0 ? T0 : t_span);
    out.params = {{"A", best.a}, {"tau_star_us", tau}};
    out.param_stderr = {{"A", sa}, {"tau_star_us", tau * su}};
    if (uses_t0) {
        out.params["T0_us"] = T0;
        out.param_stderr["T0_us"] = 0.0;
    }
    return out;
}

// ---------------------------------------------------------------------------

nlohmann::json HeatingCurve::to_json() const {
    nlohmann::json pts = nlohmann::json::array();
    for (const HeatingPoint& p : points) {
        pts.push_back({{"omega_rad_per_us", p.omega},
                       {"tau_star_us", finite_or_null(p.fit.tau())},
                       {"tau_star_stderr_us", finite_or_null(p.fit.tau_stderr())},
                       {"A", p.fit.amplitude()},
                       {"A_stderr", finite_or_null(p.fit.param_stderr.at("A"))},
                       {"fit", p.fit.to_json()}});
    }
    nlohmann::json fails = nlohmann::json::array();
    for (const auto& [omega, why] : failures) fails.push_back({{"omega_rad_per_us", omega}, {"error", why}});
    return {{"points", pts}, {"failures", fails}};
}

HeatingCurve extract_heating_curve(const std::map<double, TimeTrace>& traces, double T0, double window_start,
                                   DecayModel model) {
    if (traces.empty()) fail(ErrorKind::invalid_input, "no traces supplied");
    if (traces.size() < 3) fail(ErrorKind::insufficient_data, "a heating curve needs at least 3 frequencies");
    HeatingCurve curve;
    for (const auto& [omega, trace] : traces) {
        try {
            curve.points.push_back({omega, fit_decay(trace, model, T0, window_start)});
        } catch (const Error& e) {
            curve.failures.emplace_back(omega, e.what());
        }
    }
    return curve;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ScalingModel model) {
    switch (model) {
        case ScalingModel::exponential: return "exponential";
        case ScalingModel::power2: return "power2";
        case ScalingModel::power4: return "power4";
        case ScalingModel::stretched: return "stretched";
        case ScalingModel::power_half: return "power_half";
    }
    return "unknown";
}

ScalingModel scaling_model_from_string(std::string_view name) {
    for (ScalingModel m : kScalingModels) {
        if (name == to_string(m)) return m;
    }
    fail(ErrorKind::invalid_input, "unknown scaling model '" + std::string(name) + "'");
}

double ScalingFit::predict(double omega) const {
    switch (model) {
        case ScalingModel::exponential: return params.at("c_us") * std::exp(params.at("inv_J_exp_us") * omega);
        case ScalingModel::power2: return params.at("a") * omega * omega;
        case ScalingModel::power4: return params.at("a") * std::pow(omega, 4);
        case ScalingModel::stretched: return params.at("c_us") * std::exp(params.at("b") * std::sqrt(omega));
        case ScalingModel::power_half: return params.at("a") * std::sqrt(omega);
    }
    return 0.0;
}

const ScalingFit& ScalingResult::fit(ScalingModel model) const {
    for (const ScalingFit& f : fits) {
        if (f.model == model) return f;
    }
    fail(ErrorKind::invalid_input, "model missing from scaling result");
}

nlohmann::json ScalingResult::to_json() const {
    nlohmann::json models = nlohmann::json::object();
    for (const ScalingFit& f : fits) {
        models[std::string(to_string(f.model))] = {{"params", map_json(f.params)},
                                                   {"param_stderr", map_json(f.param_stderr)},
                                                   {"chi2", f.chi2},
                                                   {"relative_residuals", f.relative_residuals}};
    }
    nlohmann::json comp = nlohmann::json::array();
    for (ScalingModel m : comparable) comp.push_back(std::string(to_string(m)));
    return {{"omega_rad_per_us", omega}, {"tau_star_us", tau},  {"models", models},
            {"best_model", std::string(to_string(best))}, {"comparable_models", comp}};
}

ScalingResult fit_scaling(const std::vector<double>& omega, const std::vector<double>& tau,
                          const std::vector<double>& tau_stderr) {
    const std::size_t n = omega.size();
    if (tau.size() != n) fail(ErrorKind::invalid_input, "omega and tau lengths differ");
    if (!tau_stderr.empty() && tau_stderr.size() != n) fail(ErrorKind::invalid_input, "tau_stderr length differs");
    if (n < 4) fail(ErrorKind::insufficient_data, "scaling fits need at least 4 points");
    Eigen::VectorXd y(n), w(n), x(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (!(tau[k] > 0.0) || !std::isfinite(tau[k])) {
            fail(ErrorKind::invalid_input, "tau_star must be positive and finite, got " + io::format_double(tau[k]));
        }
        if (!(omega[k] > 0.0)) fail(ErrorKind::invalid_input, "omega must be positive");
        x[k] = omega[k];
        y[k] = std::log(tau[k]);
        // the stderr of ln tau is stderr / tau
        w[k] = tau_stderr.empty() ? 1.0 : std::pow(tau[k] / tau_stderr[k], 2);
        if (!std::isfinite(w[k]) || !(w[k] > 0.0)) fail(ErrorKind::invalid_input, "tau stderr must be positive");
    }
    const bool absolute = !tau_stderr.empty();

    ScalingResult result;
    result.omega = omega;
    result.tau = tau;
    for (ScalingModel m : kScalingModels) {
        ScalingFit f;
        f.model = m;
        const auto ni = static_cast<Eigen::Index>(n);
        switch (m) {
            case ScalingModel::exponential:
            case ScalingModel::stretched: {
                Eigen::MatrixXd design(ni, 2);
                design.col(0).setOnes();
                design.col(1) = m == ScalingModel::exponential ? x : Eigen::VectorXd(x.cwiseSqrt());
                const LinearFit lf = linear_lsq(design, y, w, absolute);
                const double c = std::exp(lf.coef[0]);
                const double slope = lf.coef[1];
                const double s_c = c * std::sqrt(lf.cov(0, 0));
                const double s_slope = std::sqrt(lf.cov(1, 1));
                f.chi2 = lf.chi2;
                f.params["c_us"] = c;
                f.param_stderr["c_us"] = s_c;
                if (m == ScalingModel::exponential) {
                    f.params["inv_J_exp_us"] = slope;
                    f.param_stderr["inv_J_exp_us"] = s_slope;
                    f.params["J_exp_rad_per_us"] = 1.0 / slope;
                    f.param_stderr["J_exp_rad_per_us"] = s_slope / (slope * slope);
                } else {
                    f.params["b"] = slope;
                    f.param_stderr["b"] = s_slope;
                    f.params["omega0_rad_per_us"] = 1.0 / (slope * slope);
                    f.param_stderr["omega0_rad_per_us"] = 2.0 * s_slope / std::abs(slope * slope * slope);
                }
                break;
            }
            case ScalingModel::power2:
            case ScalingModel::power4:
            case ScalingModel::power_half: {
                const double p = m == ScalingModel::power2 ? 2.0 : m == ScalingModel::power4 ? 4.0 : 0.5;
                const Eigen::VectorXd shifted = y - p * x.array().log().matrix();
                const Eigen::MatrixXd design = Eigen::MatrixXd::Ones(ni, 1);
                const LinearFit lf = linear_lsq(design, shifted, w, absolute);
                const double a = std::exp(lf.coef[0]);
                f.chi2 = lf.chi2;
                f.params["a"] = a;
                f.param_stderr["a"] = a * std::sqrt(lf.cov(0, 0));
                break;
            }
        }
        for (std::size_t k = 0; k < n; ++k) {
            const double pred = f.predict(omega[k]);
            f.relative_residuals.push_back((tau[k] - pred) / pred);
        }
        if (!std::isfinite(f.chi2)) fail(ErrorKind::fit_failure, "non-finite chi2 for " + std::string(to_string(m)));
        result.fits.push_back(std::move(f));
    }
    auto best = std::min_element(result.fits.begin(), result.fits.end(),
                                 [](const ScalingFit& a, const ScalingFit& b) { return a.chi2 < b.chi2; });
    result.best = best->model;
    for (const ScalingFit& f : result.fits) {
        if (f.model != result.best && f.chi2 <= kComparableChi2Factor * best->chi2) result.comparable.push_back(f.model);
    }
    return result;
}

ScalingResult fit_scaling(const std::map<double, double>& curve) {
    std::vector<double> omega, tau;
    for (const auto& [o, t] : curve) {
        omega.push_back(o);
        tau.push_back(t);
    }
    return fit_scaling(omega, tau);
}

ScalingResult fit_scaling(const HeatingCurve& curve) {
    std::vector<double> omega, tau, err;
    bool all_errors = true;
    for (const HeatingPoint& p : curve.points) {
        if (p.fit.tau_unbounded) continue;
        omega.push_back(p.omega);
        tau.push_back(p.fit.tau());
        err.push_back(p.fit.tau_stderr());
        if (!(std::isfinite(err.back()) && err.back() > 0.0)) all_errors = false;
    }
    if (omega.size() < 4) {
        fail(ErrorKind::insufficient_data, "only " + std::to_string(omega.size()) +
                                               " bounded heating times; scaling fits need 4");
    }
    return all_errors ? fit_scaling(omega, tau, err) : fit_scaling(omega, tau);
}

// ---------------------------------------------------------------------------

TimeTrace rolling_average(const TimeTrace& raw) {
    if (raw.center_index.size() != raw.size() || raw.centers.empty()) {
        fail(ErrorKind::invalid_input, "trace carries no rolling-sample tags");
    }
    const std::size_t n_centers = raw.centers.size();
    std::vector<std::vector<std::size_t>> members(n_centers);
    for (std::size_t k = 0; k < raw.size(); ++k) {
        const int c = raw.center_index[k];
        if (c < 0 || static_cast<std::size_t>(c) >= n_centers) fail(ErrorKind::invalid_input, "rolling tag out of range");
        members[static_cast<std::size_t>(c)].push_back(k);
    }
    TimeTrace out;
    out.metadata = raw.metadata;
    out.metadata["rolling_average"] = true;
    for (std::size_t c = 0; c < n_centers; ++c) {
        if (members[c].size() != 4) {
            fail(ErrorKind::invalid_input, "rolling center " + std::to_string(c) + " at t = " +
                                               io::format_double(raw.centers[c]) + " us has " +
                                               std::to_string(members[c].size()) + " samples, expected 4");
        }
        double sum = 0.0;
        for (std::size_t k : members[c]) sum += raw.values[k];
        const double mean = sum / 4.0;
        double err;
        if (raw.has_stderr()) {
            double var = 0.0;
            for (std::size_t k : members[c]) var += raw.stderr_values[k] * raw.stderr_values[k];
            err = std::sqrt(var) / 4.0;
        } else {
            double ss = 0.0;
            for (std::size_t k : members[c]) ss += (raw.values[k] - mean) * (raw.values[k] - mean);
            err = std::sqrt(ss / 3.0) / 2.0;
        }
        out.times.push_back(raw.centers[c]);
        out.values.push_back(mean);
        out.stderr_values.push_back(err);
    }
    return out;
}

double micromotion_amplitude(const TimeTrace& trace, double t_a, double t_b) {
    std::vector<double> t, y;
    for (std::size_t k = 0; k < trace.size(); ++k) {
        if (trace.times[k] >= t_a && trace.times[k] <= t_b) {
            t.push_back(trace.times[k]);
            y.push_back(trace.values[k]);
        }
    }
    if (t.size() < 8) fail(ErrorKind::insufficient_data, "micromotion window holds " + std::to_string(t.size()) + " points; need 8");
    const double n = static_cast<double>(t.size());
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
    if (std::abs(mean) < 1e-6) fail(ErrorKind::undefined_amplitude, "mean polarization in the window is ~0");
    const double tm = std::accumulate(t.begin(), t.end(), 0.0) / n;
    double stt = 0.0, sty = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        stt += (t[k] - tm) * (t[k] - tm);
        sty += (t[k] - tm) * (y[k] - mean);
    }
    const double slope = stt > 0.0 ? sty / stt : 0.0;
    double ss = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double r = y[k] - mean - slope * (t[k] - tm);
        ss += r * r;
    }
    return std::sqrt(ss / n) / std::abs(mean);
}

nlohmann::json PlateauFit::to_json() const {
    return {{"slope_rad_per_us", slope},
            {"intercept", intercept},
            {"slope_stderr_rad_per_us", slope_stderr},
            {"intercept_stderr", intercept_stderr},
            {"chi2", chi2}};
}

PlateauFit fit_plateau_extrapolation(const std::map<double, double>& amplitudes, const std::map<double, double>& stderr) {
    if (amplitudes.size() < 3) fail(ErrorKind::insufficient_data, "plateau extrapolation needs at least 3 frequencies");
    const auto n = static_cast<Eigen::Index>(amplitudes.size());
    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd y(n), w(n);
    Eigen::Index k = 0;
    for (const auto& [omega, a] : amplitudes) {
        if (!(omega > 0.0)) fail(ErrorKind::invalid_input, "omega must be positive");
        design(k, 0) = 1.0;
        design(k, 1) = 1.0 / omega;
        y[k] = a;
        w[k] = 1.0;
        if (!stderr.empty()) {
            const auto it = stderr.find(omega);
            if (it == stderr.end() || !(it->second > 0.0)) fail(ErrorKind::invalid_input, "missing or nonpositive stderr");
            w[k] = 1.0 / (it->second * it->second);
        }
        ++k;
    }
    const LinearFit lf = linear_lsq(design, y, w, !stderr.empty());
    PlateauFit out;
    out.intercept = lf.coef[0];
    out.slope = lf.coef[1];
    out.intercept_stderr = std::sqrt(std::max(0.0, lf.cov(0, 0)));
    out.slope_stderr = std::sqrt(std::max(0.0, lf.cov(1, 1)));
    out.chi2 = lf.chi2;
    return out;
}

TimeTrace add_shot_noise(const TimeTrace& trace, std::int64_t photons_per_point, std::uint64_t seed) {
    if (photons_per_point < 1) fail(ErrorKind::invalid_input, "photons_per_point must be >= 1");
    const double n_ph = static_cast<double>(photons_per_point);
    Rng rng(seed);
    TimeTrace out = trace;
    out.stderr_values.assign(trace.size(), 0.0);
    out.metadata["shot_noise"] = {{"photons_per_point", photons_per_point}, {"seed", seed}};
    for (std::size_t k = 0; k < trace.size(); ++k) {
        const double p = trace.values[k];
        const double bright_mean = 0.5 * n_ph * (1.0 + p);
        const double dark_mean = 0.5 * n_ph * (1.0 - p);
        const double bright = rng.normal(bright_mean, std::sqrt(std::max(bright_mean, 0.0)));
        const double dark = rng.normal(dark_mean, std::sqrt(std::max(dark_mean, 0.0)));
        out.values[k] = std::clamp((bright - dark) / n_ph, -1.0, 1.0);
        out.stderr_values[k] = std::sqrt(std::max(bright, 0.0) + std::max(dark, 0.0)) / n_ph;
    }
    return out;
}

}  // namespace prethermal::analysis
