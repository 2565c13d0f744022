#include "prethermal/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <initializer_list>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "prethermal/error.hpp"
#include "prethermal/hamiltonian.hpp"
#include "prethermal/io.hpp"
#include "prethermal/rng.hpp"

namespace prethermal::harness {

namespace {

using nlohmann::json;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reads one JSON object, rejecting keys outside `allowed`.
class ObjectReader {
  public:
    ObjectReader(const json& doc, std::string path, std::initializer_list<const char*> allowed) : doc_(doc), path_(std::move(path)) {
        if (!doc.is_object()) fail(ErrorKind::config, path_ + " must be a JSON object");
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& [key, _] : doc.items()) {
            if (!ok.count(key)) fail(ErrorKind::config, "unknown key '" + path_ + "." + key + "'");
        }
    }

    bool has(const char* key) const { return doc_.contains(key) && !doc_.at(key).is_null(); }
    const json& at(const char* key) const { return doc_.at(key); }
    std::string where(const char* key) const { return path_ + "." + key; }

    double number(const char* key, double fallback, double lo, double hi, bool lo_open = false) const {
        if (!has(key)) return fallback;
        return check_number(doc_.at(key), where(key), lo, hi, lo_open);
    }

    std::optional<double> optional_number(const char* key, double lo, double hi, bool lo_open = false) const {
        if (!has(key)) return std::nullopt;
        return check_number(doc_.at(key), where(key), lo, hi, lo_open);
    }

    std::uint64_t integer(const char* key, std::uint64_t fallback, std::uint64_t lo, std::uint64_t hi) const {
        if (!has(key)) return fallback;
        const json& v = doc_.at(key);
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
            fail(ErrorKind::config, where(key) + " must be a nonnegative integer");
        }
        const auto x = v.get<std::uint64_t>();
        if (x < lo || x > hi) {
            fail(ErrorKind::config, where(key) + " = " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                                        std::to_string(hi) + "]");
        }
        return x;
    }

    std::string text(const char* key, std::string fallback) const {
        if (!has(key)) return fallback;
        if (!doc_.at(key).is_string()) fail(ErrorKind::config, where(key) + " must be a string");
        return doc_.at(key).get<std::string>();
    }

    static double check_number(const json& v, const std::string& where, double lo, double hi, bool lo_open) {
        if (!v.is_number()) fail(ErrorKind::config, where + " must be a number");
        const double x = v.get<double>();
        const bool below = lo_open ? !(x > lo) : !(x >= lo);
        if (!std::isfinite(x) || below || x > hi) {
            fail(ErrorKind::config, where + " = " + io::format_double(x) + " outside " + (lo_open ? "(" : "[") +
                                        io::format_double(lo) + ", " + io::format_double(hi) + "]");
        }
        return x;
    }

  private:
    const json& doc_;
    std::string path_;
};

template <class F>
auto parse_enum(const std::string& where, F&& convert) {
    try {
        return convert();
    } catch (const Error& e) {
        fail(ErrorKind::config, where + ": " + e.what());
    }
}

std::string_view sampling_name(propagator::SamplingKind kind) {
    switch (kind) {
        case propagator::SamplingKind::stroboscopic: return "stroboscopic";
        case propagator::SamplingKind::uniform: return "uniform";
        case propagator::SamplingKind::rolling: return "rolling";
    }
    return "unknown";
}

std::uint64_t field_seed(std::uint64_t realization_seed) { return splitmix64(realization_seed ^ kFieldSalt); }

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
    ExperimentConfig c;
    const ObjectReader root(doc, "config", {"ensemble", "hamiltonian", "drive", "plan", "campaign", "analysis", "description"});
    if (root.has("description") && !doc.at("description").is_string()) fail(ErrorKind::config, "config.description must be a string");

    if (root.has("ensemble")) {
        const ObjectReader r(root.at("ensemble"), "ensemble", {"n_spins", "density_ppm", "geometry", "carbon_number_density_nm3"});
        c.ensemble.n_spins = r.integer("n_spins", c.ensemble.n_spins, 1, hamiltonian::kDefaultMaxSpins);
        c.ensemble.density_ppm = r.number("density_ppm", c.ensemble.density_ppm, 0.0, 1e6, true);
        const std::string g = r.text("geometry", std::string(ensemble::to_string(c.ensemble.geometry)));
        c.ensemble.geometry = parse_enum(r.where("geometry"), [&] { return ensemble::geometry_from_string(g); });
        c.ensemble.carbon_number_density = r.number("carbon_number_density_nm3", c.ensemble.carbon_number_density, 0.0, 1e4, true);
    }
    if (root.has("hamiltonian")) {
        const ObjectReader r(root.at("hamiltonian"), "hamiltonian", {"omega_rabi_mhz", "onsite_width_mhz"});
        c.hamiltonian.omega_rabi_mhz = r.number("omega_rabi_mhz", 0.0, 0.0, 1e4);
        c.hamiltonian.onsite_width_mhz = r.number("onsite_width_mhz", 0.0, 0.0, 1e4);
    }
    if (root.has("drive")) {
        const ObjectReader r(root.at("drive"), "drive", {"kind", "omega_list_mhz", "phi", "phase_offset_us"});
        const std::string k = r.text("kind", std::string(drive::to_string(c.drive.kind)));
        c.drive.kind = parse_enum(r.where("kind"), [&] { return drive::drive_kind_from_string(k); });
        if (r.has("omega_list_mhz")) {
            const json& list = r.at("omega_list_mhz");
            if (!list.is_array()) fail(ErrorKind::config, "drive.omega_list_mhz must be an array");
            for (std::size_t i = 0; i < list.size(); ++i) {
                c.drive.omega_list_mhz.push_back(
                    ObjectReader::check_number(list[i], "drive.omega_list_mhz[" + std::to_string(i) + "]", 0.0, 1e4, true));
            }
        }
        c.drive.phi = r.number("phi", c.drive.phi, 0.0, 100.0, true);
        c.drive.phase_offset_us = r.number("phase_offset_us", 0.0, -1e6, 1e6);
    }
    if (root.has("plan")) {
        const ObjectReader r(root.at("plan"), "plan", {"total_time_us", "dt_us", "dd_tau_us", "sampling"});
        c.plan.total_time_us = r.number("total_time_us", c.plan.total_time_us, 0.0, 1e7, true);
        c.plan.dt_us = r.optional_number("dt_us", 0.0, 10.0, true);
        c.plan.dd_tau_us = r.number("dd_tau_us", 0.0, 0.0, 1e4);
        if (r.has("sampling")) {
            const ObjectReader s(r.at("sampling"), "plan.sampling", {"kind", "interval_us", "center_stride"});
            const std::string k = s.text("kind", "uniform");
            if (k == "uniform") c.plan.sampling.kind = propagator::SamplingKind::uniform;
            else if (k == "stroboscopic") c.plan.sampling.kind = propagator::SamplingKind::stroboscopic;
            else if (k == "rolling") c.plan.sampling.kind = propagator::SamplingKind::rolling;
            else fail(ErrorKind::config, "plan.sampling.kind must be uniform, stroboscopic or rolling, got '" + k + "'");
            c.plan.sampling.interval_us = s.number("interval_us", c.plan.sampling.interval_us, 0.0, 1e7, true);
            c.plan.sampling.center_stride = static_cast<int>(s.integer("center_stride", 1, 1, 1000000));
        }
    }
    if (root.has("campaign")) {
        const ObjectReader r(root.at("campaign"), "campaign", {"n_realizations", "base_seed", "workers"});
        c.campaign.n_realizations = r.integer("n_realizations", 1, 1, 10000000);
        c.campaign.base_seed = r.integer("base_seed", 0, 0, UINT64_MAX);
        c.campaign.workers = r.integer("workers", 1, 1, 1024);
    }
    if (root.has("analysis")) {
        const ObjectReader r(root.at("analysis"), "analysis", {"T0_us", "window_start_us", "models"});
        c.analysis.T0_us = r.number("T0_us", c.analysis.T0_us, 0.0, 1e15, true);
        c.analysis.window_start_us = r.optional_number("window_start_us", 0.0, 1e7);
        if (r.has("models")) {
            const json& list = r.at("models");
            if (!list.is_array() || list.empty()) fail(ErrorKind::config, "analysis.models must be a nonempty array");
            c.analysis.models.clear();
            for (const json& m : list) {
                if (!m.is_string()) fail(ErrorKind::config, "analysis.models entries must be strings");
                const std::string name = m.get<std::string>();
                c.analysis.models.push_back(parse_enum("analysis.models", [&] { return analysis::decay_model_from_string(name); }));
            }
        }
    }
    c.validate();
    return c;
}

json ExperimentConfig::to_json() const {
    json sampling = {{"kind", std::string(sampling_name(plan.sampling.kind))}};
    if (plan.sampling.kind == propagator::SamplingKind::uniform) sampling["interval_us"] = plan.sampling.interval_us;
    if (plan.sampling.kind == propagator::SamplingKind::rolling) sampling["center_stride"] = plan.sampling.center_stride;
    json models = json::array();
    for (auto m : analysis.models) models.push_back(std::string(analysis::to_string(m)));
    json out = {
        {"ensemble", {{"n_spins", ensemble.n_spins},
                      {"density_ppm", ensemble.density_ppm},
                      {"geometry", std::string(ensemble::to_string(ensemble.geometry))},
                      {"carbon_number_density_nm3", ensemble.carbon_number_density}}},
        {"hamiltonian", {{"omega_rabi_mhz", hamiltonian.omega_rabi_mhz}, {"onsite_width_mhz", hamiltonian.onsite_width_mhz}}},
        {"drive", {{"kind", std::string(drive::to_string(drive.kind))},
                   {"omega_list_mhz", drive.omega_list_mhz},
                   {"phi", drive.phi},
                   {"phase_offset_us", drive.phase_offset_us}}},
        {"plan", {{"total_time_us", plan.total_time_us},
                  {"dt_us", plan.dt_us ? json(*plan.dt_us) : json(nullptr)},
                  {"dd_tau_us", plan.dd_tau_us},
                  {"sampling", sampling}}},
        {"campaign", {{"n_realizations", campaign.n_realizations},
                      {"base_seed", campaign.base_seed},
                      {"workers", campaign.workers}}},
        {"analysis", {{"T0_us", analysis.T0_us},
                      {"window_start_us", analysis.window_start_us ? json(*analysis.window_start_us) : json(nullptr)},
                      {"models", models}}},
    };
    return out;
}

void ExperimentConfig::validate() const {
    if (ensemble.n_spins < 1 || ensemble.n_spins > hamiltonian::kDefaultMaxSpins) {
        fail(ErrorKind::config, "ensemble.n_spins must lie in [1, " + std::to_string(hamiltonian::kDefaultMaxSpins) + "]");
    }
    if (!(ensemble.density_ppm > 0.0)) fail(ErrorKind::config, "ensemble.density_ppm must be positive");
    if (campaign.n_realizations < 1) fail(ErrorKind::config, "campaign.n_realizations must be >= 1");
    if (campaign.workers < 1) fail(ErrorKind::config, "campaign.workers must be >= 1");
    if (analysis.models.empty()) fail(ErrorKind::config, "analysis.models must not be empty");
    const bool driven = drive.kind != drive::DriveKind::constant_zero;
    if (driven && drive.omega_list_mhz.empty()) fail(ErrorKind::config, "driven configs need drive.omega_list_mhz");
    if (plan.sampling.kind != propagator::SamplingKind::uniform && !driven) {
        fail(ErrorKind::config, "plan.sampling.kind '" + std::string(sampling_name(plan.sampling.kind)) + "' needs a drive frequency");
    }
    if (plan.sampling.kind == propagator::SamplingKind::rolling && !(drive.kind == drive::DriveKind::two_tone_sine ||
                                                                      drive.kind == drive::DriveKind::two_tone_rect)) {
        fail(ErrorKind::config, "rolling sampling is defined for the two-tone drives only");
    }
}

double ExperimentConfig::density() const {
    return ensemble::DensitySpec{ensemble.density_ppm, ensemble.carbon_number_density}.density();
}

double ExperimentConfig::window_start() const {
    return analysis.window_start_us ? *analysis.window_start_us : analysis::default_window_start(density());
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    const std::string text = io::read_text(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::config, path.string() + ": " + e.what());
    }
    return ExperimentConfig::from_json(doc);
}

std::size_t effective_workers(const CampaignConfig& campaign) {
    if (const char* env = std::getenv("PRETHERMAL_WORKERS"); env && *env) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (*end != '\0' || v < 1 || v > 1024) fail(ErrorKind::config, std::string("PRETHERMAL_WORKERS='") + env + "' is not in [1, 1024]");
        return v;
    }
    return campaign.workers;
}

// ---------------------------------------------------------------------------
// Campaigns

drive::DriveWaveform resolve_waveform(const ExperimentConfig& config, double omega) {
    drive::DriveWaveform w;
    w.kind = config.drive.kind;
    w.omega = w.is_driven() ? omega : 0.0;
    w.ratio = config.drive.phi;
    w.amplitude = kTwoPi * config.hamiltonian.omega_rabi_mhz;
    return w;
}

propagator::EvolutionPlan resolve_plan(const ExperimentConfig& config, double omega) {
    const drive::DriveWaveform w = resolve_waveform(config, omega);
    propagator::EvolutionPlan plan;
    plan.total_time = config.plan.total_time_us;
    plan.dd_tau = config.plan.dd_tau_us;
    plan.dt = config.plan.dt_us ? *config.plan.dt_us : propagator::default_dt(w, plan.dd_tau);
    plan.drive_time_offset = config.drive.phase_offset_us;
    switch (config.plan.sampling.kind) {
        case propagator::SamplingKind::uniform:
            plan.sampling = propagator::SamplingSpec::uniform(config.plan.sampling.interval_us);
            break;
        case propagator::SamplingKind::stroboscopic:
            plan.sampling = propagator::SamplingSpec::stroboscopic(omega);
            break;
        case propagator::SamplingKind::rolling:
            plan.sampling = propagator::SamplingSpec::rolling(omega, config.drive.phi, config.plan.sampling.center_stride);
            break;
    }
    if (config.ensemble.geometry == ensemble::Geometry::central_spin_sphere && config.ensemble.n_spins > 1) {
        plan.observed_site = 0;
    }
    return plan;
}

propagator::DrivenResult run_realization(const ExperimentConfig& config, double omega, std::size_t index) {
    const std::uint64_t seed = stable_hash(config.campaign.base_seed, index);
    const ensemble::SpinEnsemble e = ensemble::sample_ensemble(
        config.ensemble.n_spins, ensemble::DensitySpec{config.ensemble.density_ppm, config.ensemble.carbon_number_density},
        config.ensemble.geometry, seed);
    std::vector<double> fields;
    if (config.hamiltonian.onsite_width_mhz > 0.0) {
        fields = hamiltonian::sample_onsite_fields(config.ensemble.n_spins, kTwoPi * config.hamiltonian.onsite_width_mhz,
                                                   field_seed(seed));
    }
    const hamiltonian::ManyBodyOperator h = hamiltonian::build_hamiltonian(
        hamiltonian::HamiltonianSpec(ensemble::CouplingTable::from_ensemble(e), kTwoPi * config.hamiltonian.omega_rabi_mhz,
                                     std::move(fields)));
    return propagator::evolve_driven(hamiltonian::initial_x_state(config.ensemble.n_spins), h,
                                     resolve_waveform(config, omega), resolve_plan(config, omega));
}

json CampaignResult::manifest() const {
    json seeds = json::array();
    json failures = json::array();
    double drift = 0.0;
    for (const RealizationRecord& r : realizations) {
        seeds.push_back(r.seed);
        if (!r.ok) failures.push_back({{"index", r.index}, {"seed", r.seed}, {"error", r.error}});
        drift = std::max(drift, r.norm_drift);
    }
    return {{"omega_rad_per_us", omega},
            {"n_realizations", realizations.size()},
            {"n_failed", n_failed},
            {"seeds", seeds},
            {"failures", failures},
            {"max_norm_drift", drift},
            {"wall_seconds", wall_seconds}};
}

CampaignResult run_campaign(const ExperimentConfig& config, double omega) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();
    const std::size_t n = config.campaign.n_realizations;
    const std::size_t workers = std::min(effective_workers(config.campaign), n);

    // the plan is validated once up front so a bad plan is a single clear error
    resolve_plan(config, omega).validate(resolve_waveform(config, omega));

    std::vector<std::optional<propagator::TimeTrace>> traces(n);
    std::vector<RealizationRecord> records(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t r = next.fetch_add(1); r < n; r = next.fetch_add(1)) {
            RealizationRecord& rec = records[r];
            rec.index = r;
            rec.seed = stable_hash(config.campaign.base_seed, r);
            try {
                propagator::DrivenResult res = run_realization(config, omega, r);
                rec.norm_drift = res.max_norm_drift;
                traces[r] = std::move(res.trace);
                rec.ok = true;
            } catch (const std::exception& e) {
                rec.error = e.what();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t k = 0; k < workers; ++k) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }

    CampaignResult result;
    result.omega = omega;
    result.realizations = std::move(records);
    for (const RealizationRecord& r : result.realizations) result.n_failed += r.ok ? 0 : 1;
    if (static_cast<double>(result.n_failed) > 0.1 * static_cast<double>(n)) {
        const std::string first = std::find_if(result.realizations.begin(), result.realizations.end(),
                                               [](const RealizationRecord& r) { return !r.ok; })->error;
        fail(ErrorKind::campaign_aborted, std::to_string(result.n_failed) + " of " + std::to_string(n) +
                                              " realizations failed (first: " + first + ")");
    }

    // ascending-index reduction
    const propagator::TimeTrace* first = nullptr;
    std::size_t n_ok = 0;
    for (const auto& t : traces) {
        if (!t) continue;
        if (!first) first = &*t;
        ++n_ok;
    }
    propagator::TimeTrace& mean = result.trace;
    mean.times = first->times;
    mean.center_index = first->center_index;
    mean.centers = first->centers;
    const std::size_t m = mean.times.size();
    std::vector<double> sum(m, 0.0);
    for (const auto& t : traces) {
        if (!t) continue;
        for (std::size_t k = 0; k < m; ++k) sum[k] += t->values[k];
    }
    mean.values.resize(m);
    for (std::size_t k = 0; k < m; ++k) mean.values[k] = sum[k] / static_cast<double>(n_ok);
    if (n_ok > 1) {
        std::vector<double> ss(m, 0.0);
        for (const auto& t : traces) {
            if (!t) continue;
            for (std::size_t k = 0; k < m; ++k) ss[k] += (t->values[k] - mean.values[k]) * (t->values[k] - mean.values[k]);
        }
        mean.stderr_values.resize(m);
        const double nn = static_cast<double>(n_ok);
        for (std::size_t k = 0; k < m; ++k) mean.stderr_values[k] = std::sqrt(ss[k] / (nn - 1.0)) / std::sqrt(nn);
    }
    mean.metadata = first->metadata;
    mean.metadata["base_seed"] = config.campaign.base_seed;
    mean.metadata["n_averaged"] = n_ok;
    mean.metadata["observable"] = resolve_plan(config, omega).observed_site ? "central_spin" : "all_spins";
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

// ---------------------------------------------------------------------------
// Protocols

DdT2Result run_dd_t2(const ExperimentConfig& config) {
    ExperimentConfig c = config;
    c.drive = DriveConfig{};
    c.hamiltonian.omega_rabi_mhz = 0.0;
    c.plan.sampling.kind = propagator::SamplingKind::uniform;
    DdT2Result out{run_campaign(c), {}};
    out.fit = analysis::fit_decay(out.campaign.trace, analysis::DecayModel::plain_exp, 1.0, 0.0);
    return out;
}

json CalibrationResult::to_json() const {
    json table = json::array();
    for (const CalibrationPoint& p : grid) {
        table.push_back({{"density_ppm", p.density_ppm}, {"t2_us", p.t2_us}, {"t2_stderr_us", p.t2_stderr_us}});
    }
    return {{"density_ppm", density_ppm}, {"density_stderr_ppm", density_stderr_ppm}, {"grid", table}};
}

CalibrationResult invert_t2_table(double target_t2, double target_stderr, std::vector<CalibrationPoint> grid) {
    if (grid.size() < 2) fail(ErrorKind::insufficient_data, "calibration needs at least 2 grid densities");
    if (!(target_t2 > 0.0) || !(target_stderr >= 0.0)) fail(ErrorKind::invalid_input, "target T2 must be positive");
    std::sort(grid.begin(), grid.end(), [](const CalibrationPoint& a, const CalibrationPoint& b) { return a.density_ppm < b.density_ppm; });
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const CalibrationPoint& a = grid[k - 1];
        const CalibrationPoint& b = grid[k];
        const double noise = 2.0 * std::hypot(a.t2_stderr_us, b.t2_stderr_us);
        if (b.t2_us > a.t2_us + noise) {
            fail(ErrorKind::calibration_ambiguous, "T2 rises from " + io::format_double(a.t2_us) + " us at " +
                                                       io::format_double(a.density_ppm) + " ppm to " +
                                                       io::format_double(b.t2_us) + " us at " +
                                                       io::format_double(b.density_ppm) + " ppm");
        }
    }
    const double hi_t2 = grid.front().t2_us;
    const double lo_t2 = grid.back().t2_us;
    if (target_t2 > hi_t2 || target_t2 < lo_t2) {
        fail(ErrorKind::calibration_ambiguous, "target T2 " + io::format_double(target_t2) + " us lies outside the grid range [" +
                                                   io::format_double(lo_t2) + ", " + io::format_double(hi_t2) + "] us");
    }
    const double lt = std::log(target_t2);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const CalibrationPoint& a = grid[k - 1];
        const CalibrationPoint& b = grid[k];
        if (!(target_t2 <= a.t2_us && target_t2 >= b.t2_us)) continue;
        const double la = std::log(a.t2_us), lb = std::log(b.t2_us);
        const double ra = std::log(a.density_ppm), rb = std::log(b.density_ppm);
        double lr = ra;
        double slope = -1.0;  // d ln T2 / d ln rho
        if (la != lb) {
            slope = (lb - la) / (rb - ra);
            lr = ra + (lt - la) / slope;
        }
        CalibrationResult out;
        out.grid = grid;
        out.density_ppm = std::exp(lr);
        out.density_stderr_ppm = out.density_ppm * (target_stderr / target_t2) / std::abs(slope);
        return out;
    }
    fail(ErrorKind::calibration_ambiguous, "no monotone grid segment brackets the target");
}

CalibrationResult calibrate_density(double target_t2, double target_stderr, const std::vector<double>& density_grid_ppm,
                                    const ExperimentConfig& config_template) {
    std::vector<CalibrationPoint> grid;
    for (double ppm : density_grid_ppm) {
        ExperimentConfig c = config_template;
        c.ensemble.density_ppm = ppm;
        const DdT2Result r = run_dd_t2(c);
        grid.push_back({ppm, r.fit.tau(), r.fit.tau_stderr()});
    }
    return invert_t2_table(target_t2, target_stderr, std::move(grid));
}

HeatingSweepResult heating_sweep(const ExperimentConfig& config) {
    config.validate();
    if (!resolve_waveform(config, 1.0).is_driven()) fail(ErrorKind::config, "heating sweeps need a driven waveform");
    std::vector<double> omegas;
    for (double nu : config.drive.omega_list_mhz) omegas.push_back(kTwoPi * nu);
    std::sort(omegas.begin(), omegas.end());
    if (omegas.size() < 4) fail(ErrorKind::config, "heating sweeps need at least 4 drive frequencies");
    const double local = ensemble::local_energy_scale(config.density());
    if (omegas.front() <= local) {
        fail(ErrorKind::config, "drive frequency " + io::format_double(omegas.front()) +
                                    " rad/us does not exceed the local energy scale " + io::format_double(local) + " rad/us");
    }
    const bool rolling = config.plan.sampling.kind == propagator::SamplingKind::rolling;
    const double window = config.window_start();

    HeatingSweepResult out;
    for (double omega : omegas) {
        SweepPoint p{run_campaign(config, omega), {}, {}, {}};
        p.analyzed = rolling ? analysis::rolling_average(p.campaign.trace) : p.campaign.trace;
        for (analysis::DecayModel m : config.analysis.models) {
            try {
                p.fits.push_back(analysis::fit_decay(p.analyzed, m, config.analysis.T0_us, window));
                p.fit_errors.emplace_back();
            } catch (const Error& e) {
                p.fits.emplace_back();
                p.fits.back().model = m;
                p.fit_errors.emplace_back(e.what());
            }
        }
        if (p.fit_errors.front().empty()) {
            out.curve.points.push_back({omega, p.fits.front()});
        } else {
            out.curve.failures.emplace_back(omega, p.fit_errors.front());
        }
        out.points.push_back(std::move(p));
    }
    try {
        out.scaling = analysis::fit_scaling(out.curve);
    } catch (const Error& e) {
        out.scaling_error = e.what();
    }
    std::map<double, double> amps, amp_err;
    for (const analysis::HeatingPoint& hp : out.curve.points) {
        amps[hp.omega] = hp.fit.amplitude();
        amp_err[hp.omega] = hp.fit.param_stderr.at("A");
    }
    if (amps.size() >= 3) {
        bool weights = true;
        for (const auto& [_, s] : amp_err) weights = weights && std::isfinite(s) && s > 0.0;
        out.plateau = analysis::fit_plateau_extrapolation(amps, weights ? amp_err : std::map<double, double>{});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Outputs

void OutputSet::add(std::string relative_path, std::string contents) {
    for (const auto& [p, _] : files_) {
        if (p == relative_path) fail(ErrorKind::io, "duplicate output path " + relative_path);
    }
    files_.emplace_back(std::move(relative_path), std::move(contents));
}

void OutputSet::set_manifest_field(const std::string& key, json value) { extra_[key] = std::move(value); }

json OutputSet::write(const std::filesystem::path& out_dir) const {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) fail(ErrorKind::io, out_dir.string() + ": " + ec.message());
    json inventory = json::array();
    for (const auto& [rel, contents] : files_) {
        const std::filesystem::path target = out_dir / rel;
        std::filesystem::create_directories(target.parent_path(), ec);
        if (ec) fail(ErrorKind::io, target.parent_path().string() + ": " + ec.message());
        io::write_text(target, contents);
        inventory.push_back({{"path", rel}, {"bytes", contents.size()}, {"sha256", io::sha256_hex(contents)}});
    }
    json manifest = extra_;
    manifest["software_version"] = kSoftwareVersion;
    manifest["outputs"] = inventory;
    io::write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return manifest;
}

void add_campaign_outputs(OutputSet& out, const CampaignResult& campaign, const std::string& stem) {
    out.add(stem + ".csv", propagator::trace_csv(campaign.trace));
    json meta = campaign.trace.metadata;
    meta["n_failed"] = campaign.n_failed;
    out.add(stem + "_meta.json", meta.dump(2) + "\n");
}

std::string scaling_table_csv(const HeatingSweepResult& sweep) {
    std::ostringstream csv;
    csv << "omega_rad_per_us,omega_mhz,log10_omega,tau_star_us,tau_star_stderr_us,log10_tau_star,A,A_stderr";
    if (sweep.scaling) {
        for (const analysis::ScalingFit& f : sweep.scaling->fits) csv << ",model_" << analysis::to_string(f.model) << "_us";
    }
    csv << '\n';
    for (const analysis::HeatingPoint& p : sweep.curve.points) {
        const double tau = p.fit.tau();
        csv << io::format_double(p.omega) << ',' << io::format_double(p.omega / kTwoPi) << ','
            << io::format_double(std::log10(p.omega)) << ',' << io::format_double(tau) << ','
            << io::format_double(p.fit.tau_stderr()) << ',' << io::format_double(std::log10(tau)) << ','
            << io::format_double(p.fit.amplitude()) << ',' << io::format_double(p.fit.param_stderr.at("A"));
        if (sweep.scaling) {
            for (const analysis::ScalingFit& f : sweep.scaling->fits) csv << ',' << io::format_double(f.predict(p.omega));
        }
        csv << '\n';
    }
    return csv.str();
}

void add_sweep_outputs(OutputSet& out, const HeatingSweepResult& sweep) {
    json fits = json::array();
    json campaigns = json::array();
    for (std::size_t k = 0; k < sweep.points.size(); ++k) {
        const SweepPoint& p = sweep.points[k];
        const std::string stem = "traces/omega_" + std::to_string(k);
        add_campaign_outputs(out, p.campaign, stem);
        if (p.analyzed.size() != p.campaign.trace.size()) {
            out.add(stem + "_rolling.csv", propagator::trace_csv(p.analyzed));
        }
        json per = {{"omega_rad_per_us", p.campaign.omega}, {"trace", stem + ".csv"}, {"fits", json::array()}};
        for (std::size_t m = 0; m < p.fits.size(); ++m) {
            if (p.fit_errors[m].empty()) {
                per["fits"].push_back(p.fits[m].to_json());
            } else {
                per["fits"].push_back({{"model", std::string(analysis::to_string(p.fits[m].model))}, {"error", p.fit_errors[m]}});
            }
        }
        fits.push_back(per);
        json cm = p.campaign.manifest();
        cm.erase("wall_seconds");
        campaigns.push_back(cm);
    }
    out.add("fits.json", fits.dump(2) + "\n");
    out.add("heating_curve.json", sweep.curve.to_json().dump(2) + "\n");
    json scaling = sweep.scaling ? sweep.scaling->to_json() : json{{"error", sweep.scaling_error}};
    out.add("scaling.json", scaling.dump(2) + "\n");
    out.add("scaling_table.csv", scaling_table_csv(sweep));
    if (sweep.plateau) out.add("plateau.json", sweep.plateau->to_json().dump(2) + "\n");
    out.add("campaigns.json", campaigns.dump(2) + "\n");
}

}  // namespace prethermal::harness
