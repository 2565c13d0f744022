#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>

#include "prethermal/error.hpp"
#include "prethermal/harness.hpp"
#include "prethermal/io.hpp"
#include "prethermal/rng.hpp"

using namespace prethermal;
using namespace prethermal::harness;
using nlohmann::json;

namespace {

json small_config() {
    return json::parse(R"({
      "ensemble": {"n_spins": 4, "density_ppm": 20.0, "geometry": "central_spin_sphere"},
      "hamiltonian": {"omega_rabi_mhz": 0.0, "onsite_width_mhz": 0.5},
      "plan": {"total_time_us": 4.0, "dd_tau_us": 0.25, "sampling": {"kind": "uniform", "interval_us": 0.5}},
      "campaign": {"n_realizations": 6, "base_seed": 99, "workers": 1}
    })");
}

std::filesystem::path temp_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("prethermal_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("config parsing is strict") {
    const ExperimentConfig c = ExperimentConfig::from_json(small_config());
    CHECK(c.ensemble.n_spins == 4);
    CHECK(c.plan.dd_tau_us == 0.25);
    CHECK(ExperimentConfig::from_json(c.to_json()).to_json() == c.to_json());

    json typo = small_config();
    typo["plan"]["dd_tua_us"] = 0.5;
    try {
        ExperimentConfig::from_json(typo);
        FAIL("expected a config error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
        CHECK(std::string(e.what()).find("dd_tua_us") != std::string::npos);
    }
    json bad = small_config();
    bad["campaign"]["n_realizations"] = 0;
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad), Error);
    bad = small_config();
    bad["ensemble"]["n_spins"] = 30;
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad), Error);
    bad = small_config();
    bad["drive"] = {{"kind", "sine"}};
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad), Error);
    bad = small_config();
    bad["ensemble"]["geometry"] = "cube";
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad), Error);
}

TEST_CASE("frequencies are given in MHz") {
    json doc = small_config();
    doc["hamiltonian"]["omega_rabi_mhz"] = 0.05;
    doc["drive"] = {{"kind", "sine"}, {"omega_list_mhz", {0.2}}};
    const ExperimentConfig c = ExperimentConfig::from_json(doc);
    const drive::DriveWaveform w = resolve_waveform(c, 2.0 * std::numbers::pi * 0.2);
    CHECK(w.amplitude == doctest::Approx(2.0 * std::numbers::pi * 0.05));
    CHECK(resolve_plan(c, w.omega).observed_site == std::optional<std::size_t>(0));
}

TEST_CASE("a one-realization campaign equals that realization") {
    json doc = small_config();
    doc["campaign"]["n_realizations"] = 1;
    const ExperimentConfig c = ExperimentConfig::from_json(doc);
    const CampaignResult r = run_campaign(c);
    const propagator::DrivenResult single = run_realization(c, 0.0, 0);
    CHECK(r.trace.values == single.trace.values);
    CHECK(r.trace.stderr_values.empty());
    CHECK(r.realizations.at(0).seed == stable_hash(99, 0));
}

TEST_CASE("worker count does not change the averaged trace") {
    json doc = small_config();
    const CampaignResult one = run_campaign(ExperimentConfig::from_json(doc));
    doc["campaign"]["workers"] = 3;
    const CampaignResult three = run_campaign(ExperimentConfig::from_json(doc));
    CHECK(one.trace.values == three.trace.values);
    CHECK(one.trace.stderr_values == three.trace.stderr_values);
    CHECK(propagator::trace_csv(one.trace) == propagator::trace_csv(three.trace));
    ::setenv("PRETHERMAL_WORKERS", "2", 1);
    CHECK(effective_workers(ExperimentConfig::from_json(doc).campaign) == 2);
    const CampaignResult env = run_campaign(ExperimentConfig::from_json(doc));
    ::unsetenv("PRETHERMAL_WORKERS");
    CHECK(env.trace.values == one.trace.values);
}

TEST_CASE("central spin observable and DD T2 fit") {
    json doc = small_config();
    doc["plan"]["total_time_us"] = 40.0;
    doc["plan"]["sampling"]["interval_us"] = 1.0;
    doc["ensemble"]["density_ppm"] = 5.0;
    doc["campaign"]["n_realizations"] = 20;
    const DdT2Result r = run_dd_t2(ExperimentConfig::from_json(doc));
    CHECK(r.campaign.trace.metadata["observable"] == "central_spin");
    CHECK(r.campaign.trace.values.front() == doctest::Approx(1.0));
    CHECK(r.fit.tau() > 0.0);
    CHECK(r.fit.model == analysis::DecayModel::plain_exp);
}

TEST_CASE("failures above 10 percent abort the campaign") {
    json doc = small_config();
    doc["ensemble"]["density_ppm"] = 1e6;  // the box edge is shorter than the cutoff
    doc["ensemble"]["geometry"] = "uniform_box";
    try {
        run_campaign(ExperimentConfig::from_json(doc));
        FAIL("expected campaign_aborted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::campaign_aborted);
    }
}

TEST_CASE("T2 table inversion") {
    std::vector<CalibrationPoint> grid;
    for (double ppm : {0.35, 0.5, 0.7, 1.0, 1.4}) grid.push_back({ppm, 4.76 / ppm, 0.1});
    const CalibrationResult at = invert_t2_table(4.76 / 0.7, 0.0, grid);
    CHECK(at.density_ppm == doctest::Approx(0.7).epsilon(1e-12));
    const CalibrationResult mid = invert_t2_table(4.76 / 0.6, 0.8, grid);
    CHECK(mid.density_ppm == doctest::Approx(0.6).epsilon(1e-9));  // exact for a power law
    CHECK(mid.density_stderr_ppm == doctest::Approx(0.6 * 0.8 / (4.76 / 0.6)).epsilon(1e-9));
    CHECK_THROWS_AS(invert_t2_table(50.0, 0.1, grid), Error);
    grid[3].t2_us = 20.0;
    try {
        invert_t2_table(6.0, 0.1, grid);
        FAIL("expected calibration_ambiguous");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::calibration_ambiguous);
    }
}

TEST_CASE("outputs carry a digest manifest and reproduce") {
    const ExperimentConfig c = ExperimentConfig::from_json(small_config());
    auto emit = [&](const std::filesystem::path& dir) {
        OutputSet out;
        out.set_manifest_field("config", c.to_json());
        add_campaign_outputs(out, run_campaign(c), "trace");
        return out.write(dir);
    };
    const json a = emit(temp_dir("a"));
    const json b = emit(temp_dir("b"));
    CHECK(a["outputs"] == b["outputs"]);
    REQUIRE(a["outputs"].size() == 2);
    const std::string csv = io::read_text(temp_dir("a").parent_path() / "prethermal_test_b" / "trace.csv");
    CHECK(a["outputs"][0]["sha256"] == io::sha256_hex(csv));

    OutputSet empty;
    const auto dir = temp_dir("empty");
    const json m = empty.write(dir);
    CHECK(m["outputs"].empty());
    CHECK(std::filesystem::exists(dir / "manifest.json"));
    OutputSet nested;
    nested.add("traces/deep/x.csv", "1\n");
    CHECK(nested.write(dir)["outputs"][0]["path"] == "traces/deep/x.csv");
    CHECK(io::read_text(dir / "traces" / "deep" / "x.csv") == "1\n");
    CHECK_THROWS_AS(empty.write("/proc/forbidden/dir"), Error);
}

TEST_CASE("io helpers") {
    CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(io::round_significant(0.123456789123, 4) == 0.1235);
    CHECK(std::stod(io::format_double(0.1)) == 0.1);
    CHECK_THROWS_AS(io::read_text("/nonexistent/file"), Error);
}
