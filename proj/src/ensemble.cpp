#include "prethermal/ensemble.hpp"

#include <cmath>
#include <string>

#include "prethermal/error.hpp"
#include "prethermal/io.hpp"
#include "prethermal/rng.hpp"

namespace prethermal::ensemble {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kRetriesPerSpin = 100000;

Vec3 draw_in_ball(Rng& rng, double radius) {
    while (true) {
        Vec3 v(rng.uniform(-radius, radius), rng.uniform(-radius, radius), rng.uniform(-radius, radius));
        if (v.squaredNorm() <= radius * radius) return v;
    }
}

Vec3 draw_in_box(Rng& rng, double edge) {
    const double half = 0.5 * edge;
    return {rng.uniform(-half, half), rng.uniform(-half, half), rng.uniform(-half, half)};
}

Vec3 random_direction(Rng& rng) {
    const double z = rng.uniform(-1.0, 1.0);
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {s * std::cos(phi), s * std::sin(phi), z};
}

}  // namespace

std::string_view to_string(Geometry geometry) {
    switch (geometry) {
        case Geometry::central_spin_sphere: return "central_spin_sphere";
        case Geometry::uniform_box: return "uniform_box";
    }
    return "unknown";
}

Geometry geometry_from_string(std::string_view name) {
    if (name == "central_spin_sphere") return Geometry::central_spin_sphere;
    if (name == "uniform_box") return Geometry::uniform_box;
    fail(ErrorKind::invalid_input, "unknown geometry '" + std::string(name) + "'");
}

double DensitySpec::density() const { return ppm_to_density(ppm, carbon_number_density); }

CouplingTable::CouplingTable(std::size_t n_spins)
    : n_spins_(n_spins), packed_(n_spins > 1 ? n_spins * (n_spins - 1) / 2 : 0, 0.0) {}

std::size_t CouplingTable::index(std::size_t i, std::size_t j) const {
    if (i == j || i >= n_spins_ || j >= n_spins_) {
        fail(ErrorKind::invalid_input,
             "coupling index (" + std::to_string(i) + ", " + std::to_string(j) + ") out of range");
    }
    if (i > j) std::swap(i, j);
    // row i of the strict upper triangle starts after i*(2n - i - 1)/2 entries
    return i * (2 * n_spins_ - i - 1) / 2 + (j - i - 1);
}

double CouplingTable::operator()(std::size_t i, std::size_t j) const { return packed_[index(i, j)]; }

void CouplingTable::set(std::size_t i, std::size_t j, double value) { packed_[index(i, j)] = value; }

double CouplingTable::max_abs() const {
    double m = 0.0;
    for (double v : packed_) m = std::max(m, std::abs(v));
    return m;
}

CouplingTable CouplingTable::from_ensemble(const SpinEnsemble& ensemble, double r_cut) {
    CouplingTable table(ensemble.size());
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        for (std::size_t j = i + 1; j < ensemble.size(); ++j) {
            table.set(i, j, pair_coupling(ensemble.positions[i], ensemble.positions[j], r_cut));
        }
    }
    return table;
}

double angular_factor(const Vec3& direction) {
    const double norm = direction.norm();
    if (!(std::abs(norm - 1.0) <= 1e-9)) {
        fail(ErrorKind::invalid_input, "angular_factor needs a unit vector, got norm " + io::format_double(norm));
    }
    return 3.0 * direction.z() * direction.z() - 1.0;
}

double pair_coupling(const Vec3& pos_i, const Vec3& pos_j, double r_cut) {
    const Vec3 separation = pos_j - pos_i;
    const double r = separation.norm();
    if (!(r >= r_cut)) {
        fail(ErrorKind::degenerate_pair,
             "pair separation " + io::format_double(r) + " nm is below the cutoff " + io::format_double(r_cut));
    }
    const double nz = separation.z() / r;
    return kJ0 * (3.0 * nz * nz - 1.0) / (r * r * r);
}

double ppm_to_density(double ppm, double carbon_number_density) {
    if (!(ppm >= 0.0)) fail(ErrorKind::invalid_input, "ppm must be nonnegative");
    if (!(carbon_number_density > 0.0)) fail(ErrorKind::invalid_input, "carbon number density must be positive");
    return ppm * 1e-6 * carbon_number_density;
}

double local_energy_scale(double density) {
    if (!(density >= 0.0)) fail(ErrorKind::invalid_input, "density must be nonnegative");
    return std::sqrt(16.0 * kPi / 15.0) * kJ0 * density;
}

double cluster_radius(std::size_t n_spins, double density) {
    return std::cbrt(3.0 * static_cast<double>(n_spins - 1) / (4.0 * kPi * density));
}

double box_edge(std::size_t n_spins, double density) { return std::cbrt(static_cast<double>(n_spins) / density); }

SpinEnsemble sample_ensemble(std::size_t n_spins, double density, Geometry geometry, std::uint64_t seed,
                             double r_cut) {
    if (n_spins < 1) fail(ErrorKind::invalid_input, "an ensemble needs at least one spin");
    if (!(density > 0.0)) fail(ErrorKind::invalid_input, "density must be positive");

    SpinEnsemble out;
    out.density = density;
    out.seed = seed;
    out.geometry = geometry;
    out.positions.reserve(n_spins);

    Rng rng(seed);
    std::size_t start = 0;
    if (geometry == Geometry::central_spin_sphere || n_spins == 1) {
        out.positions.emplace_back(Vec3::Zero());
        start = 1;
    }
    const double radius = cluster_radius(n_spins, density);
    const double edge = box_edge(n_spins, density);
    const double r_cut2 = r_cut * r_cut;

    for (std::size_t k = start; k < n_spins; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < kRetriesPerSpin && !placed; ++attempt) {
            const Vec3 candidate =
                geometry == Geometry::central_spin_sphere ? draw_in_ball(rng, radius) : draw_in_box(rng, edge);
            bool clear = true;
            for (const Vec3& p : out.positions) {
                if ((candidate - p).squaredNorm() < r_cut2) {
                    clear = false;
                    break;
                }
            }
            if (clear) {
                out.positions.push_back(candidate);
                placed = true;
            }
        }
        if (!placed) {
            fail(ErrorKind::density_too_high, "could not place spin " + std::to_string(k) + " after " +
                                                  std::to_string(kRetriesPerSpin) + " draws at density " +
                                                  io::format_double(density) + " nm^-3");
        }
    }
    return out;
}

SpinEnsemble sample_ensemble(std::size_t n_spins, const DensitySpec& density, Geometry geometry,
                             std::uint64_t seed, double r_cut) {
    return sample_ensemble(n_spins, density.density(), geometry, seed, r_cut);
}

CouplingMoments coupling_moments(const SpinEnsemble& ensemble, std::size_t n_mc_samples, std::uint64_t seed) {
    if (n_mc_samples < 1) fail(ErrorKind::invalid_input, "n_mc_samples must be at least 1");
    if (!(ensemble.density > 0.0)) fail(ErrorKind::invalid_input, "ensemble density must be positive");

    const double r = std::cbrt(1.0 / ensemble.density);
    const double scale = kJ0 / (r * r * r);
    Rng rng(seed);
    double sum_a = 0.0;
    double sum_a2 = 0.0;
    for (std::size_t k = 0; k < n_mc_samples; ++k) {
        const double a = angular_factor(random_direction(rng));
        sum_a += a;
        sum_a2 += a * a;
    }
    const double n = static_cast<double>(n_mc_samples);
    const double mean_a2 = sum_a2 / n;

    CouplingMoments m;
    m.radius = r;
    m.mean = scale * sum_a / n;
    m.rms = scale * std::sqrt(mean_a2);
    // int_{r}^{inf} r'^{-6} r'^2 dr' = 1 / (3 r^3); the angular integral is 4 pi <A^2>
    m.radial_rms = kJ0 * std::sqrt(4.0 * kPi * mean_a2 * ensemble.density / (3.0 * r * r * r));
    return m;
}

nlohmann::json to_json(const SpinEnsemble& ensemble) {
    nlohmann::json positions = nlohmann::json::array();
    for (const Vec3& p : ensemble.positions) {
        positions.push_back({io::round_significant(p.x(), 9), io::round_significant(p.y(), 9),
                             io::round_significant(p.z(), 9)});
    }
    return {{"seed", ensemble.seed},
            {"geometry", std::string(to_string(ensemble.geometry))},
            {"density_nm3", ensemble.density},
            {"positions_nm", positions}};
}

SpinEnsemble ensemble_from_json(const nlohmann::json& doc) {
    SpinEnsemble out;
    try {
        out.seed = doc.at("seed").get<std::uint64_t>();
        out.geometry = geometry_from_string(doc.at("geometry").get<std::string>());
        out.density = doc.at("density_nm3").get<double>();
        for (const auto& p : doc.at("positions_nm")) {
            if (p.size() != 3) fail(ErrorKind::invalid_input, "positions must be 3-vectors");
            out.positions.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::invalid_input, std::string("malformed ensemble document: ") + e.what());
    }
    if (out.positions.empty()) fail(ErrorKind::invalid_input, "ensemble document has no positions");
    return out;
}

}  // namespace prethermal::ensemble
