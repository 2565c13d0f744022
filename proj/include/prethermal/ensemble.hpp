#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

#include <json.hpp>

/// Positional disorder: random spin clusters and their dipolar couplings.
///
/// Lengths are in nm, densities in nm^-3, couplings in rad/us.
namespace prethermal::ensemble {

using Vec3 = Eigen::Vector3d;

/// Dipolar constant, (2 pi) x 52 MHz nm^3 expressed in rad/us nm^3.
inline constexpr double kJ0 = 2.0 * std::numbers::pi * 52.0;
/// Minimum allowed separation (one diamond lattice constant).
inline constexpr double kCutoffRadius = 0.357;
/// Carbon atoms per nm^3 in diamond, used for ppm conversion.
inline constexpr double kCarbonNumberDensity = 176.0;

enum class Geometry { central_spin_sphere, uniform_box };

std::string_view to_string(Geometry geometry);
Geometry geometry_from_string(std::string_view name);

struct DensitySpec {
    double ppm = 0.0;
    double carbon_number_density = kCarbonNumberDensity;

    double density() const;
};

struct SpinEnsemble {
    std::vector<Vec3> positions;
    double density = 0.0;
    std::uint64_t seed = 0;
    Geometry geometry = Geometry::central_spin_sphere;

    std::size_t size() const { return positions.size(); }
};

/// Symmetric pair couplings J_ij (i != j), stored as a packed upper triangle.
class CouplingTable {
  public:
    explicit CouplingTable(std::size_t n_spins);

    std::size_t n_spins() const { return n_spins_; }
    double operator()(std::size_t i, std::size_t j) const;
    void set(std::size_t i, std::size_t j, double value);
    double max_abs() const;

    static CouplingTable from_ensemble(const SpinEnsemble& ensemble, double r_cut = kCutoffRadius);

  private:
    std::size_t index(std::size_t i, std::size_t j) const;

    std::size_t n_spins_;
    std::vector<double> packed_;
};

/// 3 n_z^2 - 1 for a unit vector; throws invalid_input if |n| deviates from 1 by more than 1e-9.
double angular_factor(const Vec3& direction);

/// J0 A(n_ij) / r_ij^3. Separations below r_cut throw degenerate_pair.
double pair_coupling(const Vec3& pos_i, const Vec3& pos_j, double r_cut = kCutoffRadius);

double ppm_to_density(double ppm, double carbon_number_density = kCarbonNumberDensity);

/// sqrt(16 pi / 15) J0 rho, the rms dipolar coupling per spin.
double local_energy_scale(double density);

/// Radius of the ball holding the n_spins - 1 surrounding spins at the given density.
double cluster_radius(std::size_t n_spins, double density);
/// Edge of the cube holding n_spins at the given density.
double box_edge(std::size_t n_spins, double density);

/**
 * Draws a cluster. central_spin_sphere puts spin 0 at the origin and the rest
 * uniformly in a ball of volume (n-1)/rho; uniform_box fills a centered cube of
 * volume n/rho. Candidates closer than r_cut to an accepted spin are redrawn;
 * exhausting the retry budget throws density_too_high.
 */
SpinEnsemble sample_ensemble(std::size_t n_spins, double density, Geometry geometry, std::uint64_t seed,
                             double r_cut = kCutoffRadius);
SpinEnsemble sample_ensemble(std::size_t n_spins, const DensitySpec& density, Geometry geometry,
                             std::uint64_t seed, double r_cut = kCutoffRadius);

struct CouplingMoments {
    double radius = 0.0;      ///< fixed radius of the angular average, rho^{-1/3}
    double mean = 0.0;        ///< <J> over directions at that radius
    double rms = 0.0;         ///< <J^2>^{1/2} over directions at that radius
    double radial_rms = 0.0;  ///< rms integrated over r >= rho^{-1/3}; tends to local_energy_scale
};

/// Monte-Carlo moments of J(r, theta) over uniformly distributed directions.
CouplingMoments coupling_moments(const SpinEnsemble& ensemble, std::size_t n_mc_samples, std::uint64_t seed);

nlohmann::json to_json(const SpinEnsemble& ensemble);
SpinEnsemble ensemble_from_json(const nlohmann::json& doc);

}  // namespace prethermal::ensemble
