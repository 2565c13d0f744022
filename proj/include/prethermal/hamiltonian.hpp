#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "prethermal/ensemble.hpp"

/// Many-body operators on N spin-1/2 sites (eigenvalues of S^a are +-1/2).
///
/// Basis convention: bit i of a basis index is spin i, with 0 meaning S^z_i = +1/2.
namespace prethermal::hamiltonian {

using Complex = std::complex<double>;
using StateVector = Eigen::VectorXcd;
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;
using RealSparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

inline constexpr std::size_t kDefaultMaxSpins = 14;

/// Hermitian operator on the 2^N Hilbert space, stored as CSR.
///
/// Operators with vanishing imaginary parts keep a real copy of the matrix so
/// that products with complex vectors cost two real passes instead of one
/// complex one.
class ManyBodyOperator {
  public:
    ManyBodyOperator(std::size_t n_spins, SparseMatrix matrix);

    static ManyBodyOperator zero(std::size_t n_spins);
    /// Validates Hermiticity to 1e-12 relative.
    static ManyBodyOperator from_dense(std::size_t n_spins, const Eigen::MatrixXcd& matrix);

    std::size_t n_spins() const { return n_spins_; }
    std::size_t dimension() const { return std::size_t{1} << n_spins_; }
    const SparseMatrix& matrix() const { return matrix_; }
    bool is_real() const { return is_real_; }
    Eigen::MatrixXcd dense() const;

    /// out = H * in. `out` is resized; it must not alias `in`.
    void apply(const StateVector& in, StateVector& out) const;
    StateVector operator*(const StateVector& v) const;

    ManyBodyOperator operator+(const ManyBodyOperator& other) const;
    ManyBodyOperator scaled(double factor) const;

    double max_abs() const;
    /// max |H - H^dagger|
    double hermiticity_error() const;
    Complex trace() const;

  private:
    std::size_t n_spins_;
    SparseMatrix matrix_;
    RealSparseMatrix real_;
    bool is_real_ = false;
};

/// Normalized state vector.
class QuantumState {
  public:
    /// Throws invalid_input unless the norm is 1 within 1e-10.
    explicit QuantumState(StateVector amplitudes);

    /// Wraps propagated amplitudes without re-checking the norm. Drift is measured
    /// by callers, never corrected.
    static QuantumState unchecked(StateVector amplitudes);

    const StateVector& amplitudes() const { return amplitudes_; }
    StateVector& mutable_amplitudes() { return amplitudes_; }
    std::size_t dimension() const { return static_cast<std::size_t>(amplitudes_.size()); }
    std::size_t n_spins() const;
    double norm() const { return amplitudes_.norm(); }

  private:
    QuantumState() = default;
    StateVector amplitudes_;
};

struct HamiltonianSpec {
    ensemble::CouplingTable couplings;
    double rabi = 0.0;            ///< Omega, rad/us
    std::vector<double> onsite;   ///< h_i, rad/us; empty means all zero

    explicit HamiltonianSpec(ensemble::CouplingTable table, double omega = 0.0, std::vector<double> fields = {})
        : couplings(std::move(table)), rabi(omega), onsite(std::move(fields)) {}
};

/// -sum_{i<j} J_ij (Sz Sz - Sx Sx - Sy Sy) + Omega sum_i Sx_i. On-site fields are not included.
ManyBodyOperator build_h0(const HamiltonianSpec& spec, std::size_t max_spins = kDefaultMaxSpins);
/// sum_i h_i Sz_i
ManyBodyOperator add_onsite(std::span<const double> fields, std::size_t max_spins = kDefaultMaxSpins);
/// build_h0 plus the spec's on-site term.
ManyBodyOperator build_hamiltonian(const HamiltonianSpec& spec, std::size_t max_spins = kDefaultMaxSpins);

/// i.i.d. Gaussian fields with mean 0 and standard deviation `width`.
std::vector<double> sample_onsite_fields(std::size_t n_spins, double width, std::uint64_t seed);

ManyBodyOperator total_spin_x(std::size_t n_spins);
ManyBodyOperator total_spin_z(std::size_t n_spins);
ManyBodyOperator spin_x(std::size_t n_spins, std::size_t site);

/// Uniform superposition, the +x product state.
QuantumState initial_x_state(std::size_t n_spins, std::size_t max_spins = kDefaultMaxSpins);
/// Computational basis state |index>.
QuantumState basis_state(std::size_t n_spins, std::uint64_t index);

/// out = (sum_i Sx_i) in, by bit flips.
void apply_total_sx(const StateVector& in, StateVector& out);
double sx_expectation(const StateVector& psi, std::size_t site);
/// (2/N) <sum_i Sx_i>, equal to 1 for initial_x_state.
double polarization(const StateVector& psi);
/// 2 <Sx_site>
double site_polarization(const StateVector& psi, std::size_t site);
double energy(const ManyBodyOperator& h, const StateVector& psi);

struct Eigensystem {
    Eigen::VectorXd values;     ///< ascending
    Eigen::MatrixXcd vectors;   ///< columns are eigenvectors
};

/// Full diagonalization; throws capacity above `max_spins`.
Eigensystem diagonalize(const ManyBodyOperator& h, std::size_t max_spins = 12);

struct SpectralData {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd weights;  ///< |<i| Sx_tot |j>|^2
};

SpectralData spectral_data(const ManyBodyOperator& h, std::size_t max_spins = 12);

/// S(nu) = sum_ij w_ij G_sigma(E_i - E_j - nu) with a unit-area Gaussian G_sigma.
std::vector<double> spectral_function(const SpectralData& data, double sigma, std::span<const double> nu);
std::vector<double> spectral_function(const ManyBodyOperator& h, double sigma, std::span<const double> nu);

/// Canonical energy Tr[H e^{-beta H}] / Tr[e^{-beta H}] from the spectrum.
double thermal_energy(const Eigen::VectorXd& eigenvalues, double beta);

inline constexpr double kMaxBeta = 1e6;  ///< us

/// Bisection for the beta whose canonical energy equals the target.
double solve_beta(const Eigen::VectorXd& eigenvalues, double target_energy, double beta_limit = kMaxBeta,
                  double relative_tolerance = 1e-10);

struct PlateauPrediction {
    double energy = 0.0;   ///< <psi0|H0|psi0>
    double beta = 0.0;     ///< us
    double plateau = 0.0;  ///< Tr[P_x e^{-beta H0}] / Z with P_x = (2/N) sum Sx_i
};

/// Thermal plateau at the initial state's energy density. Positive beta is
/// below the spectrum mean. Targets at the spectral edge throw no_solution;
/// |beta| beyond kMaxBeta throws unbounded_beta.
PlateauPrediction prethermal_plateau(const ManyBodyOperator& h0, const QuantumState& psi0);

}  // namespace prethermal::hamiltonian
