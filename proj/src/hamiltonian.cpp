#include "prethermal/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "prethermal/error.hpp"
#include "prethermal/io.hpp"
#include "prethermal/rng.hpp"

namespace prethermal::hamiltonian {

namespace {

using Triplet = Eigen::Triplet<Complex>;

void check_capacity(std::size_t n_spins, std::size_t max_spins) {
    if (n_spins < 1) fail(ErrorKind::invalid_input, "operators need at least one spin");
    if (n_spins > max_spins) {
        fail(ErrorKind::capacity, std::to_string(n_spins) + " spins exceed the Hilbert-space limit of " +
                                      std::to_string(max_spins));
    }
}

inline double sz_value(std::uint64_t state, std::size_t site) { return ((state >> site) & 1U) ? -0.5 : 0.5; }

SparseMatrix from_triplets(std::size_t dim, const std::vector<Triplet>& triplets) {
    SparseMatrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// ManyBodyOperator

ManyBodyOperator::ManyBodyOperator(std::size_t n_spins, SparseMatrix matrix)
    : n_spins_(n_spins), matrix_(std::move(matrix)) {
    const auto dim = static_cast<Eigen::Index>(dimension());
    if (matrix_.rows() != dim || matrix_.cols() != dim) {
        fail(ErrorKind::invalid_input, "operator dimension does not match 2^" + std::to_string(n_spins));
    }
    matrix_.makeCompressed();
    is_real_ = true;
    for (Eigen::Index k = 0; k < matrix_.nonZeros(); ++k) {
        if (matrix_.valuePtr()[k].imag() != 0.0) {
            is_real_ = false;
            break;
        }
    }
    if (is_real_) {
        real_ = matrix_.real();
        real_.makeCompressed();
    }
}

ManyBodyOperator ManyBodyOperator::zero(std::size_t n_spins) {
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n_spins);
    return ManyBodyOperator(n_spins, SparseMatrix(dim, dim));
}

ManyBodyOperator ManyBodyOperator::from_dense(std::size_t n_spins, const Eigen::MatrixXcd& matrix) {
    const double scale = matrix.cwiseAbs().maxCoeff();
    const double asym = (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(scale, 1e-300)) {
        fail(ErrorKind::invalid_input, "matrix is not Hermitian (max |H - H^dagger| = " + io::format_double(asym) + ")");
    }
    return ManyBodyOperator(n_spins, matrix.sparseView(0.0, 0.0));
}

Eigen::MatrixXcd ManyBodyOperator::dense() const { return Eigen::MatrixXcd(matrix_); }

void ManyBodyOperator::apply(const StateVector& in, StateVector& out) const {
    const Eigen::Index dim = matrix_.rows();
    out.resize(dim);
    if (is_real_) {
        const int* outer = real_.outerIndexPtr();
        const int* inner = real_.innerIndexPtr();
        const double* values = real_.valuePtr();
        for (Eigen::Index row = 0; row < dim; ++row) {
            double re = 0.0;
            double im = 0.0;
            for (int k = outer[row]; k < outer[row + 1]; ++k) {
                const Complex& x = in[inner[k]];
                re += values[k] * x.real();
                im += values[k] * x.imag();
            }
            out[row] = Complex(re, im);
        }
    } else {
        out.noalias() = matrix_ * in;
    }
}

StateVector ManyBodyOperator::operator*(const StateVector& v) const {
    StateVector out;
    apply(v, out);
    return out;
}

ManyBodyOperator ManyBodyOperator::operator+(const ManyBodyOperator& other) const {
    if (other.n_spins_ != n_spins_) fail(ErrorKind::invalid_input, "cannot add operators on different spin counts");
    return ManyBodyOperator(n_spins_, SparseMatrix(matrix_ + other.matrix_));
}

ManyBodyOperator ManyBodyOperator::scaled(double factor) const {
    return ManyBodyOperator(n_spins_, SparseMatrix(matrix_ * Complex(factor, 0.0)));
}

double ManyBodyOperator::max_abs() const {
    double m = 0.0;
    for (Eigen::Index k = 0; k < matrix_.nonZeros(); ++k) m = std::max(m, std::abs(matrix_.valuePtr()[k]));
    return m;
}

double ManyBodyOperator::hermiticity_error() const {
    const SparseMatrix diff = matrix_ - SparseMatrix(matrix_.adjoint());
    double m = 0.0;
    for (Eigen::Index k = 0; k < diff.nonZeros(); ++k) m = std::max(m, std::abs(diff.valuePtr()[k]));
    return m;
}

Complex ManyBodyOperator::trace() const {
    Complex t = 0.0;
    for (Eigen::Index k = 0; k < matrix_.rows(); ++k) t += matrix_.coeff(k, k);
    return t;
}

// ---------------------------------------------------------------------------
// QuantumState

QuantumState::QuantumState(StateVector amplitudes) : amplitudes_(std::move(amplitudes)) {
    const auto dim = static_cast<std::size_t>(amplitudes_.size());
    if (dim == 0 || (dim & (dim - 1)) != 0) fail(ErrorKind::invalid_input, "state dimension must be a power of two");
    if (!(std::abs(amplitudes_.norm() - 1.0) <= 1e-10)) {
        fail(ErrorKind::invalid_input, "state norm " + io::format_double(amplitudes_.norm()) + " is not 1");
    }
}

QuantumState QuantumState::unchecked(StateVector amplitudes) {
    QuantumState s;
    s.amplitudes_ = std::move(amplitudes);
    return s;
}

std::size_t QuantumState::n_spins() const {
    std::size_t n = 0;
    while ((std::size_t{1} << n) < dimension()) ++n;
    return n;
}

// ---------------------------------------------------------------------------
// Builders

ManyBodyOperator build_h0(const HamiltonianSpec& spec, std::size_t max_spins) {
    const std::size_t n = spec.couplings.n_spins();
    check_capacity(n, max_spins);
    if (!(spec.rabi >= 0.0)) fail(ErrorKind::invalid_input, "Rabi frequency must be nonnegative");

    struct Pair {
        std::size_t i;
        std::size_t j;
        std::uint64_t mask;
        double coupling;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double c = spec.couplings(i, j);
            if (c != 0.0) pairs.push_back({i, j, (std::uint64_t{1} << i) | (std::uint64_t{1} << j), c});
        }
    }

    const std::uint64_t dim = std::uint64_t{1} << n;
    std::vector<Triplet> triplets;
    triplets.reserve(dim * (1 + pairs.size() / 2 + (spec.rabi != 0.0 ? n : 0)));
    for (std::uint64_t s = 0; s < dim; ++s) {
        double diag = 0.0;
        for (const Pair& p : pairs) {
            const double zz = sz_value(s, p.i) * sz_value(s, p.j);
            diag -= p.coupling * zz;
            // -J (-(SxSx + SySy)) = (J/2)(S+S- + S-S+): connects states whose bits i, j differ.
            if (zz < 0.0) {
                triplets.emplace_back(static_cast<Eigen::Index>(s ^ p.mask), static_cast<Eigen::Index>(s),
                                      Complex(0.5 * p.coupling, 0.0));
            }
        }
        if (diag != 0.0) triplets.emplace_back(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s), diag);
        if (spec.rabi != 0.0) {
            for (std::size_t i = 0; i < n; ++i) {
                triplets.emplace_back(static_cast<Eigen::Index>(s ^ (std::uint64_t{1} << i)),
                                      static_cast<Eigen::Index>(s), Complex(0.5 * spec.rabi, 0.0));
            }
        }
    }
    return ManyBodyOperator(n, from_triplets(dim, triplets));
}

ManyBodyOperator add_onsite(std::span<const double> fields, std::size_t max_spins) {
    const std::size_t n = fields.size();
    check_capacity(n, max_spins);
    const std::uint64_t dim = std::uint64_t{1} << n;
    std::vector<Triplet> triplets;
    triplets.reserve(dim);
    for (std::uint64_t s = 0; s < dim; ++s) {
        double diag = 0.0;
        for (std::size_t i = 0; i < n; ++i) diag += fields[i] * sz_value(s, i);
        if (diag != 0.0) triplets.emplace_back(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s), diag);
    }
    return ManyBodyOperator(n, from_triplets(dim, triplets));
}

ManyBodyOperator build_hamiltonian(const HamiltonianSpec& spec, std::size_t max_spins) {
    ManyBodyOperator h = build_h0(spec, max_spins);
    if (spec.onsite.empty()) return h;
    if (spec.onsite.size() != spec.couplings.n_spins()) {
        fail(ErrorKind::invalid_input, "on-site field count " + std::to_string(spec.onsite.size()) +
                                           " does not match " + std::to_string(spec.couplings.n_spins()) + " spins");
    }
    return h + add_onsite(spec.onsite, max_spins);
}

std::vector<double> sample_onsite_fields(std::size_t n_spins, double width, std::uint64_t seed) {
    if (!(width >= 0.0)) fail(ErrorKind::invalid_input, "on-site width must be nonnegative");
    std::vector<double> h(n_spins, 0.0);
    if (width == 0.0) return h;
    Rng rng(seed);
    for (double& v : h) v = rng.normal(0.0, width);
    return h;
}

ManyBodyOperator total_spin_x(std::size_t n_spins) {
    check_capacity(n_spins, 62);
    const std::uint64_t dim = std::uint64_t{1} << n_spins;
    std::vector<Triplet> triplets;
    triplets.reserve(dim * n_spins);
    for (std::uint64_t s = 0; s < dim; ++s) {
        for (std::size_t i = 0; i < n_spins; ++i) {
            triplets.emplace_back(static_cast<Eigen::Index>(s ^ (std::uint64_t{1} << i)), static_cast<Eigen::Index>(s),
                                  Complex(0.5, 0.0));
        }
    }
    return ManyBodyOperator(n_spins, from_triplets(dim, triplets));
}

ManyBodyOperator total_spin_z(std::size_t n_spins) { return add_onsite(std::vector<double>(n_spins, 1.0), 62); }

ManyBodyOperator spin_x(std::size_t n_spins, std::size_t site) {
    check_capacity(n_spins, 62);
    if (site >= n_spins) fail(ErrorKind::invalid_input, "site index out of range");
    const std::uint64_t dim = std::uint64_t{1} << n_spins;
    std::vector<Triplet> triplets;
    triplets.reserve(dim);
    for (std::uint64_t s = 0; s < dim; ++s) {
        triplets.emplace_back(static_cast<Eigen::Index>(s ^ (std::uint64_t{1} << site)), static_cast<Eigen::Index>(s),
                              Complex(0.5, 0.0));
    }
    return ManyBodyOperator(n_spins, from_triplets(dim, triplets));
}

QuantumState initial_x_state(std::size_t n_spins, std::size_t max_spins) {
    check_capacity(n_spins, max_spins);
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n_spins);
    return QuantumState(StateVector::Constant(dim, Complex(1.0 / std::sqrt(static_cast<double>(dim)), 0.0)));
}

QuantumState basis_state(std::size_t n_spins, std::uint64_t index) {
    check_capacity(n_spins, kDefaultMaxSpins);
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n_spins);
    if (index >= static_cast<std::uint64_t>(dim)) fail(ErrorKind::invalid_input, "basis index out of range");
    StateVector v = StateVector::Zero(dim);
    v[static_cast<Eigen::Index>(index)] = 1.0;
    return QuantumState(std::move(v));
}

// ---------------------------------------------------------------------------
// Observables

void apply_total_sx(const StateVector& in, StateVector& out) {
    const auto dim = static_cast<std::uint64_t>(in.size());
    out.setZero(in.size());
    for (std::uint64_t bit = 1; bit < dim; bit <<= 1) {
        for (std::uint64_t s = 0; s < dim; ++s) out[static_cast<Eigen::Index>(s)] += 0.5 * in[static_cast<Eigen::Index>(s ^ bit)];
    }
}

double sx_expectation(const StateVector& psi, std::size_t site) {
    const auto dim = static_cast<std::uint64_t>(psi.size());
    const std::uint64_t bit = std::uint64_t{1} << site;
    if (bit >= dim) fail(ErrorKind::invalid_input, "site index out of range");
    double acc = 0.0;
    for (std::uint64_t s = 0; s < dim; ++s) {
        acc += (std::conj(psi[static_cast<Eigen::Index>(s)]) * psi[static_cast<Eigen::Index>(s ^ bit)]).real();
    }
    return 0.5 * acc;
}

double site_polarization(const StateVector& psi, std::size_t site) { return 2.0 * sx_expectation(psi, site); }

double polarization(const StateVector& psi) {
    const auto dim = static_cast<std::uint64_t>(psi.size());
    std::size_t n = 0;
    double total = 0.0;
    for (std::uint64_t bit = 1; bit < dim; bit <<= 1, ++n) total += sx_expectation(psi, n);
    return n == 0 ? 0.0 : 2.0 * total / static_cast<double>(n);
}

double energy(const ManyBodyOperator& h, const StateVector& psi) { return psi.dot(h * psi).real(); }

// ---------------------------------------------------------------------------
// Spectra

Eigensystem diagonalize(const ManyBodyOperator& h, std::size_t max_spins) {
    check_capacity(h.n_spins(), max_spins);
    Eigensystem out;
    if (h.is_real()) {
        const Eigen::MatrixXd dense = Eigen::MatrixXd(h.matrix().real());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
        out.values = solver.eigenvalues();
        out.vectors = solver.eigenvectors().cast<Complex>();
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h.dense());
        out.values = solver.eigenvalues();
        out.vectors = solver.eigenvectors();
    }
    return out;
}

SpectralData spectral_data(const ManyBodyOperator& h, std::size_t max_spins) {
    const Eigensystem eig = diagonalize(h, max_spins);
    const Eigen::MatrixXcd sx_v = total_spin_x(h.n_spins()).matrix() * eig.vectors;
    const Eigen::MatrixXcd m = eig.vectors.adjoint() * sx_v;
    SpectralData out;
    out.eigenvalues = eig.values;
    out.weights = m.cwiseAbs2();
    return out;
}

std::vector<double> spectral_function(const SpectralData& data, double sigma, std::span<const double> nu) {
    if (!(sigma > 0.0)) fail(ErrorKind::invalid_input, "broadening must be positive");
    std::vector<double> out(nu.size(), 0.0);
    if (nu.empty()) return out;
    if (!std::is_sorted(nu.begin(), nu.end())) fail(ErrorKind::invalid_input, "frequency grid must be ascending");

    const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
    const double reach = 10.0 * sigma;
    const Eigen::Index dim = data.eigenvalues.size();
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            const double w = data.weights(i, j);
            if (w == 0.0) continue;
            const double center = data.eigenvalues[i] - data.eigenvalues[j];
            auto lo = std::lower_bound(nu.begin(), nu.end(), center - reach);
            auto hi = std::upper_bound(lo, nu.end(), center + reach);
            for (auto it = lo; it != hi; ++it) {
                const double x = (center - *it) / sigma;
                out[static_cast<std::size_t>(it - nu.begin())] += w * norm * std::exp(-0.5 * x * x);
            }
        }
    }
    return out;
}

std::vector<double> spectral_function(const ManyBodyOperator& h, double sigma, std::span<const double> nu) {
    return spectral_function(spectral_data(h), sigma, nu);
}

double thermal_energy(const Eigen::VectorXd& eigenvalues, double beta) {
    // shift by the dominant edge so the largest Boltzmann factor is exactly 1
    const double ref = beta >= 0.0 ? eigenvalues.minCoeff() : eigenvalues.maxCoeff();
    double z = 0.0;
    double e = 0.0;
    for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
        const double w = std::exp(-beta * (eigenvalues[k] - ref));
        z += w;
        e += w * eigenvalues[k];
    }
    return e / z;
}

double solve_beta(const Eigen::VectorXd& eigenvalues, double target_energy, double beta_limit,
                  double relative_tolerance) {
    const double e_min = eigenvalues.minCoeff();
    const double e_max = eigenvalues.maxCoeff();
    const double scale = std::max({std::abs(e_min), std::abs(e_max), 1e-300});
    const double edge_tol = 1e-12 * scale;
    if (!(target_energy > e_min + edge_tol && target_energy < e_max - edge_tol)) {
        fail(ErrorKind::no_solution, "target energy " + io::format_double(target_energy) +
                                         " is not inside the spectrum interior [" + io::format_double(e_min) + ", " +
                                         io::format_double(e_max) + "]");
    }
    double lo = -beta_limit;  // thermal_energy(lo) is the high end
    double hi = beta_limit;
    if (thermal_energy(eigenvalues, lo) < target_energy || thermal_energy(eigenvalues, hi) > target_energy) {
        fail(ErrorKind::unbounded_beta, "target energy " + io::format_double(target_energy) +
                                            " needs |beta| above " + io::format_double(beta_limit) + " us");
    }
    const double tol = relative_tolerance * scale;
    double mid = 0.0;
    for (int it = 0; it < 400; ++it) {
        mid = 0.5 * (lo + hi);
        const double e = thermal_energy(eigenvalues, mid);
        if (std::abs(e - target_energy) <= tol) break;
        if (e > target_energy) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-15 * std::max(1.0, std::abs(mid))) break;
    }
    return mid;
}

PlateauPrediction prethermal_plateau(const ManyBodyOperator& h0, const QuantumState& psi0) {
    if (psi0.dimension() != h0.dimension()) fail(ErrorKind::invalid_input, "state and operator dimensions differ");
    const Eigensystem eig = diagonalize(h0);
    PlateauPrediction out;
    out.energy = energy(h0, psi0.amplitudes());
    out.beta = solve_beta(eig.values, out.energy);

    const Eigen::MatrixXcd sx_v = total_spin_x(h0.n_spins()).matrix() * eig.vectors;
    const double ref = out.beta >= 0.0 ? eig.values.minCoeff() : eig.values.maxCoeff();
    double z = 0.0;
    double acc = 0.0;
    for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
        const double w = std::exp(-out.beta * (eig.values[k] - ref));
        const double diag = eig.vectors.col(k).dot(sx_v.col(k)).real();
        z += w;
        acc += w * diag;
    }
    out.plateau = 2.0 / static_cast<double>(h0.n_spins()) * acc / z;
    return out;
}

}  // namespace prethermal::hamiltonian
