#pragma once

// Lanczos exponential, included from propagator.hpp.

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "prethermal/error.hpp"

namespace prethermal::propagator {

namespace detail {

/// One Lanczos step for exp(-i H h) w; nullopt if the error bound is not met
/// within options.max_dimension basis vectors.
template <class Apply>
std::optional<StateVector> krylov_step(const Apply& apply, const StateVector& w, double h,
                                       const KrylovOptions& options) {
    using hamiltonian::Complex;
    const double w_norm = w.norm();
    if (w_norm == 0.0) return w;

    std::vector<StateVector> basis;
    basis.reserve(static_cast<std::size_t>(options.max_dimension) + 1);
    basis.push_back(w / w_norm);
    std::vector<double> alpha;
    std::vector<double> beta;
    StateVector q;

    for (int j = 0; j < options.max_dimension; ++j) {
        apply(basis.back(), q);
        const double a = basis.back().dot(q).real();
        alpha.push_back(a);
        q -= a * basis.back();
        if (j > 0) q -= beta.back() * basis[basis.size() - 2];
        for (const StateVector& b : basis) q -= b.dot(q) * b;  // full reorthogonalization
        const double b_next = q.norm();

        const int m = j + 1;
        Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
        Eigen::VectorXd sub = m > 1 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(beta.data(), m - 1)) : Eigen::VectorXd();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
        tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
        const Eigen::MatrixXd& qv = tri.eigenvectors();
        // y = Q exp(-i Lambda h) Q^T e1
        Eigen::VectorXcd phased(m);
        for (int k = 0; k < m; ++k) {
            phased[k] = std::exp(Complex(0.0, -tri.eigenvalues()[k] * h)) * qv(0, k);
        }
        const Eigen::VectorXcd coeff = qv.cast<Complex>() * phased;

        double scale = 1.0;
        for (double x : alpha) scale = std::max(scale, std::abs(x));
        const bool breakdown = b_next <= 1e-13 * scale;
        const double error_estimate = w_norm * b_next * std::abs(coeff[m - 1]);
        if (breakdown || error_estimate <= options.tolerance) {
            StateVector out = StateVector::Zero(w.size());
            for (int k = 0; k < m; ++k) out += coeff[k] * basis[static_cast<std::size_t>(k)];
            return StateVector(out * w_norm);
        }
        beta.push_back(b_next);
        basis.push_back(q / b_next);
    }
    return std::nullopt;
}

}  // namespace detail

template <class Apply>
StateVector krylov_expm(const Apply& apply, const StateVector& v, double t, const KrylovOptions& options) {
    if (t == 0.0) return v;
    StateVector current = v;
    double remaining = t;
    double step = t;
    int halvings = 0;
    while (remaining > 0.0) {
        const bool last = step >= remaining;
        const double h = last ? remaining : step;
        auto next = detail::krylov_step(apply, current, h, options);
        if (!next) {
            if (++halvings > options.max_halvings) {
                fail(ErrorKind::krylov_failure, "Krylov exponential did not converge within " +
                                                    std::to_string(options.max_dimension) +
                                                    " iterations after step reduction to " + std::to_string(h / 2));
            }
            step = 0.5 * h;
            continue;
        }
        current = std::move(*next);
        remaining = last ? 0.0 : remaining - h;
    }
    return current;
}

}  // namespace prethermal::propagator
