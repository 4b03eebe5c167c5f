#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "eitlin/error.hpp"

namespace eitlin {

/// Disk of radius R with log-conductivity kappa inside a unit-conductivity
/// unit disk.
struct ConcentricSpec {
    double radius = 0.5;
    double kappa = 0.0;
};

namespace detail {

inline void check_concentric(const ConcentricSpec& spec) {
    require(spec.radius > 0.0 && spec.radius < 1.0, "inclusion radius must lie in (0, 1)");
    require(std::isfinite(spec.kappa), "inclusion log-conductivity must be finite");
}

} // namespace detail

/// g_k(kappa) = 1 - tanh(kappa/2) R^{2k}
inline double concentric_g(double radius, double kappa, int k) {
    return 1.0 - std::tanh(0.5 * kappa) * std::pow(radius, 2 * k);
}

/// Eigenvalue of the Neumann-to-Dirichlet map for frequency k (each is double).
inline double concentric_eigenvalue(const ConcentricSpec& spec, int k) {
    detail::check_concentric(spec);
    require(k >= 1, "frequency must be positive");
    return concentric_g(spec.radius, spec.kappa, k) / (k * concentric_g(spec.radius, -spec.kappa, k));
}

/// First 2K eigenvalues in descending order, each frequency repeated for
/// its cosine and sine eigenfunction.
inline Eigen::VectorXd concentric_disk_eigenvalues(const ConcentricSpec& spec, int count) {
    require(count >= 1, "eigenvalue count must be positive");
    Eigen::VectorXd out(2 * count);
    for (int k = 1; k <= count; ++k) out[2 * k - 2] = out[2 * k - 1] = concentric_eigenvalue(spec, k);
    return out;
}

/// Conductivity of the concentric configuration at a point.
inline double concentric_conductivity(const ConcentricSpec& spec, double x, double y) {
    return std::hypot(x, y) < spec.radius ? std::exp(spec.kappa) : 1.0;
}

struct OddSymmetryReport {
    double max_antisymmetry = 0.0;   ///< max |l_k(kappa) + l_k(-kappa)|, l_k = log lambda_k + log k
    double max_second_difference = 0.0; ///< at kappa = 0
    double max_third_difference = 0.0;  ///< at kappa = 0, over frequencies
    double step = 0.0;
};

/// Checks that kappa -> log(k lambda_k(kappa)) is odd on a grid of kappas
/// symmetric about 0, and reports central second and third differences of
/// log lambda_k at the origin for k = 1..K (normalized by step^2, step^3).
inline OddSymmetryReport verify_odd_log_symmetry(const std::vector<double>& kappas, double radius, int frequencies,
                                                 double step = 1e-2) {
    require(frequencies >= 1, "need at least one frequency");
    require(step > 0.0, "difference step must be positive");
    OddSymmetryReport report;
    report.step = step;
    for (double kappa : kappas) {
        const bool mirrored = std::any_of(kappas.begin(), kappas.end(),
                                          [&](double other) { return std::abs(other + kappa) <= 1e-15 * std::max(1.0, std::abs(kappa)); });
        require(mirrored, "kappa grid must be symmetric about 0");
    }
    auto log_eig = [&](double kappa, int k) { return std::log(concentric_eigenvalue({radius, kappa}, k)); };
    for (int k = 1; k <= frequencies; ++k) {
        for (double kappa : kappas) {
            const double odd = (log_eig(kappa, k) + std::log(k)) + (log_eig(-kappa, k) + std::log(k));
            report.max_antisymmetry = std::max(report.max_antisymmetry, std::abs(odd));
        }
        const double h = step;
        const double second = (log_eig(h, k) - 2.0 * log_eig(0.0, k) + log_eig(-h, k)) / (h * h);
        const double third =
            (log_eig(2 * h, k) - 2.0 * log_eig(h, k) + 2.0 * log_eig(-h, k) - log_eig(-2 * h, k)) / (2.0 * h * h * h);
        report.max_second_difference = std::max(report.max_second_difference, std::abs(second));
        report.max_third_difference = std::max(report.max_third_difference, std::abs(third));
    }
    return report;
}

} // namespace eitlin
