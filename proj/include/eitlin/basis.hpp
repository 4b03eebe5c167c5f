#pragma once

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "eitlin/error.hpp"
#include "eitlin/mesh.hpp"

namespace eitlin {

/// Orthonormal trigonometric currents on the unit circle (0-based j):
/// psi_j = cos(k theta)/sqrt(pi) for even j, sin(k theta)/sqrt(pi) for odd j,
/// with k = j/2 + 1.
class TrigBasis {
public:
    explicit TrigBasis(int size = 16) : size_(size) {
        require(size >= 2 && size % 2 == 0, "trigonometric basis size must be even and >= 2");
    }

    int size() const { return size_; }
    static int frequency(int j) { return j / 2 + 1; }
    static bool is_cosine(int j) { return j % 2 == 0; }

    double operator()(int j, double theta) const {
        const double k = frequency(j);
        return (is_cosine(j) ? std::cos(k * theta) : std::sin(k * theta)) / std::sqrt(kPi);
    }

    /// Exact integrals of psi_j against the two linear hat functions of the
    /// interval [a, b]: {int psi_j (b-t)/(b-a) dt, int psi_j (t-a)/(b-a) dt}.
    std::pair<double, double> hat_integrals(int j, double a, double b) const {
        const double k = frequency(j);
        const double h = b - a;
        const double mid = 0.5 * (a + b);
        const double half_sin = std::sin(0.5 * k * h);
        const double scale = 1.0 / std::sqrt(kPi);
        if (is_cosine(j)) {
            // cos(ka) - cos(kb) = 2 sin(k mid) sin(k h / 2)
            const double diff = 2.0 * std::sin(k * mid) * half_sin / (k * k * h);
            const double left = -std::sin(k * a) / k + diff;
            const double right = std::sin(k * b) / k - diff;
            return {scale * left, scale * right};
        }
        // sin(kb) - sin(ka) = 2 cos(k mid) sin(k h / 2)
        const double diff = 2.0 * std::cos(k * mid) * half_sin / (k * k * h);
        const double left = std::cos(k * a) / k - diff;
        const double right = -std::cos(k * b) / k + diff;
        return {scale * left, scale * right};
    }

private:
    int size_;
};

/// Discrete Fourier current patterns for M electrodes (M even), columns of an
/// M x (M-1) matrix orthonormal in R^M:
/// sqrt(2/M) cos(k theta_m), sqrt(2/M) sin(k theta_m) for k = 1..M/2-1, and
/// the alternating pattern (-1)^m / sqrt(M).
class ElectrodeBasis {
public:
    explicit ElectrodeBasis(int electrodes) : patterns_(electrodes, electrodes - 1) {
        require(electrodes >= 2 && electrodes % 2 == 0, "electrode basis needs an even electrode count >= 2");
        const int m_count = electrodes;
        const double amplitude = std::sqrt(2.0 / m_count);
        for (int k = 1; k < m_count / 2; ++k) {
            for (int m = 0; m < m_count; ++m) {
                const double theta = kTwoPi * m / m_count;
                patterns_(m, 2 * k - 2) = amplitude * std::cos(k * theta);
                patterns_(m, 2 * k - 1) = amplitude * std::sin(k * theta);
            }
        }
        for (int m = 0; m < m_count; ++m) patterns_(m, m_count - 2) = (m % 2 == 0 ? 1.0 : -1.0) / std::sqrt(m_count);
    }

    int electrode_count() const { return static_cast<int>(patterns_.rows()); }
    int size() const { return static_cast<int>(patterns_.cols()); }
    const Eigen::MatrixXd& patterns() const { return patterns_; }

private:
    Eigen::MatrixXd patterns_;
};

} // namespace eitlin
