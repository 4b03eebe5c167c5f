#include <cmath>

#include <gtest/gtest.h>

#include "eitlin/oracle.hpp"

using namespace eitlin;

TEST(ConcentricOracle, NoContrastGivesHomogeneousSpectrum) {
    const Eigen::VectorXd mu = concentric_disk_eigenvalues({0.5, 0.0}, 8);
    ASSERT_EQ(mu.size(), 16);
    for (int k = 1; k <= 8; ++k) {
        EXPECT_EQ(mu[2 * k - 2], 1.0 / k);
        EXPECT_EQ(mu[2 * k - 1], 1.0 / k);
    }
}

TEST(ConcentricOracle, VanishingInclusion) {
    const Eigen::VectorXd mu = concentric_disk_eigenvalues({1e-8, std::log(5.0)}, 8);
    for (int k = 1; k <= 8; ++k) EXPECT_NEAR(mu[2 * k - 1], 1.0 / k, 1e-10);
}

TEST(ConcentricOracle, ElevenThirteenths) {
    // g_1(log 2) = 1 - (1/3)(1/4), g_1(-log 2) = 1 + (1/3)(1/4)
    const double g_plus = 1.0 - (1.0 / 3.0) * 0.25;
    const double g_minus = 1.0 + (1.0 / 3.0) * 0.25;
    EXPECT_NEAR(concentric_g(0.5, std::log(2.0), 1), g_plus, 1e-15);
    EXPECT_NEAR(concentric_g(0.5, -std::log(2.0), 1), g_minus, 1e-15);
    EXPECT_NEAR(concentric_eigenvalue({0.5, std::log(2.0)}, 1), 11.0 / 13.0, 1e-15);
}

TEST(ConcentricOracle, TanhFormMatchesExponentialForm) {
    for (double kappa : {-3.0, -0.2, 0.7, 4.0}) {
        for (int k = 1; k <= 8; ++k) {
            const double ratio = (std::exp(kappa) - 1.0) / (std::exp(kappa) + 1.0);
            EXPECT_NEAR(concentric_g(0.3, kappa, k), 1.0 - ratio * std::pow(0.3, 2 * k), 1e-15);
        }
    }
}

TEST(ConcentricOracle, PositiveAndDecreasing) {
    for (double kappa : {-5.0, -1.0, 0.3, 6.0}) {
        const Eigen::VectorXd mu = concentric_disk_eigenvalues({0.7, kappa}, 8);
        EXPECT_GT(mu.minCoeff(), 0.0);
        for (int k = 1; k < 8; ++k) EXPECT_LT(mu[2 * k], mu[2 * k - 1]);
    }
}

TEST(ConcentricOracle, ConductivityIndicator) {
    const ConcentricSpec spec{0.5, std::log(3.0)};
    EXPECT_NEAR(concentric_conductivity(spec, 0.1, 0.2), 3.0, 1e-15);
    EXPECT_EQ(concentric_conductivity(spec, 0.6, 0.0), 1.0);
}

TEST(ConcentricOracle, InvalidSpec) {
    EXPECT_THROW(concentric_eigenvalue({1.0, 0.0}, 1), ArgumentError);
    EXPECT_THROW(concentric_eigenvalue({0.5, 0.0}, 0), ArgumentError);
}

TEST(OddSymmetry, Antisymmetry) {
    for (double radius : {0.2, 0.5, 0.9}) {
        const OddSymmetryReport r = verify_odd_log_symmetry({-0.5, 0.5}, radius, 8);
        EXPECT_LE(r.max_antisymmetry, 1e-12) << "radius " << radius;
    }
    const OddSymmetryReport wide = verify_odd_log_symmetry({-3.0, -1.0, 0.0, 1.0, 3.0}, 0.5, 8);
    EXPECT_LE(wide.max_antisymmetry, 1e-12);
}

TEST(OddSymmetry, VanishingSecondDifference) {
    const OddSymmetryReport r = verify_odd_log_symmetry({-0.5, 0.5}, 0.5, 8);
    EXPECT_LE(r.max_second_difference, 1e-8);
}

TEST(OddSymmetry, ThirdDifferenceBoundedUniformly) {
    // log lambda_k = -2 artanh(q tanh(kappa / 2)) - log k with q = R^{2k}, whose
    // third derivative at 0 is (q - q^3) / 2 <= 1 / (3 sqrt 3)
    const double bound = 1.0 / (3.0 * std::sqrt(3.0));
    const OddSymmetryReport first = verify_odd_log_symmetry({0.0}, 0.5, 1);
    EXPECT_NEAR(first.max_third_difference, (0.25 - std::pow(0.25, 3)) / 2.0, 1e-3);
    for (double radius : {0.3, 0.5, 0.76, 0.95}) {
        EXPECT_LE(verify_odd_log_symmetry({0.0}, radius, 8).max_third_difference, bound + 1e-3) << "radius " << radius;
    }
}

TEST(OddSymmetry, AsymmetricGridIsRejected) {
    EXPECT_THROW(verify_odd_log_symmetry({-0.5, 0.4}, 0.5, 8), ArgumentError);
}
