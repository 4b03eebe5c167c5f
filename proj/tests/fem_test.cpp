#include <cmath>

#include <gtest/gtest.h>

#include "eitlin/fem.hpp"
#include "eitlin/forward.hpp"
#include "support.hpp"

using namespace eitlin;
using testing_support::disk;
using testing_support::Disk;

namespace {

Eigen::VectorXd unit(int n, int j) { return Eigen::VectorXd::Unit(n, j); }

double boundary_mean(const Mesh& mesh, const Eigen::VectorXd& u) {
    double total = 0.0;
    for (const auto& e : mesh.boundary_edges()) total += 0.5 * e.length() * (u[e.first] + u[e.second]);
    return total / kTwoPi;
}

} // namespace

TEST(Continuum, HomogeneousTraceMatchesSeparationOfVariables) {
    const Disk& d = disk(30000, 1800);
    const TrigBasis basis(16);
    const ConductivityField sigma = ConductivityField::constant(d.partition.cell_count(), 1.0);
    const ContinuumSystem system(d.mesh, d.partition);
    const Eigen::MatrixXd u = system.factorize(sigma).solve(system.load_matrix(basis));
    for (int j = 0; j < basis.size(); ++j) {
        const int k = TrigBasis::frequency(j);
        const double amplitude = 1.0 / (k * std::sqrt(kPi));
        double worst = 0.0;
        for (const auto& e : d.mesh.boundary_edges()) {
            const double exact = amplitude * std::sqrt(kPi) * basis(j, e.theta_begin);
            worst = std::max(worst, std::abs(u(e.first, j) - exact));
        }
        EXPECT_LE(worst, 0.01 * amplitude) << "basis function " << j;
    }
}

TEST(Continuum, InteriorOracleAwayFromTheBoundary) {
    const Disk& d = disk(8000, 200);
    const TrigBasis basis(4);
    const ConductivityField sigma = ConductivityField::constant(d.partition.cell_count(), 1.0);
    const ContinuumSolution s = solve_continuum(d.mesh, d.partition, sigma, basis, unit(4, 2));
    for (int i = 0; i < d.mesh.node_count(); i += 97) {
        const Eigen::Vector2d x = d.mesh.node(i);
        const double r = x.norm();
        const double theta = std::atan2(x.y(), x.x());
        const double exact = r * r * std::cos(2.0 * theta) / (2.0 * std::sqrt(kPi));
        EXPECT_NEAR(s.potential[i], exact, 0.01 / (2.0 * std::sqrt(kPi)));
    }
}

TEST(Continuum, TraceHasZeroBoundaryMean) {
    const Disk& d = disk(8000, 200);
    std::mt19937_64 rng(5);
    Eigen::VectorXd values = testing_support::normal_vector(rng, d.partition.cell_count(), 0.5).array().exp();
    const TrigBasis basis(16);
    const ContinuumSolution s =
        solve_continuum(d.mesh, d.partition, ConductivityField(values), basis, testing_support::normal_vector(rng, 16));
    EXPECT_NEAR(boundary_mean(d.mesh, s.potential), 0.0, 1e-12 * s.potential.cwiseAbs().maxCoeff());
}

TEST(Continuum, ScalingLaw) {
    const Disk& d = disk(8000, 200);
    const TrigBasis basis(16);
    const ContinuumSystem system(d.mesh, d.partition);
    const Eigen::MatrixXd loads = system.load_matrix(basis);
    std::mt19937_64 rng(11);
    const Eigen::VectorXd base = testing_support::normal_vector(rng, d.partition.cell_count(), 0.4).array().exp();
    const Eigen::MatrixXd u1 = system.factorize(ConductivityField(base)).solve(loads);
    for (double c : {2.0, 0.3, 17.0}) {
        const Eigen::MatrixXd uc = system.factorize(ConductivityField(c * base)).solve(loads);
        EXPECT_LE((uc - u1 / c).norm(), 1e-12 * u1.norm() / c) << "c = " << c;
    }
}

TEST(Continuum, OddCurrentVanishesAtTheOrigin) {
    const Disk& d = disk(8000, 200);
    const TrigBasis basis(2);
    const ConductivityField sigma = ConductivityField::constant(d.partition.cell_count(), 1.0);
    const ContinuumSolution s = solve_continuum(d.mesh, d.partition, sigma, basis, unit(2, 1));
    ASSERT_EQ(d.mesh.node(0).norm(), 0.0);
    EXPECT_NEAR(s.potential[0], 0.0, 1e-3 / std::sqrt(kPi));
}

TEST(Continuum, FactorizationMatchesIndependentSolves) {
    const Disk& d = disk(8000, 200);
    const TrigBasis basis(16);
    std::mt19937_64 rng(3);
    const ConductivityField sigma(testing_support::normal_vector(rng, d.partition.cell_count(), 0.3).array().exp());
    const ContinuumSystem system(d.mesh, d.partition);
    const Eigen::MatrixXd all = system.factorize(sigma).solve(system.load_matrix(basis));
    for (int j = 0; j < 16; ++j) {
        const ContinuumSolution s = solve_continuum(d.mesh, d.partition, sigma, basis, unit(16, j));
        EXPECT_LE((s.potential - all.col(j)).norm(), 1e-12 * all.col(j).norm());
    }
}

TEST(Continuum, RepeatedFactorizationsAreBitwiseIdentical) {
    const Disk& d = disk(8000, 200);
    const ContinuumSystem system(d.mesh, d.partition);
    const Eigen::MatrixXd loads = system.load_matrix(TrigBasis(16));
    const ConductivityField sigma = ConductivityField::constant(d.partition.cell_count(), 1.0);
    const Eigen::MatrixXd a = system.factorize(sigma).solve(loads);
    const Eigen::MatrixXd b = ContinuumSystem(d.mesh, d.partition).factorize(sigma).solve(loads);
    EXPECT_TRUE(a == b);
}

TEST(Continuum, LoadsMatchGaussLegendreQuadrature) {
    const Disk& d = disk(8000, 200);
    const TrigBasis basis(16);
    // 5-point Gauss-Legendre on [0, 1]
    const double x[5] = {0.0469100770306680, 0.2307653449471585, 0.5, 0.7692346550528415, 0.9530899229693320};
    const double w[5] = {0.1184634425280945, 0.2393143352496832, 0.2844444444444444, 0.2393143352496832,
                         0.1184634425280945};
    for (int j : {0, 5, 15}) {
        for (std::size_t e = 0; e < d.mesh.boundary_edges().size(); e += 37) {
            const auto& edge = d.mesh.boundary_edges()[e];
            const double h = edge.length();
            double left = 0.0, right = 0.0;
            for (int q = 0; q < 5; ++q) {
                const double f = basis(j, edge.theta_begin + x[q] * h);
                left += w[q] * h * f * (1.0 - x[q]);
                right += w[q] * h * f * x[q];
            }
            const auto [l, r] = basis.hat_integrals(j, edge.theta_begin, edge.theta_end);
            EXPECT_NEAR(l, left, 1e-14);
            EXPECT_NEAR(r, right, 1e-14);
        }
    }
}

TEST(Continuum, WrongConductivityLengthIsRejected) {
    const Disk& d = disk(8000, 200);
    EXPECT_THROW(ContinuumSystem(d.mesh, d.partition).factorize(ConductivityField::constant(7, 1.0)), ArgumentError);
}

TEST(Cem, ZeroCurrentGivesZeroState) {
    const Disk& d = disk(8000, 200);
    const ConductivityField sigma = ConductivityField::constant(d.partition.cell_count(), 1.0);
    const CemSolution s = solve_cem(d.mesh, d.partition, sigma, ContactVector::constant(16, 10.0), d.layout,
                                    Eigen::VectorXd::Zero(16));
    EXPECT_EQ(s.electrode_potentials.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(s.potential.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Cem, ElectrodePotentialsSumToZero) {
    const Disk& d = disk(8000, 200);
    std::mt19937_64 rng(8);
    const ConductivityField sigma(testing_support::normal_vector(rng, d.partition.cell_count(), 0.5).array().exp());
    const ContactVector zeta(testing_support::normal_vector(rng, 16).array().exp() * 10.0);
    const ElectrodeBasis basis(16);
    const CemSolutions s = factorize(d.mesh, d.partition, sigma, zeta, d.layout).solve(basis.patterns());
    for (int c = 0; c < 15; ++c) EXPECT_NEAR(s.electrode_potentials.col(c).sum(), 0.0, 1e-12);
}

TEST(Cem, FourierPatternIsReproducedUnderRotationalSymmetry) {
    const Disk& d = disk(8000, 200);
    const ConductivityField sigma = ConductivityField::constant(d.partition.cell_count(), 1.0);
    const ElectrodeBasis basis(16);
    const Eigen::VectorXd current = basis.patterns().col(0);
    const CemSolution s = solve_cem(d.mesh, d.partition, sigma, ContactVector::constant(16, 10.0), d.layout, current);
    const double scale = current.dot(s.electrode_potentials);
    EXPECT_GT(scale, 0.0);
    EXPECT_LE((s.electrode_potentials - scale * current).norm(), 1e-9 * s.electrode_potentials.norm());

    // rotating the current by one electrode rotates the potentials
    Eigen::VectorXd rotated(16), expected(16);
    for (int m = 0; m < 16; ++m) {
        rotated[(m + 1) % 16] = current[m];
        expected[(m + 1) % 16] = s.electrode_potentials[m];
    }
    const CemSolution r = solve_cem(d.mesh, d.partition, sigma, ContactVector::constant(16, 10.0), d.layout, rotated);
    EXPECT_LE((r.electrode_potentials - expected).norm(), 1e-9 * expected.norm());
}

TEST(Cem, ShuntLimitConverges) {
    const Disk& d = disk(8000, 200);
    const ConductivityField sigma = ConductivityField::constant(d.partition.cell_count(), 1.0);
    const ElectrodeBasis basis(16);
    const CemSystem system(d.mesh, d.partition, d.layout);
    const CemSolutions a = system.factorize(sigma, ContactVector::constant(16, 1e5)).solve(basis.patterns());
    const CemSolutions b = system.factorize(sigma, ContactVector::constant(16, 1e6)).solve(basis.patterns());
    EXPECT_LE((a.electrode_potentials - b.electrode_potentials).norm(), 0.01 * b.electrode_potentials.norm());

    // on an electrode the potential is nearly constant and equal to U_m
    const auto& edges = d.mesh.boundary_edges();
    for (int m = 0; m < 16; ++m) {
        double total = 0.0, length = 0.0;
        for (int e : system.electrode_edges()[static_cast<std::size_t>(m)]) {
            const auto& edge = edges[static_cast<std::size_t>(e)];
            total += 0.5 * edge.length() * (b.potential(edge.first, 0) + b.potential(edge.second, 0));
            length += edge.length();
        }
        EXPECT_NEAR(total / length, b.electrode_potentials(m, 0), 1e-3 * b.electrode_potentials.col(0).norm());
    }
}

TEST(Cem, EnergyIdentity) {
    const Disk& d = disk(8000, 200);
    std::mt19937_64 rng(21);
    const ConductivityField sigma(testing_support::normal_vector(rng, d.partition.cell_count(), 0.7).array().exp());
    const ContactVector zeta(testing_support::normal_vector(rng, 16).array().exp() * 10.0);
    const CemSystem system(d.mesh, d.partition, d.layout);
    const ElectrodeBasis basis(16);
    const CemSolutions s = system.factorize(sigma, zeta).solve(basis.patterns());
    for (int c = 0; c < basis.size(); ++c) {
        const double power = basis.patterns().col(c).dot(s.electrode_potentials.col(c));
        const double energy = system.bilinear_form(sigma, zeta, s.potential.col(c), s.electrode_potentials.col(c),
                                                   s.potential.col(c), s.electrode_potentials.col(c));
        EXPECT_NEAR(power, energy, 1e-10 * std::abs(energy)) << "pattern " << c;
    }
}

TEST(Cem, HandleMatchesPerPatternSolves) {
    const Disk& d = disk(8000, 200);
    const ConductivityField sigma = ConductivityField::constant(d.partition.cell_count(), 1.3);
    const ContactVector zeta = ContactVector::constant(16, 20.0);
    const ElectrodeBasis basis(16);
    const CemSolutions all = factorize(d.mesh, d.partition, sigma, zeta, d.layout).solve(basis.patterns());
    for (int c = 0; c < basis.size(); ++c) {
        const CemSolution s = solve_cem(d.mesh, d.partition, sigma, zeta, d.layout, basis.patterns().col(c));
        EXPECT_LE((s.electrode_potentials - all.electrode_potentials.col(c)).norm(),
                  1e-12 * all.electrode_potentials.col(c).norm());
        EXPECT_LE((s.potential - all.potential.col(c)).norm(), 1e-12 * all.potential.col(c).norm());
    }
}

TEST(Cem, NonZeroSumCurrentIsRejected) {
    const Disk& d = disk(8000, 200);
    Eigen::VectorXd current = Eigen::VectorXd::Zero(16);
    current[0] = 1.0;
    EXPECT_THROW(solve_cem(d.mesh, d.partition, ConductivityField::constant(d.partition.cell_count(), 1.0),
                           ContactVector::constant(16, 1.0), d.layout, current),
                 ArgumentError);
}

TEST(Cem, UnalignedMeshIsRejected) {
    const Mesh mesh = build_disk_mesh(2000);
    const Partition p = build_partition(mesh, 20);
    EXPECT_THROW(CemSystem(mesh, p, build_electrode_layout(16, 0.46)), ArgumentError);
}

TEST(Fields, NonPositiveValuesAreRejected) {
    EXPECT_THROW(ConductivityField(Eigen::Vector3d(1.0, 0.0, 2.0)), ArgumentError);
    EXPECT_THROW(ContactVector(Eigen::Vector2d(1.0, -1.0)), ArgumentError);
    EXPECT_THROW(ConductivityField(Eigen::Vector2d(1.0, std::nan(""))), ArgumentError);
}
