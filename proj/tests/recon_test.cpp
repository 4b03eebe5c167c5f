#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "eitlin/recon.hpp"
#include "support.hpp"

using namespace eitlin;
using testing_support::disk;
using testing_support::Disk;

namespace {

constexpr int kCells = 60;

struct Fixture {
    const Disk& d = disk(2000, kCells);
    ForwardModel continuum = ForwardModel::continuum(d.mesh, d.partition);
    ForwardModel cem = ForwardModel::cem(d.mesh, d.partition, d.layout);
    FieldSpec field = [] {
        FieldSpec f = field_preset("F3");
        f.cells = kCells;
        return f;
    }();
    CovarianceFactor prior = build_covariance(d.partition, field);
    ContactSpec contacts = contact_preset("C1");
};

const Fixture& setup() {
    static const Fixture s;
    return s;
}

LinearizedModel linearized(Method method, bool cem) {
    const Fixture& s = setup();
    const ForwardModel& model = cem ? s.cem : s.continuum;
    return linearize(model, method, default_expansion(model, cem ? std::optional(s.contacts) : std::nullopt));
}

/// Direct solution of the stacked least-squares problem
///   [A_y A_w; t G 0] [y; w] = [vec(D) - base + A p0; t G mean]
/// by a column-pivoted QR factorization.
Eigen::VectorXd stacked_solution(const LinearizedModel& lin, const SymMatrix& data, const CovarianceFactor& prior,
                                 const Eigen::VectorXd& mean, double t) {
    const Eigen::MatrixXd& a = lin.jacobian().columns();
    const Eigen::Index cells = lin.cell_count();
    const Eigen::Index p = a.cols();
    const Eigen::MatrixXd g = prior.whitening_matrix();
    Eigen::MatrixXd stacked = Eigen::MatrixXd::Zero(a.rows() + cells, p);
    stacked.topRows(a.rows()) = a;
    stacked.bottomLeftCorner(cells, cells) = t * g;
    Eigen::VectorXd rhs(a.rows() + cells);
    rhs.head(a.rows()) = data.matrix().reshaped() - lin.base().matrix().reshaped() + a * lin.point();
    rhs.tail(cells) = t * g * mean;
    return stacked.colPivHouseholderQr().solve(rhs);
}

SymMatrix noisy_measurement(const ForwardModel& model, std::uint64_t seed, bool cem) {
    const Fixture& s = setup();
    const Eigen::VectorXd logp =
        draw_log_parameters(s.prior, s.field, cem ? std::optional(s.contacts) : std::nullopt, seed, 0);
    const SymMatrix clean = model.measure(physical_from_log(logp, kCells));
    auto rng = make_rng(seed, Stream::Noise, 0);
    return add_measurement_noise(clean, 1e-3 * clean.matrix().maxCoeff(), rng);
}

} // namespace

TEST(OneStep, MatchesStackedLeastSquares) {
    const Fixture& s = setup();
    for (bool cem : {false, true}) {
        for (Method method : {Method::LogConductivity, Method::Logarithmic}) {
            const LinearizedModel lin = linearized(method, cem);
            const SymMatrix data = reconstruction_data(method, noisy_measurement(cem ? s.cem : s.continuum, 3, cem));
            const Eigen::VectorXd mean = Eigen::VectorXd::Constant(kCells, 0.1);
            const TikhonovSolver solver(lin, s.prior, mean);
            for (double t : {1e-4, 1e-2, 1.0}) {
                const ReconResult r = solver.solve(data, t);
                const Eigen::VectorXd x = stacked_solution(lin, data, s.prior, mean, t);
                EXPECT_LE((r.kappa - x.head(kCells)).norm(), 1e-7 * x.head(kCells).norm())
                    << to_string(method) << " cem " << cem << " t " << t;
                if (cem) EXPECT_LE((r.upsilon - x.tail(16)).norm(), 1e-7 * x.tail(16).norm());
            }
        }
    }
}

TEST(OneStep, SatisfiesNormalEquations) {
    const Fixture& s = setup();
    for (bool cem : {false, true}) {
        const LinearizedModel lin = linearized(Method::Logarithmic, cem);
        const SymMatrix data = reconstruction_data(Method::Logarithmic, noisy_measurement(cem ? s.cem : s.continuum, 4, cem));
        const Eigen::VectorXd mean = Eigen::VectorXd::Zero(kCells);
        const double t = 3e-3;
        const ReconResult r = TikhonovSolver(lin, s.prior, mean).solve(data, t);

        const Eigen::MatrixXd& a = lin.jacobian().columns();
        Eigen::VectorXd x(a.cols());
        if (cem) x << r.kappa, r.upsilon;
        else x = r.kappa;
        const Eigen::VectorXd b = data.matrix().reshaped() - lin.base().matrix().reshaped() + a * lin.point();
        const Eigen::MatrixXd g = s.prior.whitening_matrix();
        Eigen::VectorXd gradient = a.transpose() * (a * x - b);
        gradient.head(kCells) += t * t * g.transpose() * (g * (r.kappa - mean));
        const double scale = (a.transpose() * b).norm();
        EXPECT_LE(gradient.norm(), 1e-10 * scale) << "cem " << cem;
        EXPECT_NEAR(r.residual_norm, (a * x - b).norm(), 1e-10 * b.norm());
    }
}

TEST(OneStep, BaseDataRecoversThePriorMean) {
    const Fixture& s = setup();
    for (bool cem : {false, true}) {
        const LinearizedModel lin = linearized(Method::LogConductivity, cem);
        const Eigen::VectorXd mean = lin.point().head(kCells);
        const TikhonovSolver solver(lin, s.prior, mean);
        for (double t : {1e-6, 1e-2, 10.0}) {
            const ReconResult r = solver.solve(lin.base(), t);
            EXPECT_LE(r.kappa.cwiseAbs().maxCoeff(), 1e-12);
            EXPECT_LE(r.residual_norm, 1e-12);
            if (cem) EXPECT_LE((r.upsilon - lin.point().tail(16)).cwiseAbs().maxCoeff(), 1e-10);
        }
    }
}

TEST(OneStep, LargeRegularizationReturnsThePriorMean) {
    const Fixture& s = setup();
    const LinearizedModel lin = linearized(Method::Logarithmic, false);
    const Eigen::VectorXd mean = Eigen::VectorXd::Constant(kCells, -0.4);
    const ReconResult r =
        one_step_reconstruct({lin, noisy_measurement(s.continuum, 5, false), s.prior, mean, 1e6});
    EXPECT_LE((r.kappa - mean).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_EQ(r.t, 1e6);
}

TEST(OneStep, NoiselessLogarithmicDataAtTheExpansionPoint) {
    const Fixture& s = setup();
    const LinearizedModel lin = linearized(Method::Logarithmic, true);
    const SymMatrix clean = s.cem.measure(ParamKind::LogConductivity, lin.point());
    const ReconResult r = one_step_reconstruct({lin, clean, s.prior, Eigen::VectorXd::Zero(kCells), 1e-4});
    EXPECT_LE(r.kappa.cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((r.upsilon - lin.point().tail(16)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(OneStep, NonPositiveDataIsRejectedForTheLogarithm) {
    const Fixture& s = setup();
    const LinearizedModel lin = linearized(Method::Logarithmic, false);
    Eigen::MatrixXd bad = lin.base().matrix();
    bad(15, 15) = -1.0;
    try {
        one_step_reconstruct({lin, SymMatrix::symmetrized(bad), s.prior, Eigen::VectorXd::Zero(kCells), 1e-3});
        FAIL() << "expected an error";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("log of noisy data undefined"), std::string::npos);
    }
    EXPECT_NO_THROW(reconstruction_data(Method::LogConductivity, SymMatrix::symmetrized(bad)));
}

TEST(OneStep, RankDeficientContactBlockIsAnError) {
    const Fixture& s = setup();
    const LinearizedModel lin = linearized(Method::LogConductivity, true);
    Eigen::MatrixXd columns = lin.jacobian().columns();
    columns.col(kCells + 1) = columns.col(kCells);
    const LinearizedModel broken(Method::LogConductivity, lin.base(),
                                 JacobianTensor(15, columns, ParamKind::LogConductivity, lin.point(), kCells));
    EXPECT_THROW(TikhonovSolver(broken, s.prior, Eigen::VectorXd::Zero(kCells)), NumericalError);
}

TEST(OneStep, OnlyLogCoordinatesAreSupported) {
    const Fixture& s = setup();
    EXPECT_THROW(TikhonovSolver(linearized(Method::Resistivity, false), s.prior, Eigen::VectorXd::Zero(kCells)),
                 ArgumentError);
}

TEST(Errors, Norms) {
    const Partition& p = setup().d.partition;
    const Eigen::VectorXd k = Eigen::VectorXd::LinSpaced(kCells, -1.0, 1.0);
    EXPECT_EQ(reconstruction_error(k, k, p), 0.0);
    EXPECT_NEAR(reconstruction_error(k.array() + 0.7, k, p), 0.7 * std::sqrt(p.areas().sum()), 1e-14);
    EXPECT_NEAR(0.7 * std::sqrt(p.areas().sum()), 0.7 * std::sqrt(kPi), 0.01);
    EXPECT_EQ(contact_error(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(1, 2, 3)), 0.0);
    EXPECT_NEAR(contact_error(Eigen::Vector2d(3, 0), Eigen::Vector2d(0, 4)), 5.0, 1e-15);
}

TEST(Sweep, DefaultGrid) {
    const auto grid = default_t_grid(2e-4);
    ASSERT_EQ(grid.size(), 40u);
    EXPECT_NEAR(grid.front(), 2e-7, 1e-20);
    EXPECT_NEAR(grid.back(), 2e-1, 1e-14);
    for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_NEAR(grid[i] / grid[i - 1], std::pow(10.0, 6.0 / 39.0), 1e-12);
    EXPECT_EQ(default_t_grid(3.0, 1), std::vector<double>{3.0});
}

TEST(Sweep, SamplesAreDeterministicAndShared) {
    const Fixture& s = setup();
    const InverseSamples a = draw_inverse_samples(s.cem, s.prior, s.field, s.contacts, 20, 8, 1);
    const InverseSamples b = draw_inverse_samples(s.cem, s.prior, s.field, s.contacts, 20, 8, 2);
    EXPECT_EQ(a.delta, b.delta);
    EXPECT_GT(a.delta, 0.0);
    for (std::size_t i = 0; i < 20; ++i) {
        EXPECT_EQ(a.noisy[i].matrix(), b.noisy[i].matrix());
        EXPECT_EQ(a.upsilon[i].size(), 16);
        EXPECT_TRUE(a.noisy[i].matrix() == a.noisy[i].matrix().transpose());
    }
    // the noise level is set by at least 100 clean draws
    const InverseSamples c = draw_inverse_samples(s.cem, s.prior, s.field, s.contacts, 100, 8, 1);
    EXPECT_EQ(a.delta, c.delta);
}

TEST(Sweep, OnePointGrid) {
    const Fixture& s = setup();
    const InverseSamples samples = draw_inverse_samples(s.continuum, s.prior, s.field, std::nullopt, 5, 9);
    const SweepResult r = sweep_regularization(linearized(Method::Logarithmic, false), s.prior,
                                               Eigen::VectorXd::Zero(kCells), samples, s.d.partition, {0.01});
    EXPECT_EQ(r.tau(), 0.01);
    EXPECT_EQ(r.n_samples, 5 - samples.rejected);
    EXPECT_EQ(r.per_sample.rows(), r.n_samples);
}

TEST(Sweep, CurveAndMonotonePriorSeminorm) {
    const Fixture& s = setup();
    const InverseSamples samples = draw_inverse_samples(s.cem, s.prior, s.field, s.contacts, 8, 10);
    const auto grid = default_t_grid(samples.delta, 12);
    for (Method m : {Method::LogConductivity, Method::Logarithmic}) {
        const LinearizedModel lin = linearized(m, true);
        const SweepResult r =
            sweep_regularization(lin, s.prior, Eigen::VectorXd::Zero(kCells), samples, s.d.partition, grid);
        ASSERT_EQ(r.iota.size(), 12);
        ASSERT_EQ(r.d.size(), 12);
        for (Eigen::Index j = 0; j < 12; ++j) EXPECT_LE(r.iota[r.best], r.iota[j]);

        // per-sample errors on each grid point come from the same draws
        const TikhonovSolver solver(lin, s.prior, Eigen::VectorXd::Zero(kCells));
        const auto prepared = solver.prepare(reconstruction_data(m, samples.noisy[0]));
        ASSERT_TRUE(samples.accepted[0]);
        const ReconResult direct = solver.solve(prepared, grid[4]);
        EXPECT_NEAR(r.per_sample(0, 4), reconstruction_error(direct.kappa, samples.kappa[0], s.d.partition), 1e-12);

        double previous = std::numeric_limits<double>::infinity();
        for (double t : grid) {
            const double norm = solver.prior_seminorm(prepared, t);
            const ReconResult res = solver.solve(prepared, t);
            EXPECT_NEAR(norm, s.prior.whiten(res.kappa).norm(), 1e-8 * std::max(1.0, norm));
            EXPECT_LE(norm, previous);
            previous = norm;
        }
    }
}

TEST(Sweep, GridMustIncrease) {
    const Fixture& s = setup();
    const InverseSamples samples = draw_inverse_samples(s.continuum, s.prior, s.field, std::nullopt, 2, 11);
    const LinearizedModel lin = linearized(Method::Logarithmic, false);
    EXPECT_THROW(sweep_regularization(lin, s.prior, Eigen::VectorXd::Zero(kCells), samples, s.d.partition, {0.1, 0.01}),
                 ArgumentError);
    EXPECT_THROW(sweep_regularization(lin, s.prior, Eigen::VectorXd::Zero(kCells), samples, s.d.partition, {}),
                 ArgumentError);
}

TEST(Export, CsvShapes) {
    const Fixture& s = setup();
    const InverseSamples samples = draw_inverse_samples(s.cem, s.prior, s.field, s.contacts, 3, 12);
    const SweepResult r = sweep_regularization(linearized(Method::Logarithmic, true), s.prior,
                                               Eigen::VectorXd::Zero(kCells), samples, s.d.partition, {1e-3, 1e-2});
    std::ostringstream sweep;
    write_sweep_csv(sweep, r);
    EXPECT_EQ(sweep.str().substr(0, sweep.str().find('\n')), "t,iota,std_err,d,d_std_err");
    std::ostringstream field;
    write_field_csv(field, s.d.partition, samples.kappa[0], {{"logarithmic", samples.kappa[0]}});
    std::istringstream lines(field.str());
    std::string header;
    std::getline(lines, header);
    int rows = 0;
    for (std::string line; std::getline(lines, line);) ++rows;
    EXPECT_EQ(header.substr(0, 5), "cell,");
    EXPECT_EQ(rows, kCells);
}
