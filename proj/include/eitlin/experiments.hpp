#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "eitlin/bench.hpp"
#include "eitlin/config.hpp"
#include "eitlin/error.hpp"
#include "eitlin/forward.hpp"
#include "eitlin/jacobian.hpp"
#include "eitlin/matfun.hpp"
#include "eitlin/mesh.hpp"
#include "eitlin/oracle.hpp"
#include "eitlin/randfield.hpp"
#include "eitlin/recon.hpp"

namespace eitlin {

/// Mesh, partition and forward model described by a configuration.
struct ExperimentSetup {
    ElectrodeLayout layout;
    Mesh mesh;
    Partition partition;
    ForwardModel model;

    explicit ExperimentSetup(const ExperimentConfig& c)
        : layout(c.electrodes, c.coverage),
          mesh(build_disk_mesh(c.mesh_nodes, c.model == ModelKind::Cem ? std::optional(layout) : std::nullopt)),
          partition(build_partition(mesh, c.cells)),
          model(c.model == ModelKind::Cem ? ForwardModel::cem(mesh, partition, layout)
                                          : ForwardModel::continuum(mesh, partition, TrigBasis(c.basis_size))) {}
};

inline std::string row_label(const ExperimentConfig& c) {
    return c.contacts ? c.field.name + "/" + c.contacts->name : c.field.name;
}

inline std::string file_label(const ExperimentConfig& c) {
    return c.contacts ? c.field.name + "_" + c.contacts->name : c.field.name;
}

/// Creates the output directory and checks that it accepts files.
inline std::filesystem::path prepare_output_dir(const ExperimentConfig& c) {
    const std::filesystem::path dir(c.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const auto probe = dir / ".eitlin-write-test";
    {
        std::ofstream out(probe);
        if (!out) throw IoError("output directory '" + dir.string() + "' is not writable");
    }
    std::filesystem::remove(probe, ec);
    return dir;
}

/// Opens an output file and writes the '#' metadata header.
inline std::ofstream open_output(const std::filesystem::path& path, const ExperimentConfig& c,
                                 const std::string& what, const std::vector<std::string>& extra = {}) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << "# eitlin " << what << '\n';
    std::istringstream lines(c.describe());
    for (std::string line; std::getline(lines, line);) out << "# " << line << '\n';
    for (const auto& line : extra) out << "# " << line << '\n';
    return out;
}

inline BenchResult cmd_forward_bench(const ExperimentConfig& c, std::ostream& console) {
    const auto dir = prepare_output_dir(c);
    const ExperimentSetup setup(c);
    BenchConfig bench;
    bench.field = c.field;
    bench.contacts = c.contacts;
    bench.methods = c.methods;
    bench.samples = c.samples;
    bench.seed = c.seed;
    bench.threads = c.threads;
    const BenchResult r = run_forward_benchmark(setup.model, bench);

    const auto path = dir / ("forward_" + file_label(c) + ".csv");
    auto out = open_output(path, c, "forward-bench", {"rejected = " + std::to_string(r.rejected)});
    write_bench_csv(out, r);

    console << "linearization errors, " << row_label(c) << ", " << r.n_samples << " samples (" << r.rejected
            << " rejected)\n";
    for (std::size_t m = 0; m < r.methods.size(); ++m) {
        const auto i = static_cast<Eigen::Index>(m);
        console << "  " << std::left << std::setw(18) << to_string(r.methods[m]) << std::setprecision(10)
                << r.mean_error[i] << " +/- " << r.std_error[i] << '\n';
    }
    console << "wrote " << path.string() << '\n';
    return r;
}

struct InverseReport {
    InverseSamples samples;
    std::vector<SweepResult> sweeps; ///< log-conductivity, then logarithmic
};

inline InverseReport run_inverse(const ExperimentConfig& c, const ExperimentSetup& setup) {
    const CovarianceFactor prior = build_covariance(setup.partition, c.field);
    InverseReport report;
    report.samples = draw_inverse_samples(setup.model, prior, c.field, c.contacts, c.samples, c.seed, c.threads);
    const auto models = linearize(setup.model, {Method::LogConductivity, Method::Logarithmic},
                                  default_expansion(setup.model, c.contacts));
    const auto grid = c.t_grid.empty() ? default_t_grid(report.samples.delta, c.t_count) : c.t_grid;
    for (const auto& m : models) {
        report.sweeps.push_back(
            sweep_regularization(m, prior, c.field.mean_vector(), report.samples, setup.partition, grid, c.threads));
    }
    return report;
}

inline InverseReport cmd_inverse_bench(const ExperimentConfig& c, std::ostream& console) {
    const auto dir = prepare_output_dir(c);
    const ExperimentSetup setup(c);
    InverseReport report = run_inverse(c, setup);
    const auto& s = report.samples;

    std::ostringstream delta;
    delta << std::setprecision(17) << "delta = " << s.delta;
    const std::vector<std::string> extra = {delta.str(), "rejected = " + std::to_string(s.rejected)};
    const auto path = dir / ("inverse_" + file_label(c) + ".csv");
    auto out = open_output(path, c, "inverse-bench", extra);
    out << "method,field,iota,iota_std_err,tau,d,d_std_err,n_samples,seed\n" << std::setprecision(10);
    console << "reconstruction errors, " << row_label(c) << ", " << report.sweeps.front().n_samples << " samples ("
            << s.rejected << " rejected), delta " << std::setprecision(6) << s.delta << '\n';
    for (const auto& sw : report.sweeps) {
        const double d = c.contacts ? sw.best_d() : std::nan("");
        const double d_err = c.contacts ? sw.d_error[sw.best] : std::nan("");
        out << to_string(sw.method) << ',' << row_label(c) << ',' << sw.best_iota() << ',' << sw.iota_error[sw.best]
            << ',' << sw.tau() << ',' << d << ',' << d_err << ',' << sw.n_samples << ',' << c.seed << '\n';
        console << "  " << std::left << std::setw(18) << to_string(sw.method) << "iota " << std::setprecision(10)
                << sw.best_iota() << " +/- " << sw.iota_error[sw.best] << "  tau " << sw.tau();
        if (c.contacts) console << "  d " << d << " +/- " << d_err;
        console << '\n';

        const auto curve = dir / ("sweep_" + file_label(c) + "_" + std::string(to_string(sw.method)) + ".csv");
        auto cout = open_output(curve, c, "inverse-bench sweep " + std::string(to_string(sw.method)), extra);
        write_sweep_csv(cout, sw);
    }
    if (!out) throw IoError("failed to write '" + path.string() + "'");
    console << "wrote " << path.string() << '\n';
    return report;
}

struct ReconstructReport {
    double truth_norm = 0.0;
    double error_log_conductivity = 0.0;
    double error_logarithmic = 0.0;
    std::uint64_t draw = 0; ///< sub-seed that produced a usable noisy matrix
};

/// One draw reconstructed by both one-step methods at their swept-optimal t.
/// Draws whose noisy matrix is not positive definite are replaced by the next
/// sub-seed, at most ten times.
inline ReconstructReport cmd_reconstruct(const ExperimentConfig& c, std::uint64_t draw_seed, std::ostream& console) {
    const auto dir = prepare_output_dir(c);
    const ExperimentSetup setup(c);
    const InverseReport sweep = run_inverse(c, setup);
    const CovarianceFactor prior = build_covariance(setup.partition, c.field);
    const auto models = linearize(setup.model, {Method::LogConductivity, Method::Logarithmic},
                                  default_expansion(setup.model, c.contacts));

    for (std::uint64_t sub = 0; sub < 10; ++sub) {
        const Eigen::VectorXd logp = draw_log_parameters(prior, c.field, c.contacts, draw_seed, sub);
        const SymMatrix clean = setup.model.measure(physical_from_log(logp, setup.model.cell_count()));
        auto rng = make_rng(draw_seed, Stream::Noise, sub);
        const SymMatrix noisy = add_measurement_noise(clean, sweep.samples.delta, rng);
        if (!is_spd(noisy)) {
            console << "draw " << sub << " rejected (noisy matrix not positive definite)\n";
            continue;
        }
        const Eigen::VectorXd kappa = logp.head(setup.model.cell_count());
        std::vector<std::pair<std::string, Eigen::VectorXd>> fields;
        ReconstructReport report;
        report.draw = sub;
        report.truth_norm = l2_norm(kappa, setup.partition);
        for (std::size_t m = 0; m < models.size(); ++m) {
            const TikhonovSolver solver(models[m], prior, c.field.mean_vector());
            const ReconResult r = solver.solve(reconstruction_data(models[m].method(), noisy), sweep.sweeps[m].tau());
            const double err = reconstruction_error(r.kappa, kappa, setup.partition);
            (models[m].method() == Method::Logarithmic ? report.error_logarithmic : report.error_log_conductivity) = err;
            fields.emplace_back(std::string(to_string(models[m].method())), r.kappa);
        }
        std::ostringstream extra;
        extra << "draw_seed = " << draw_seed << ", sub_seed = " << sub << std::setprecision(17)
              << ", tau_log_conductivity = " << sweep.sweeps[0].tau() << ", tau_logarithmic = " << sweep.sweeps[1].tau();
        const auto path = dir / ("reconstruction_" + file_label(c) + "_" + std::to_string(draw_seed) + ".csv");
        auto out = open_output(path, c, "reconstruct", {extra.str()});
        write_field_csv(out, setup.partition, kappa, fields);

        console << std::setprecision(6) << "truth norm             " << report.truth_norm << '\n'
                << "log-conductivity error " << report.error_log_conductivity << '\n'
                << "logarithmic error      " << report.error_logarithmic << '\n'
                << "wrote " << path.string() << '\n';
        return report;
    }
    throw NumericalError("ten consecutive draws produced noisy data without a matrix logarithm");
}

inline void cmd_mesh_dump(const ExperimentConfig& c, const std::string& path, std::ostream& console) {
    const ElectrodeLayout layout(c.electrodes, c.coverage);
    const Mesh mesh = build_disk_mesh(c.mesh_nodes, c.model == ModelKind::Cem ? std::optional(layout) : std::nullopt);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    write_mesh(out, mesh);
    console << "wrote " << mesh.node_count() << " nodes, " << mesh.triangle_count() << " triangles to " << path << '\n';
}

// ---------------------------------------------------------------------------
// Self-test
// ---------------------------------------------------------------------------

struct SelfTestCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Multiplier applied to every self-test tolerance, from
/// EITLIN_SELFTEST_TOLERANCE_SCALE (default 1).
inline double selftest_tolerance_scale() {
    const char* raw = std::getenv("EITLIN_SELFTEST_TOLERANCE_SCALE");
    if (!raw || !*raw) return 1.0;
    char* end = nullptr;
    const double v = std::strtod(raw, &end);
    if (end == raw || *end != '\0' || !(v > 0.0)) {
        throw ConfigError("EITLIN_SELFTEST_TOLERANCE_SCALE must be a positive number, got '" + std::string(raw) + "'");
    }
    return v;
}

namespace detail {

inline double relative_difference(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const double scale = b.norm();
    return scale > 0.0 ? (a - b).norm() / scale : (a - b).norm();
}

inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n, double low, double high) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform(std::log(low), std::log(high));
    Eigen::MatrixXd x(n, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) x(i, j) = normal(rng);
    }
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
    const Eigen::MatrixXd q = qr.householderQ();
    Eigen::VectorXd mu(n);
    for (int i = 0; i < n; ++i) mu[i] = std::exp(uniform(rng));
    return q * mu.asDiagonal() * q.transpose();
}

inline Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(n, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) x(i, j) = normal(rng);
    }
    return 0.5 * (x + x.transpose());
}

/// max relative error of slices against central differences of the
/// forward map in conductivity coordinates, step 1e-4 relative.
inline double fd_slice_error(const ForwardModel& model, const PhysicalParameters& at, const JacobianTensor& j,
                             const std::vector<int>& params) {
    Eigen::VectorXd p(model.parameter_count());
    if (at.zeta) {
        p << at.sigma.values(), at.zeta->values();
    } else {
        p = at.sigma.values();
    }
    double worst = 0.0;
    for (int i : params) {
        const double h = 1e-4 * p[i];
        Eigen::VectorXd plus = p, minus = p;
        plus[i] += h;
        minus[i] -= h;
        const Eigen::MatrixXd fd = (model.measure(ParamKind::Conductivity, plus).matrix() -
                                    model.measure(ParamKind::Conductivity, minus).matrix()) /
                                   (2.0 * h);
        worst = std::max(worst, relative_difference(j.slice(i), fd));
    }
    return worst;
}

} // namespace detail

/// Oracle cross-validations and property checks on a reduced mesh.
inline std::vector<SelfTestCheck> cmd_selftest(std::ostream& console, int mesh_nodes = 8000) {
    const double scale = selftest_tolerance_scale();
    std::vector<SelfTestCheck> checks;
    auto record = [&](const std::string& name, double value, double tolerance) {
        const double tol = tolerance * scale;
        std::ostringstream d;
        d << std::setprecision(3) << std::scientific << value << " (tolerance " << tol << ")";
        checks.push_back({name, value <= tol, d.str()});
        console << (checks.back().passed ? "PASS " : "FAIL ") << name << ": " << d.str() << '\n';
    };

    std::mt19937_64 rng(20240601);
    std::normal_distribution<double> normal;
    const ElectrodeLayout layout(16, 0.46);
    const Mesh mesh = build_disk_mesh(mesh_nodes, layout);
    const Partition partition = build_partition(mesh, 1800);
    const ForwardModel continuum = ForwardModel::continuum(mesh, partition);
    const ForwardModel cem = ForwardModel::cem(mesh, partition, layout);
    const int cells = partition.cell_count();
    const ConductivityField unit = ConductivityField::constant(cells, 1.0);

    // homogeneous disk
    const ForwardResult base = continuum.evaluate({unit, std::nullopt});
    {
        const Eigen::VectorXd mu = sym_eig(base.matrix).values;
        const Eigen::VectorXd expect = concentric_disk_eigenvalues({0.5, 0.0}, 8);
        record("homogeneous-disk-spectrum", (mu - expect).cwiseQuotient(expect).cwiseAbs().maxCoeff(), 1e-2);
    }

    // concentric inclusion on a two-cell partition split at the inclusion radius
    {
        const Partition rings = concentric_partition(mesh, 0.5);
        const ForwardModel two = ForwardModel::continuum(mesh, rings);
        double worst = 0.0;
        for (double kappa : {std::log(2.0), -std::log(2.0)}) {
            Eigen::Vector2d sigma(std::exp(kappa), 1.0);
            const Eigen::VectorXd mu = sym_eig(two.measure({ConductivityField(sigma), std::nullopt})).values;
            const Eigen::VectorXd expect = concentric_disk_eigenvalues({0.5, kappa}, 8);
            worst = std::max(worst, (mu - expect).cwiseQuotient(expect).cwiseAbs().maxCoeff());
        }
        record("concentric-inclusion-spectrum", worst, 1e-2);
    }

    // Ohm scaling and reciprocity
    {
        Eigen::VectorXd kappa(cells);
        for (int i = 0; i < cells; ++i) kappa[i] = 0.5 * normal(rng);
        const ConductivityField sigma(kappa.array().exp().matrix());
        const ForwardResult r = continuum.evaluate({sigma, std::nullopt});
        const SymMatrix doubled = continuum.measure({ConductivityField(2.0 * sigma.values()), std::nullopt});
        record("ohm-scaling", detail::relative_difference(2.0 * doubled.matrix(), r.matrix.matrix()), 1e-12);
        record("ntd-reciprocity", r.raw_asymmetry, 1e-10);
        record("ntd-positivity", -sym_eig(r.matrix).values.minCoeff(), 0.0);
        Eigen::VectorXd zeta(16);
        for (int m = 0; m < 16; ++m) zeta[m] = 2.0 * std::exp(0.5 * normal(rng));
        const SymMatrix rm = cem.measure({sigma, ContactVector(zeta)});
        record("resistance-positivity", -sym_eig(rm).values.minCoeff(), 0.0);
    }

    // exact linearizations on spatially constant perturbations
    {
        const auto lin = linearize(continuum, {Method::Resistivity, Method::Logarithmic}, {unit, std::nullopt});
        double worst_inv = 0.0, worst_log = 0.0;
        for (double c : {-0.5, 1.0, 3.0}) {
            const SymMatrix truth = continuum.measure({ConductivityField::constant(cells, 1.0 / (1.0 + c)), std::nullopt});
            const SymMatrix pred = lin[0].evaluate(Eigen::VectorXd::Constant(cells, 1.0 + c));
            worst_inv = std::max(worst_inv, detail::relative_difference(pred.matrix(), truth.matrix()));
        }
        for (double c : {-1.0, 0.5, 2.0}) {
            const SymMatrix truth = continuum.measure({ConductivityField::constant(cells, std::exp(c)), std::nullopt});
            const SymMatrix pred = lin[1].predict(Eigen::VectorXd::Constant(cells, c));
            worst_log = std::max(worst_log, (pred.matrix() - logm_spd(truth).matrix()).norm());
        }
        record("resistivity-exact-on-constants", worst_inv, 1e-8);
        record("logarithm-affine-on-constants", worst_log, 1e-8);
    }

    // Jacobians against central differences
    {
        std::uniform_int_distribution<int> pick_cell(0, cells - 1);
        Eigen::VectorXd kappa(cells);
        for (int i = 0; i < cells; ++i) kappa[i] = 0.3 * normal(rng);
        const PhysicalParameters at{ConductivityField(kappa.array().exp().matrix()), std::nullopt};
        const JacobianTensor j = jacobian(continuum, at);
        std::vector<int> params;
        for (int k = 0; k < 5; ++k) params.push_back(pick_cell(rng));
        record("continuum-jacobian-fd", detail::fd_slice_error(continuum, at, j, params), 1e-3);

        Eigen::VectorXd zeta(16);
        for (int m = 0; m < 16; ++m) zeta[m] = 10.0 * std::exp(0.5 * normal(rng));
        const PhysicalParameters at_cem{at.sigma, ContactVector(zeta)};
        const JacobianTensor jc = jacobian(cem, at_cem);
        params = {pick_cell(rng), pick_cell(rng), pick_cell(rng), cells + 2, cells + 11};
        record("cem-jacobian-fd", detail::fd_slice_error(cem, at_cem, jc, params), 1e-3);

        // nonnegative direction gives a negative semidefinite derivative
        Eigen::VectorXd eta(cells);
        for (int i = 0; i < cells; ++i) eta[i] = std::abs(normal(rng));
        const double top = sym_eig(SymMatrix::symmetrized(j.contract(eta))).values.maxCoeff();
        record("jacobian-negativity", top / j.contract(eta).norm(), 1e-12);

        const JacobianTensor jk = reparametrize_jacobian(j, ParamKind::LogConductivity, kappa);
        const Eigen::MatrixXd lhs = jk.contract(eta);
        const Eigen::MatrixXd rhs = j.contract(kappa.array().exp().matrix().cwiseProduct(eta));
        record("chain-rule-log-conductivity", detail::relative_difference(lhs, rhs), 1e-12);
    }

    // matrix functions
    {
        double fd = 0.0, lin = 0.0, sym = 0.0, round_log = 0.0, round_exp = 0.0;
        for (int trial = 0; trial < 5; ++trial) {
            const SymMatrix a = SymMatrix::symmetrized(detail::random_spd(rng, 16, 0.05, 2.0));
            const SymMatrix e1 = SymMatrix::symmetrized(detail::random_symmetric(rng, 16));
            const SymMatrix e2 = SymMatrix::symmetrized(detail::random_symmetric(rng, 16));
            const double h = 1e-5;
            const Eigen::MatrixXd central = (logm_spd(SymMatrix::symmetrized(a.matrix() + h * e1.matrix())).matrix() -
                                             logm_spd(SymMatrix::symmetrized(a.matrix() - h * e1.matrix())).matrix()) /
                                            (2.0 * h);
            const EigenDecomposition eig = sym_eig(a);
            const Eigen::MatrixXd d1 = dlogm(eig, e1.matrix());
            const Eigen::MatrixXd d2 = dlogm(eig, e2.matrix());
            const Eigen::MatrixXd d12 = dlogm(eig, 2.0 * e1.matrix() - 3.0 * e2.matrix());
            fd = std::max(fd, detail::relative_difference(d1, central));
            lin = std::max(lin, detail::relative_difference(d12, 2.0 * d1 - 3.0 * d2));
            sym = std::max(sym, asymmetry(d1));
            round_log = std::max(round_log, detail::relative_difference(expm_sym(logm_spd(a)).matrix(), a.matrix()));
            const SymMatrix s = SymMatrix::symmetrized(5.0 * detail::random_symmetric(rng, 16) / 8.0);
            round_exp = std::max(round_exp, detail::relative_difference(logm_spd(expm_sym(s)).matrix(), s.matrix()));
        }
        record("dlogm-fd", fd, 1e-6);
        record("dlogm-linearity", lin, 1e-12);
        record("dlogm-symmetry", sym, 1e-12);
        record("exp-log-round-trip", round_log, 1e-10);
        record("log-exp-round-trip", round_exp, 1e-10);
    }

    // closed-form concentric spectrum
    {
        std::vector<double> grid;
        for (double k = -2.0; k <= 2.0 + 1e-12; k += 0.25) grid.push_back(k);
        grid.push_back(0.5);
        grid.push_back(-0.5);
        const OddSymmetryReport odd = verify_odd_log_symmetry(grid, 0.5, 8);
        record("odd-log-symmetry", odd.max_antisymmetry, 1e-12);
        record("vanishing-second-difference", odd.max_second_difference, 1e-8);
    }

    // determinism under fixed seeds
    {
        FieldSpec spec = field_preset("F3");
        const CovarianceFactor factor = build_covariance(partition, spec);
        const Eigen::VectorXd a = sample_log_conductivity(factor, spec, 99, 3);
        const Eigen::VectorXd b = sample_log_conductivity(factor, spec, 99, 3);
        BenchConfig bench;
        bench.field = spec;
        bench.samples = 4;
        bench.seed = 5;
        const BenchResult r1 = run_forward_benchmark(continuum, bench);
        bench.threads = 1;
        const BenchResult r2 = run_forward_benchmark(continuum, bench);
        const double diff = (a - b).cwiseAbs().maxCoeff() + (r1.per_sample - r2.per_sample).cwiseAbs().maxCoeff();
        record("fixed-seed-determinism", diff, 0.0);
    }
    return checks;
}

} // namespace eitlin
