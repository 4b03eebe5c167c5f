#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "eitlin/bench.hpp"
#include "eitlin/error.hpp"
#include "eitlin/forward.hpp"
#include "eitlin/matfun.hpp"
#include "eitlin/parallel.hpp"
#include "eitlin/randfield.hpp"

namespace eitlin {

struct ReconResult {
    Eigen::VectorXd kappa;   ///< reconstructed log-conductivity per cell
    Eigen::VectorXd upsilon; ///< reconstructed log-contact conductances (electrode model)
    double residual_norm = 0.0; ///< ||model(y, w) - data||_F
    double t = 0.0;
};

/// Data term of the one-step reconstruction: the noisy matrix itself for the
/// log-conductivity method, its matrix logarithm for the logarithmic one.
inline SymMatrix reconstruction_data(Method method, const SymMatrix& measurement) {
    if (method != Method::Logarithmic) return measurement;
    const EigenDecomposition eig = sym_eig(measurement);
    if (!(eig.values.minCoeff() > 0.0)) {
        throw NumericalError("log of noisy data undefined: smallest eigenvalue " +
                             std::to_string(eig.values.minCoeff()));
    }
    return logm_spd(measurement);
}

/// Minimizes ||lin(y, w) - D||_F^2 + t^2 ||G (y - prior_mean)||^2 over cell
/// log-conductivities y and unregularized contact parameters w.
///
/// With y = prior_mean + L z (L the prior factor, G = L^{-1}) this is ridge
/// regression in z. The contact block A_w is eliminated by projecting onto
/// the orthogonal complement of its range, and the projected operator is
/// factored once by an SVD, so every t costs only a diagonal rescaling.
class TikhonovSolver {
public:
    TikhonovSolver(const LinearizedModel& model, const CovarianceFactor& prior, Eigen::VectorXd prior_mean)
        : model_(model), prior_mean_(std::move(prior_mean)) {
        require(model.method() == Method::LogConductivity || model.method() == Method::Logarithmic,
                "one-step reconstruction needs a log-conductivity or logarithmic linearization");
        const int cells = model.cell_count();
        const int contacts = model.parameter_count() - cells;
        require(prior.size() == cells, "prior covariance does not match the cell count");
        require(prior_mean_.size() == cells, "prior mean length must equal the cell count");

        const Eigen::MatrixXd& a = model_.jacobian().columns();
        const Eigen::MatrixXd b = a.leftCols(cells) * prior.factor().triangularView<Eigen::Lower>();
        Eigen::MatrixXd projected = b;
        if (contacts > 0) {
            contact_qr_.compute(a.rightCols(contacts));
            const Eigen::VectorXd r_diag = contact_qr_.matrixQR().diagonal().head(contacts).cwiseAbs();
            if (!(r_diag.minCoeff() > 1e-12 * r_diag.maxCoeff())) {
                throw NumericalError("contact block of the jacobian is rank deficient");
            }
            q_w_ = contact_qr_.householderQ() * Eigen::MatrixXd::Identity(a.rows(), contacts);
            projected -= q_w_ * (q_w_.transpose() * b);
        }
        Eigen::BDCSVD<Eigen::MatrixXd> svd(projected, Eigen::ComputeThinU | Eigen::ComputeThinV);
        u_ = svd.matrixU();
        s_ = svd.singularValues();
        colored_v_ = prior.factor().triangularView<Eigen::Lower>() * svd.matrixV();
        if (contacts > 0) qtbv_ = q_w_.transpose() * (b * svd.matrixV());
        contacts_ = contacts;
        // affine part of the model at the prior mean, with contacts at the expansion point
        offset_ = model.base().matrix().reshaped() + a.leftCols(cells) * (prior_mean_ - model.point().head(cells));
    }

    const LinearizedModel& model() const { return model_; }
    const Eigen::VectorXd& singular_values() const { return s_; }

    /// Per-datum state shared by every regularization parameter.
    struct Prepared {
        Eigen::VectorXd rhs;       ///< vec(D) minus the model at the prior mean
        Eigen::VectorXd projected; ///< rhs with the contact range removed
        Eigen::VectorXd rotated;   ///< U^T projected
    };

    Prepared prepare(const SymMatrix& data) const {
        require(data.dim() == model_.base().dim(), "data dimension does not match the model");
        Prepared p;
        p.rhs = data.matrix().reshaped() - offset_;
        p.projected = p.rhs;
        if (contacts_ > 0) p.projected -= q_w_ * (q_w_.transpose() * p.rhs);
        p.rotated = u_.transpose() * p.projected;
        return p;
    }

    ReconResult solve(const Prepared& p, double t) const {
        require(t > 0.0 && std::isfinite(t), "regularization parameter must be positive");
        const Eigen::VectorXd c = filter(t).cwiseProduct(p.rotated);
        ReconResult out;
        out.t = t;
        out.kappa = prior_mean_ + colored_v_ * c;
        if (contacts_ > 0) {
            // w - w0 = R^{-1} Q^T (rhs - B z), and z = V c
            const Eigen::VectorXd qtr = q_w_.transpose() * p.rhs - qtbv_ * c;
            const Eigen::VectorXd dw = contact_qr_.matrixQR()
                                           .topLeftCorner(contacts_, contacts_)
                                           .triangularView<Eigen::Upper>()
                                           .solve(qtr);
            out.upsilon = model_.point().tail(contacts_) + contact_qr_.colsPermutation() * dw;
        }
        // the optimal contact block fits the contact range exactly
        out.residual_norm = (u_ * s_.cwiseProduct(c) - p.projected).norm();
        return out;
    }

    ReconResult solve(const SymMatrix& data, double t) const { return solve(prepare(data), t); }

    /// ||G (kappa_t - prior_mean)|| = ||z_t||
    double prior_seminorm(const Prepared& p, double t) const { return filter(t).cwiseProduct(p.rotated).norm(); }

private:
    Eigen::VectorXd filter(double t) const { return (s_.array() / (s_.array().square() + t * t)).matrix(); }

    LinearizedModel model_;
    Eigen::VectorXd prior_mean_;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> contact_qr_;
    Eigen::MatrixXd q_w_;
    Eigen::MatrixXd qtbv_;
    Eigen::MatrixXd u_;
    Eigen::VectorXd s_;
    Eigen::MatrixXd colored_v_;
    Eigen::VectorXd offset_;
    int contacts_ = 0;
};

/// One linearized model, one datum and one regularization parameter.
struct ReconProblem {
    const LinearizedModel& model;
    SymMatrix measurement; ///< noisy forward matrix; its logarithm is taken for the logarithmic method
    const CovarianceFactor& prior;
    Eigen::VectorXd prior_mean;
    double t = 1e-3;
};

inline ReconResult one_step_reconstruct(const ReconProblem& problem) {
    const TikhonovSolver solver(problem.model, problem.prior, problem.prior_mean);
    return solver.solve(reconstruction_data(problem.model.method(), problem.measurement), problem.t);
}

/// ||kappa_t - kappa||_{L2(Omega)} for piecewise-constant fields.
inline double reconstruction_error(const Eigen::VectorXd& reconstructed, const Eigen::VectorXd& truth,
                                   const Partition& partition) {
    require(reconstructed.size() == truth.size(), "field lengths differ");
    return l2_norm(reconstructed - truth, partition);
}

inline double contact_error(const Eigen::VectorXd& reconstructed, const Eigen::VectorXd& truth) {
    require(reconstructed.size() == truth.size(), "contact vector lengths differ");
    return (reconstructed - truth).norm();
}

/// `count` logarithmically spaced points from delta*1e-3 to delta*1e3.
inline std::vector<double> default_t_grid(double delta, int count = 40) {
    require(delta > 0.0, "noise level must be positive");
    require(count >= 1, "t grid needs at least one point");
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double e = count == 1 ? 0.0 : -3.0 + 6.0 * i / (count - 1);
        grid[static_cast<std::size_t>(i)] = delta * std::pow(10.0, e);
    }
    return grid;
}

/// Draws, clean and noisy measurements shared by every method and every t.
struct InverseSamples {
    std::vector<Eigen::VectorXd> kappa;
    std::vector<Eigen::VectorXd> upsilon; ///< empty vectors for the continuum model
    std::vector<SymMatrix> noisy;
    std::vector<char> accepted; ///< noisy matrix positive definite
    double delta = 0.0;
    int rejected = 0;
    std::uint64_t seed = 0;
};

/// Draws `samples` truths, sets the noise level from the clean matrices of at
/// least 100 draws of the same stream, and adds noise. A draw whose noisy
/// matrix is not positive definite is rejected for every method.
inline InverseSamples draw_inverse_samples(const ForwardModel& model, const CovarianceFactor& factor,
                                           const FieldSpec& field, const std::optional<ContactSpec>& contacts,
                                           int samples, std::uint64_t seed, unsigned threads = 0) {
    require(samples >= 1, "sample count must be positive");
    const int draws = std::max(samples, 100);
    std::vector<Eigen::VectorXd> logp(static_cast<std::size_t>(draws));
    std::vector<SymMatrix> clean(static_cast<std::size_t>(draws));
    parallel_for(clean.size(), threads, [&](std::size_t i) {
        logp[i] = draw_log_parameters(factor, field, contacts, seed, i);
        clean[i] = model.measure(physical_from_log(logp[i], model.cell_count()));
    });

    InverseSamples out;
    out.seed = seed;
    out.delta = noise_level_from(clean);
    const auto n = static_cast<std::size_t>(samples);
    out.kappa.resize(n);
    out.upsilon.resize(n);
    out.noisy.resize(n);
    out.accepted.assign(n, 0);
    const int cells = model.cell_count();
    for (std::size_t i = 0; i < n; ++i) {
        out.kappa[i] = logp[i].head(cells);
        out.upsilon[i] = logp[i].tail(logp[i].size() - cells);
        auto rng = make_rng(seed, Stream::Noise, i);
        out.noisy[i] = add_measurement_noise(clean[i], out.delta, rng);
        out.accepted[i] = is_spd(out.noisy[i]) ? 1 : 0;
    }
    out.rejected = static_cast<int>(std::count(out.accepted.begin(), out.accepted.end(), 0));
    if (out.rejected == samples) throw NumericalError("every noisy measurement lost positive definiteness");
    return out;
}

struct SweepResult {
    Method method = Method::Logarithmic;
    std::vector<double> t;
    Eigen::VectorXd iota;       ///< mean L2 reconstruction error per t
    Eigen::VectorXd iota_error; ///< standard error per t
    Eigen::VectorXd d;          ///< mean contact error per t (electrode model)
    Eigen::VectorXd d_error;
    std::vector<char> valid;    ///< false where every sample failed
    Eigen::MatrixXd per_sample; ///< accepted samples x t, L2 errors
    int best = 0;               ///< index of the optimal t
    int n_samples = 0;

    double tau() const { return t[static_cast<std::size_t>(best)]; }
    double best_iota() const { return iota[best]; }
    double best_d() const { return d.size() ? d[best] : 0.0; }
};

/// Average reconstruction errors over the accepted samples for every t on
/// the grid, and the grid point that minimizes the conductivity error.
inline SweepResult sweep_regularization(const LinearizedModel& model, const CovarianceFactor& prior,
                                        const Eigen::VectorXd& prior_mean, const InverseSamples& samples,
                                        const Partition& partition, const std::vector<double>& t_grid,
                                        unsigned threads = 0) {
    require(!t_grid.empty(), "t grid must not be empty");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        require(t_grid[i] > 0.0, "t grid entries must be positive");
        require(i == 0 || t_grid[i] > t_grid[i - 1], "t grid must be strictly increasing");
    }
    const TikhonovSolver solver(model, prior, prior_mean);
    const bool cem = model.parameter_count() > model.cell_count();
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < samples.accepted.size(); ++i) {
        if (samples.accepted[i]) rows.push_back(i);
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto k = static_cast<Eigen::Index>(t_grid.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    Eigen::MatrixXd iota = Eigen::MatrixXd::Constant(n, k, nan);
    Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n, k, nan);
    parallel_for(rows.size(), threads, [&](std::size_t r) {
        const std::size_t i = rows[r];
        const auto prepared = solver.prepare(reconstruction_data(model.method(), samples.noisy[i]));
        for (Eigen::Index j = 0; j < k; ++j) {
            const ReconResult res = solver.solve(prepared, t_grid[static_cast<std::size_t>(j)]);
            if (!res.kappa.allFinite() || (cem && !res.upsilon.allFinite())) continue;
            const auto row = static_cast<Eigen::Index>(r);
            iota(row, j) = reconstruction_error(res.kappa, samples.kappa[i], partition);
            if (cem) d(row, j) = contact_error(res.upsilon, samples.upsilon[i]);
        }
    });

    SweepResult out;
    out.method = model.method();
    out.t = t_grid;
    out.per_sample = iota;
    out.n_samples = static_cast<int>(n);
    out.iota = out.iota_error = Eigen::VectorXd::Constant(k, nan);
    if (cem) out.d = out.d_error = Eigen::VectorXd::Constant(k, nan);
    out.valid.assign(static_cast<std::size_t>(k), 0);
    auto column_stats = [](const Eigen::VectorXd& col, double& mean, double& se) {
        std::vector<double> v;
        for (double x : col) {
            if (std::isfinite(x)) v.push_back(x);
        }
        if (v.empty()) return false;
        const Eigen::Map<const Eigen::VectorXd> m(v.data(), static_cast<Eigen::Index>(v.size()));
        mean = m.mean();
        se = v.size() < 2 ? 0.0 : std::sqrt((m.array() - mean).square().sum() / (v.size() - 1) / v.size());
        return true;
    };
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < k; ++j) {
        if (!column_stats(iota.col(j), out.iota[j], out.iota_error[j])) continue;
        out.valid[static_cast<std::size_t>(j)] = 1;
        if (cem) column_stats(d.col(j), out.d[j], out.d_error[j]);
        if (out.iota[j] < best) {
            best = out.iota[j];
            out.best = static_cast<int>(j);
        }
    }
    if (!std::isfinite(best)) throw NumericalError("every reconstruction failed for every t");
    return out;
}

inline void write_sweep_csv(std::ostream& out, const SweepResult& r) {
    const bool cem = r.d.size() > 0;
    out << "t,iota,std_err" << (cem ? ",d,d_std_err" : "") << '\n' << std::setprecision(10);
    for (std::size_t j = 0; j < r.t.size(); ++j) {
        if (!r.valid[j]) continue;
        const auto i = static_cast<Eigen::Index>(j);
        out << r.t[j] << ',' << r.iota[i] << ',' << r.iota_error[i];
        if (cem) out << ',' << r.d[i] << ',' << r.d_error[i];
        out << '\n';
    }
    if (!out) throw IoError("failed to write sweep curve");
}

/// Cell index, center and truth/reconstruction columns for plotting.
inline void write_field_csv(std::ostream& out, const Partition& partition, const Eigen::VectorXd& truth,
                            const std::vector<std::pair<std::string, Eigen::VectorXd>>& fields) {
    require(truth.size() == partition.cell_count(), "truth length must equal the cell count");
    out << "cell,x,y,kappa_truth";
    for (const auto& [name, values] : fields) {
        require(values.size() == truth.size(), "field length must equal the cell count");
        out << ",kappa_" << name;
    }
    out << '\n' << std::setprecision(17);
    for (int i = 0; i < partition.cell_count(); ++i) {
        out << i << ',' << partition.center(i).x() << ',' << partition.center(i).y() << ',' << truth[i];
        for (const auto& field : fields) out << ',' << field.second[i];
        out << '\n';
    }
    if (!out) throw IoError("failed to write field table");
}

} // namespace eitlin
