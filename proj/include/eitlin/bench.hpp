#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "eitlin/error.hpp"
#include "eitlin/forward.hpp"
#include "eitlin/jacobian.hpp"
#include "eitlin/matfun.hpp"
#include "eitlin/parallel.hpp"
#include "eitlin/randfield.hpp"

namespace eitlin {

/// The four linearization targets: the forward map in conductivity,
/// resistivity or log-conductivity coordinates, and the logarithm of the
/// forward map in log-conductivity coordinates.
enum class Method { Conductivity, Resistivity, LogConductivity, Logarithmic };

inline constexpr Method kAllMethods[] = {Method::Conductivity, Method::Resistivity, Method::LogConductivity,
                                         Method::Logarithmic};

inline std::string_view to_string(Method m) {
    switch (m) {
    case Method::Conductivity: return "conductivity";
    case Method::Resistivity: return "resistivity";
    case Method::LogConductivity: return "log-conductivity";
    case Method::Logarithmic: return "logarithmic";
    }
    return "?";
}

inline Method parse_method(std::string_view name) {
    for (Method m : kAllMethods) {
        if (name == to_string(m)) return m;
    }
    throw ConfigError("unknown method \"" + std::string(name) +
                      "\" (expected conductivity, resistivity, log-conductivity or logarithmic)");
}

inline ParamKind param_kind(Method m) {
    switch (m) {
    case Method::Conductivity: return ParamKind::Conductivity;
    case Method::Resistivity: return ParamKind::Resistivity;
    case Method::LogConductivity:
    case Method::Logarithmic: return ParamKind::LogConductivity;
    }
    return ParamKind::Conductivity;
}

/// First-order model p -> base + sum_i J_i (p_i - p0_i). For the logarithmic
/// method the base is log of the forward matrix and evaluate() returns the
/// matrix exponential of the affine prediction.
class LinearizedModel {
public:
    LinearizedModel(Method method, SymMatrix base, JacobianTensor jacobian)
        : method_(method), base_(std::move(base)), jacobian_(std::move(jacobian)) {
        require(base_.dim() == jacobian_.dim(), "base matrix and jacobian dimensions differ");
        require(jacobian_.kind() == param_kind(method_), "jacobian coordinates do not match the method");
        require(jacobian_.logarithmic() == (method_ == Method::Logarithmic),
                "logarithmic method needs the jacobian of the logarithm");
    }

    Method method() const { return method_; }
    ParamKind kind() const { return param_kind(method_); }
    const Eigen::VectorXd& point() const { return jacobian_.point(); }
    const SymMatrix& base() const { return base_; }
    const JacobianTensor& jacobian() const { return jacobian_; }
    int parameter_count() const { return jacobian_.parameter_count(); }
    int cell_count() const { return jacobian_.cell_count(); }

    /// Affine prediction in the model's own output space.
    SymMatrix predict(const Eigen::VectorXd& p) const {
        require(p.size() == parameter_count(), "parameter vector length must equal the parameter count");
        return SymMatrix::symmetrized(base_.matrix() + jacobian_.contract(p - point()));
    }

    /// Predicted measurement matrix.
    SymMatrix evaluate(const Eigen::VectorXd& p) const {
        return method_ == Method::Logarithmic ? expm_sym(predict(p)) : predict(p);
    }

    /// Parameters in this model's coordinates from log-parameters [kappa; upsilon].
    Eigen::VectorXd coordinates(const Eigen::VectorXd& log_params) const {
        return from_physical(kind(), log_params.array().exp().matrix());
    }

private:
    Method method_;
    SymMatrix base_;
    JacobianTensor jacobian_;
};

/// Linearizations of `model` for each method around the physical point
/// `expansion`, all sharing one forward solve and one Jacobian assembly.
inline std::vector<LinearizedModel> linearize(const ForwardModel& model, const std::vector<Method>& methods,
                                              const PhysicalParameters& expansion) {
    const ForwardResult r = model.evaluate(expansion);
    const JacobianTensor j =
        model.is_cem() ? cem_jacobian(model.cem_system(), {r.potentials, r.electrode_potentials}, expansion.sigma,
                                      *expansion.zeta)
                       : continuum_jacobian(model.continuum_system(), r.potentials, expansion.sigma);
    std::vector<LinearizedModel> out;
    out.reserve(methods.size());
    for (Method m : methods) {
        const JacobianTensor jk = reparametrize_jacobian(j, param_kind(m), from_physical(param_kind(m), j.point()));
        if (m == Method::Logarithmic) {
            out.emplace_back(m, logm_spd(r.matrix), log_forward_jacobian(r.matrix, jk));
        } else {
            out.emplace_back(m, r.matrix, jk);
        }
    }
    return out;
}

inline LinearizedModel linearize(const ForwardModel& model, Method method, const PhysicalParameters& expansion) {
    return linearize(model, std::vector<Method>{method}, expansion).front();
}

/// Unit conductivity and, for the electrode model, contacts exp(contact mean).
inline PhysicalParameters default_expansion(const ForwardModel& model, const std::optional<ContactSpec>& contacts) {
    PhysicalParameters p{ConductivityField::constant(model.cell_count(), 1.0), std::nullopt};
    if (model.is_cem()) {
        require(contacts.has_value(), "electrode model linearization needs a contact spec");
        require(contacts->electrodes == model.contact_count(), "contact spec does not match the electrode count");
        p.zeta = ContactVector::constant(model.contact_count(), std::exp(contacts->mean));
    }
    return p;
}

/// ||model(p) - truth||_F / ||truth||_F with p the sample's log-parameters
/// [kappa; upsilon] mapped into the model's coordinates.
inline double linearization_error_sample(const LinearizedModel& model, const Eigen::VectorXd& log_params,
                                         const SymMatrix& truth) {
    const SymMatrix prediction = model.evaluate(model.coordinates(log_params));
    return (prediction.matrix() - truth.matrix()).norm() / truth.norm();
}

inline bool is_spd(const SymMatrix& a) { return sym_eig(a).values.minCoeff() > 0.0; }

/// Draws sample `index`: log-parameters [kappa; upsilon] for the model.
inline Eigen::VectorXd draw_log_parameters(const CovarianceFactor& factor, const FieldSpec& field,
                                           const std::optional<ContactSpec>& contacts, std::uint64_t seed,
                                           std::uint64_t index) {
    const Eigen::VectorXd kappa = sample_log_conductivity(factor, field, seed, index);
    if (!contacts) return kappa;
    const Eigen::VectorXd upsilon = sample_contacts(*contacts, seed, index);
    Eigen::VectorXd out(kappa.size() + upsilon.size());
    out << kappa, upsilon;
    return out;
}

inline PhysicalParameters physical_from_log(const Eigen::VectorXd& log_params, int cell_count) {
    return apply_parametrization(ParamKind::LogConductivity, log_params, cell_count);
}

struct BenchConfig {
    FieldSpec field;
    std::optional<ContactSpec> contacts; ///< required for the electrode model
    std::vector<Method> methods{std::begin(kAllMethods), std::end(kAllMethods)};
    int samples = 2000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    double max_rejection_fraction = 0.01;
};

struct BenchResult {
    std::string field;
    std::string contacts; ///< empty for the continuum model
    std::vector<Method> methods;
    Eigen::VectorXd mean_error;
    Eigen::VectorXd std_error;
    Eigen::MatrixXd per_sample; ///< accepted samples x methods, in sample order
    int n_samples = 0;
    int rejected = 0;
    std::uint64_t seed = 0;

    /// Standard error of the mean of the paired difference e(a) - e(b).
    double paired_std_error(int a, int b) const {
        if (n_samples < 2) return 0.0;
        const Eigen::VectorXd d = per_sample.col(a) - per_sample.col(b);
        const double mean = d.mean();
        return std::sqrt((d.array() - mean).square().sum() / (n_samples - 1) / n_samples);
    }

    int index_of(Method m) const {
        const auto it = std::find(methods.begin(), methods.end(), m);
        require(it != methods.end(), "method not part of the benchmark");
        return static_cast<int>(it - methods.begin());
    }
};

inline void summarize_columns(const Eigen::MatrixXd& per_sample, Eigen::VectorXd& mean, Eigen::VectorXd& std_error) {
    const Eigen::Index n = per_sample.rows();
    mean = n > 0 ? Eigen::VectorXd(per_sample.colwise().mean().transpose()) : Eigen::VectorXd::Zero(per_sample.cols());
    std_error = Eigen::VectorXd::Zero(per_sample.cols());
    if (n < 2) return;
    for (Eigen::Index c = 0; c < per_sample.cols(); ++c) {
        const double var = (per_sample.col(c).array() - mean[c]).square().sum() / static_cast<double>(n - 1);
        std_error[c] = std::sqrt(var / static_cast<double>(n));
    }
}

/// Monte-Carlo linearization errors. Every method sees the same draws; a
/// draw whose true matrix is not positive definite is rejected for all.
inline BenchResult run_forward_benchmark(const ForwardModel& model, const BenchConfig& config) {
    require(config.samples >= 1, "sample count must be positive");
    require(!config.methods.empty(), "at least one method is required");
    require(model.is_cem() == config.contacts.has_value(),
            model.is_cem() ? "electrode model needs a contact spec" : "continuum model takes no contact spec");
    const CovarianceFactor factor = build_covariance(model.partition(), config.field);
    const auto models = linearize(model, config.methods, default_expansion(model, config.contacts));

    const auto n = static_cast<std::size_t>(config.samples);
    const auto k = static_cast<Eigen::Index>(config.methods.size());
    Eigen::MatrixXd errors(static_cast<Eigen::Index>(n), k);
    std::vector<char> accepted(n, 0);
    parallel_for(n, config.threads, [&](std::size_t i) {
        const Eigen::VectorXd logp = draw_log_parameters(factor, config.field, config.contacts, config.seed, i);
        const SymMatrix truth = model.measure(physical_from_log(logp, model.cell_count()));
        if (!is_spd(truth)) return;
        accepted[i] = 1;
        for (Eigen::Index m = 0; m < k; ++m) {
            errors(static_cast<Eigen::Index>(i), m) =
                linearization_error_sample(models[static_cast<std::size_t>(m)], logp, truth);
        }
    });

    BenchResult out;
    out.field = config.field.name;
    out.contacts = config.contacts ? config.contacts->name : "";
    out.methods = config.methods;
    out.seed = config.seed;
    const auto kept = static_cast<int>(std::count(accepted.begin(), accepted.end(), 1));
    out.n_samples = kept;
    out.rejected = config.samples - kept;
    if (out.rejected > config.max_rejection_fraction * config.samples) {
        throw NumericalError(std::to_string(out.rejected) + " of " + std::to_string(config.samples) +
                             " samples produced a non positive-definite forward matrix");
    }
    out.per_sample.resize(kept, k);
    for (std::size_t i = 0, row = 0; i < n; ++i) {
        if (accepted[i]) out.per_sample.row(static_cast<Eigen::Index>(row++)) = errors.row(static_cast<Eigen::Index>(i));
    }
    summarize_columns(out.per_sample, out.mean_error, out.std_error);
    return out;
}

inline void write_bench_csv(std::ostream& out, const BenchResult& r) {
    out << "method,field,mean_error,std_error,n_samples,seed\n" << std::setprecision(10);
    const std::string field = r.contacts.empty() ? r.field : r.field + "/" + r.contacts;
    for (std::size_t m = 0; m < r.methods.size(); ++m) {
        out << to_string(r.methods[m]) << ',' << field << ',' << r.mean_error[static_cast<Eigen::Index>(m)] << ','
            << r.std_error[static_cast<Eigen::Index>(m)] << ',' << r.n_samples << ',' << r.seed << '\n';
    }
    if (!out) throw IoError("failed to write benchmark table");
}

// ---------------------------------------------------------------------------
// Measurement noise
// ---------------------------------------------------------------------------

/// Adds i.i.d. N(0, delta^2) to every entry, then symmetrizes.
inline SymMatrix add_measurement_noise(const SymMatrix& truth, double delta, std::mt19937_64& rng) {
    require(delta > 0.0 && std::isfinite(delta), "noise level must be positive");
    const int n = truth.dim();
    std::normal_distribution<double> normal(0.0, delta);
    Eigen::MatrixXd noisy = truth.matrix();
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) noisy(i, j) += normal(rng);
    }
    return SymMatrix::symmetrized(noisy);
}

/// 1e-3 times the mean of the largest entry over the given clean matrices.
inline double noise_level_from(const std::vector<SymMatrix>& truths) {
    require(!truths.empty(), "noise level needs at least one matrix");
    double sum = 0.0;
    for (const auto& a : truths) sum += a.matrix().maxCoeff();
    return 1e-3 * sum / static_cast<double>(truths.size());
}

/// Monte-Carlo noise level over the first `samples` draws of the experiment.
inline double estimate_noise_level(const ForwardModel& model, const FieldSpec& field,
                                   const std::optional<ContactSpec>& contacts, int samples, std::uint64_t seed,
                                   unsigned threads = 0) {
    require(samples >= 100, "noise level estimate needs at least 100 samples");
    const CovarianceFactor factor = build_covariance(model.partition(), field);
    std::vector<SymMatrix> truths(static_cast<std::size_t>(samples));
    parallel_for(truths.size(), threads, [&](std::size_t i) {
        const Eigen::VectorXd logp = draw_log_parameters(factor, field, contacts, seed, i);
        truths[i] = model.measure(physical_from_log(logp, model.cell_count()));
    });
    return noise_level_from(truths);
}

} // namespace eitlin
