#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "eitlin/error.hpp"
#include "eitlin/mesh.hpp"

namespace eitlin {

/// Gaussian log-conductivity on N cells with squared-exponential covariance
/// variance * exp(-|x_i - x_j|^2 / (2 length^2)).
struct FieldSpec {
    std::string name = "custom";
    int cells = 1800;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(1); ///< one entry (broadcast) or one per cell
    double variance = 1.0;
    double length = 1.0 / 3.0;

    void validate() const {
        require(cells >= 1, "field cell count must be positive");
        require(variance > 0.0 && std::isfinite(variance), "field variance must be positive");
        require(length > 0.0 && std::isfinite(length), "correlation length must be positive");
        require(mean.size() == 1 || mean.size() == cells, "field mean must be a scalar or have one entry per cell");
    }

    Eigen::VectorXd mean_vector() const {
        return mean.size() == 1 ? Eigen::VectorXd::Constant(cells, mean[0]) : mean;
    }
};

/// Independent lognormal contact conductances: log zeta_m ~ N(mean, variance).
struct ContactSpec {
    std::string name = "custom";
    int electrodes = 16;
    double mean = std::log(10.0);
    double variance = 1.0;

    void validate() const {
        require(electrodes >= 2, "contact spec needs at least two electrodes");
        require(variance > 0.0 && std::isfinite(variance), "contact variance must be positive");
        require(std::isfinite(mean), "contact mean must be finite");
    }

    Eigen::VectorXd mean_vector() const { return Eigen::VectorXd::Constant(electrodes, mean); }
};

inline FieldSpec field_preset(const std::string& name) {
    FieldSpec spec;
    spec.name = name;
    if (name == "F1") {
        spec.variance = 0.25, spec.length = 1.0 / 3.0;
    } else if (name == "F2") {
        spec.variance = 0.25, spec.length = 2.0 / 3.0;
    } else if (name == "F3") {
        spec.variance = 1.0, spec.length = 1.0 / 3.0;
    } else if (name == "F4") {
        spec.variance = 1.0, spec.length = 2.0 / 3.0;
    } else {
        throw ConfigError("unknown field preset \"" + name + "\" (expected F1-F4)");
    }
    return spec;
}

inline ContactSpec contact_preset(const std::string& name) {
    ContactSpec spec;
    spec.name = name;
    if (name == "C1") {
        spec.mean = std::log(10.0);
    } else if (name == "C2") {
        spec.mean = std::log(1000.0);
    } else {
        throw ConfigError("unknown contact preset \"" + name + "\" (expected C1-C2)");
    }
    return spec;
}

/// Lower Cholesky factor L of the (possibly jittered) covariance, so that
/// samples are mean + L z and the whitening operator is G = L^{-1}.
class CovarianceFactor {
public:
    CovarianceFactor(Eigen::MatrixXd covariance, double variance) : covariance_(std::move(covariance)) {
        require(covariance_.rows() == covariance_.cols(), "covariance must be square");
        const Eigen::Index n = covariance_.rows();
        for (double relative : {0.0, 1e-12, 1e-10, 1e-8}) {
            Eigen::MatrixXd jittered = covariance_;
            jittered.diagonal().array() += relative * variance;
            Eigen::LLT<Eigen::MatrixXd> llt(jittered);
            // pivots at round-off level mean the matrix is numerically singular
            const double floor = std::sqrt(std::numeric_limits<double>::epsilon() * variance);
            if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().diagonal().minCoeff() > floor) {
                factor_ = llt.matrixL();
                jitter_ = relative * variance;
                return;
            }
        }
        std::ostringstream msg;
        msg << "covariance of size " << n << " is not positive definite even with jitter " << 1e-8 * variance;
        throw NumericalError(msg.str());
    }

    int size() const { return static_cast<int>(factor_.rows()); }
    const Eigen::MatrixXd& covariance() const { return covariance_; }
    const Eigen::MatrixXd& factor() const { return factor_; }
    /// Diagonal shift that made the factorization succeed.
    double jitter() const { return jitter_; }

    /// L v
    Eigen::MatrixXd color(const Eigen::MatrixXd& v) const { return factor_.triangularView<Eigen::Lower>() * v; }
    /// G v = L^{-1} v
    Eigen::MatrixXd whiten(const Eigen::MatrixXd& v) const { return factor_.triangularView<Eigen::Lower>().solve(v); }
    /// Dense G.
    Eigen::MatrixXd whitening_matrix() const {
        return whiten(Eigen::MatrixXd::Identity(factor_.rows(), factor_.cols()));
    }

private:
    Eigen::MatrixXd covariance_;
    Eigen::MatrixXd factor_;
    double jitter_ = 0.0;
};

inline Eigen::MatrixXd squared_exponential_covariance(const Eigen::MatrixX2d& centers, double variance, double length) {
    const Eigen::Index n = centers.rows();
    Eigen::MatrixXd gamma(n, n);
    const double scale = 1.0 / (2.0 * length * length);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j; i < n; ++i) {
            const double d2 = (centers.row(i) - centers.row(j)).squaredNorm();
            gamma(i, j) = gamma(j, i) = i == j ? variance : variance * std::exp(-d2 * scale);
        }
    }
    return gamma;
}

inline CovarianceFactor build_covariance(const Partition& partition, const FieldSpec& spec) {
    spec.validate();
    if (partition.cell_count() != spec.cells) {
        throw ConfigError("field spec has " + std::to_string(spec.cells) + " cells but the partition has " +
                          std::to_string(partition.cell_count()));
    }
    Eigen::MatrixX2d centers(partition.cell_count(), 2);
    for (int i = 0; i < partition.cell_count(); ++i) centers.row(i) = partition.center(i).transpose();
    return CovarianceFactor(squared_exponential_covariance(centers, spec.variance, spec.length), spec.variance);
}

/// Independent random streams. Every draw is keyed by (seed, stream, index)
/// so results do not depend on evaluation order or thread count.
enum class Stream : std::uint64_t { Field = 1, Contact = 2, Noise = 3, Retry = 4 };

inline std::mt19937_64 make_rng(std::uint64_t seed, Stream stream, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

inline Eigen::VectorXd standard_normal(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
    return z;
}

/// kappa = mean + L z for sample `index` of the experiment seeded by `seed`.
inline Eigen::VectorXd sample_log_conductivity(const CovarianceFactor& factor, const FieldSpec& spec,
                                               std::uint64_t seed, std::uint64_t index = 0) {
    require(factor.size() == spec.cells, "covariance factor does not match the field spec");
    auto rng = make_rng(seed, Stream::Field, index);
    return spec.mean_vector() + factor.color(standard_normal(rng, spec.cells));
}

/// Log-conductances upsilon, one per electrode.
inline Eigen::VectorXd sample_contacts(const ContactSpec& spec, std::uint64_t seed, std::uint64_t index = 0) {
    spec.validate();
    auto rng = make_rng(seed, Stream::Contact, index);
    return spec.mean_vector() + std::sqrt(spec.variance) * standard_normal(rng, spec.electrodes);
}

/// L2(Omega) norm of a piecewise-constant field: sqrt(sum v_i^2 area_i).
inline double l2_norm(const Eigen::VectorXd& values, const Partition& partition) {
    require(values.size() == partition.cell_count(), "field length must equal the cell count");
    return std::sqrt((values.array().square() * partition.areas().array()).sum());
}

} // namespace eitlin
