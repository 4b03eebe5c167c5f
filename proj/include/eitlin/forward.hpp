#pragma once

#include <cmath>
#include <iomanip>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>

#include <Eigen/Core>

#include "eitlin/basis.hpp"
#include "eitlin/error.hpp"
#include "eitlin/fem.hpp"
#include "eitlin/mesh.hpp"

namespace eitlin {

/// Relative Frobenius asymmetry ||A - A^T|| / ||A||.
inline double asymmetry(const Eigen::MatrixXd& a) {
    const double norm = a.norm();
    return norm > 0.0 ? (a - a.transpose()).norm() / norm : 0.0;
}

/// Dense real symmetric matrix. Construction checks symmetry; use
/// symmetrized() for matrices that are symmetric only up to round-off.
class SymMatrix {
public:
    SymMatrix() = default;

    explicit SymMatrix(Eigen::MatrixXd a, double tolerance = 1e-12) : a_(std::move(a)) {
        require(a_.rows() == a_.cols(), "symmetric matrix must be square");
        const double asym = asymmetry(a_);
        if (asym > tolerance) {
            throw ArgumentError("matrix is not symmetric (relative asymmetry " + std::to_string(asym) + ")");
        }
    }

    static SymMatrix symmetrized(const Eigen::MatrixXd& a) {
        require(a.rows() == a.cols(), "symmetric matrix must be square");
        return SymMatrix(0.5 * (a + a.transpose()), 0.0);
    }

    static SymMatrix identity(int n) { return SymMatrix(Eigen::MatrixXd::Identity(n, n), 0.0); }

    int dim() const { return static_cast<int>(a_.rows()); }
    const Eigen::MatrixXd& matrix() const { return a_; }
    double operator()(int i, int j) const { return a_(i, j); }
    double norm() const { return a_.norm(); }

private:
    Eigen::MatrixXd a_;
};

// ---------------------------------------------------------------------------
// Parametrizations
// ---------------------------------------------------------------------------

enum class ParamKind { Conductivity, Resistivity, LogConductivity };

inline std::string_view to_string(ParamKind kind) {
    switch (kind) {
    case ParamKind::Conductivity: return "conductivity";
    case ParamKind::Resistivity: return "resistivity";
    case ParamKind::LogConductivity: return "log-conductivity";
    }
    return "?";
}

/// Parameter values in `kind` coordinates -> physical conductances.
inline Eigen::VectorXd to_physical(ParamKind kind, const Eigen::VectorXd& p) {
    switch (kind) {
    case ParamKind::Conductivity:
    case ParamKind::Resistivity:
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            if (!(p[i] > 0.0)) {
                throw ArgumentError(std::string(to_string(kind)) + " entry " + std::to_string(i) +
                                    " must be positive, got " + std::to_string(p[i]));
            }
        }
        return kind == ParamKind::Conductivity ? Eigen::VectorXd(p) : Eigen::VectorXd(p.cwiseInverse());
    case ParamKind::LogConductivity: return p.array().exp().matrix();
    }
    return p;
}

/// Physical conductances -> parameter values in `kind` coordinates.
inline Eigen::VectorXd from_physical(ParamKind kind, const Eigen::VectorXd& sigma) {
    switch (kind) {
    case ParamKind::Conductivity: return sigma;
    case ParamKind::Resistivity: return sigma.cwiseInverse();
    case ParamKind::LogConductivity: return sigma.array().log().matrix();
    }
    return sigma;
}

/// Conductivity and, for the electrode model, contact conductances.
struct PhysicalParameters {
    ConductivityField sigma;
    std::optional<ContactVector> zeta;
};

/// Splits p = [cell values; contact values] and maps both blocks through
/// the same elementary function (identity, reciprocal or exponential).
inline PhysicalParameters apply_parametrization(ParamKind kind, const Eigen::VectorXd& p, int cell_count) {
    require(p.size() >= cell_count, "parameter vector shorter than the cell count");
    const Eigen::VectorXd physical = to_physical(kind, p);
    PhysicalParameters out{ConductivityField(physical.head(cell_count)), std::nullopt};
    if (p.size() > cell_count) out.zeta = ContactVector(physical.tail(p.size() - cell_count));
    return out;
}

inline ConductivityField apply_parametrization(ParamKind kind, const Eigen::VectorXd& p) {
    return ConductivityField(to_physical(kind, p));
}

// ---------------------------------------------------------------------------
// Forward maps
// ---------------------------------------------------------------------------

/// Measurement matrix together with the states that produced it.
struct ForwardResult {
    SymMatrix matrix;
    double raw_asymmetry = 0.0;   ///< before symmetrization
    Eigen::MatrixXd potentials;   ///< nodal potentials, one column per basis current
    Eigen::MatrixXd electrode_potentials; ///< electrode model only
};

/// Fully discrete forward operator: either the n x n Neumann-to-Dirichlet
/// matrix in the trigonometric basis or the (M-1) x (M-1) resistance matrix
/// in the electrode Fourier basis. Shares one assembled discretization
/// across evaluations; evaluate() is const and thread-safe.
class ForwardModel {
public:
    static ForwardModel continuum(const Mesh& mesh, const Partition& partition, const TrigBasis& basis = TrigBasis(16)) {
        ForwardModel model;
        model.continuum_ = std::make_shared<const ContinuumSystem>(mesh, partition);
        model.trig_ = basis;
        model.loads_ = model.continuum_->load_matrix(basis);
        model.cells_ = partition.cell_count();
        model.partition_ = std::make_shared<const Partition>(partition);
        return model;
    }

    static ForwardModel cem(const Mesh& mesh, const Partition& partition, const ElectrodeLayout& layout) {
        ForwardModel model;
        model.cem_ = std::make_shared<const CemSystem>(mesh, partition, layout);
        model.electrode_basis_ = ElectrodeBasis(layout.count());
        model.layout_ = layout;
        model.cells_ = partition.cell_count();
        model.partition_ = std::make_shared<const Partition>(partition);
        return model;
    }

    bool is_cem() const { return static_cast<bool>(cem_); }
    int cell_count() const { return cells_; }
    int contact_count() const { return is_cem() ? layout_->count() : 0; }
    int parameter_count() const { return cells_ + contact_count(); }
    int dim() const { return is_cem() ? electrode_basis_->size() : trig_->size(); }

    const Partition& partition() const { return *partition_; }
    const ContinuumSystem& continuum_system() const { return *continuum_; }
    const CemSystem& cem_system() const { return *cem_; }
    const Eigen::MatrixXd& loads() const { return loads_; }
    const ElectrodeBasis& electrode_basis() const { return *electrode_basis_; }
    const std::optional<ElectrodeLayout>& layout() const { return layout_; }

    ForwardResult evaluate(const PhysicalParameters& params) const {
        ForwardResult out;
        Eigen::MatrixXd raw;
        if (is_cem()) {
            require(params.zeta.has_value(), "electrode model needs contact conductances");
            const auto& patterns = electrode_basis_->patterns();
            CemSolutions s = cem_->factorize(params.sigma, *params.zeta).solve(patterns);
            raw = patterns.transpose() * s.electrode_potentials;
            out.potentials = std::move(s.potential);
            out.electrode_potentials = std::move(s.electrode_potentials);
        } else {
            out.potentials = continuum_->factorize(params.sigma).solve(loads_);
            raw = loads_.transpose() * out.potentials;
        }
        out.raw_asymmetry = asymmetry(raw);
        out.matrix = SymMatrix::symmetrized(raw);
        return out;
    }

    SymMatrix measure(const PhysicalParameters& params) const { return evaluate(params).matrix; }

    /// Measurement for a parameter vector p in `kind` coordinates.
    SymMatrix measure(ParamKind kind, const Eigen::VectorXd& p) const {
        require(p.size() == parameter_count(), "parameter vector has " + std::to_string(p.size()) +
                                                   " entries, model expects " + std::to_string(parameter_count()));
        return measure(apply_parametrization(kind, p, cells_));
    }

private:
    ForwardModel() = default;

    int cells_ = 0;
    std::shared_ptr<const Partition> partition_;
    std::shared_ptr<const ContinuumSystem> continuum_;
    std::optional<TrigBasis> trig_;
    Eigen::MatrixXd loads_;
    std::shared_ptr<const CemSystem> cem_;
    std::optional<ElectrodeBasis> electrode_basis_;
    std::optional<ElectrodeLayout> layout_;
};

/// Entry (j, k) = (psi_j, Lambda(sigma) psi_k), symmetrized.
inline SymMatrix ntd_matrix(const Mesh& mesh, const Partition& partition, const ConductivityField& sigma,
                            const TrigBasis& basis) {
    return ForwardModel::continuum(mesh, partition, basis).measure({sigma, std::nullopt});
}

/// Column j holds the basis coordinates of the electrode potentials for
/// current pattern I^(j).
inline SymMatrix cem_resistance_matrix(const Mesh& mesh, const Partition& partition, const ConductivityField& sigma,
                                       const ContactVector& zeta, const ElectrodeLayout& layout,
                                       const ElectrodeBasis& basis) {
    require(basis.electrode_count() == layout.count(), "electrode basis does not match the layout");
    return ForwardModel::cem(mesh, partition, layout).measure({sigma, zeta});
}

// ---------------------------------------------------------------------------
// Dense matrix text format: "<rows> <cols>" then rows, 17 significant digits.
// ---------------------------------------------------------------------------

inline void write_matrix(std::ostream& out, const Eigen::MatrixXd& a) {
    out << a.rows() << ' ' << a.cols() << '\n' << std::setprecision(17);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) out << (j ? " " : "") << a(i, j);
        out << '\n';
    }
    if (!out) throw IoError("failed to write matrix");
}

inline Eigen::MatrixXd read_matrix(std::istream& in) {
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> rows >> cols) || rows < 0 || cols < 0) throw IoError("malformed matrix header");
    Eigen::MatrixXd a(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (!(in >> a(i, j))) throw IoError("malformed matrix entry (" + std::to_string(i) + ", " + std::to_string(j) + ")");
        }
    }
    return a;
}

} // namespace eitlin
