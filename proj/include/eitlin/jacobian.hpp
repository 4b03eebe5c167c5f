#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "eitlin/error.hpp"
#include "eitlin/fem.hpp"
#include "eitlin/forward.hpp"

namespace eitlin {

/// Derivative of a matrix-valued forward map: one symmetric dim x dim slice
/// per parameter, stored as the columns of a dim^2 x P matrix (column-major
/// vectorization). Parameters are ordered [cells; contacts].
class JacobianTensor {
public:
    JacobianTensor(int dim, Eigen::MatrixXd columns, ParamKind kind, Eigen::VectorXd point, int cell_count,
                   bool logarithmic = false)
        : dim_(dim), columns_(std::move(columns)), kind_(kind), point_(std::move(point)), cells_(cell_count),
          logarithmic_(logarithmic) {
        require(columns_.rows() == static_cast<Eigen::Index>(dim) * dim, "jacobian slice size mismatch");
        require(columns_.cols() == point_.size(), "jacobian slice count must equal the parameter count");
    }

    int dim() const { return dim_; }
    int parameter_count() const { return static_cast<int>(columns_.cols()); }
    int cell_count() const { return cells_; }
    int contact_count() const { return parameter_count() - cells_; }

    /// Coordinates in which the slices differentiate.
    ParamKind kind() const { return kind_; }
    /// Expansion point in `kind` coordinates.
    const Eigen::VectorXd& point() const { return point_; }
    /// True for derivatives of the matrix logarithm of the forward map.
    bool logarithmic() const { return logarithmic_; }

    const Eigen::MatrixXd& columns() const { return columns_; }

    Eigen::MatrixXd slice(int i) const { return Eigen::Map<const Eigen::MatrixXd>(columns_.col(i).data(), dim_, dim_); }

    /// sum_i direction_i * slice_i
    Eigen::MatrixXd contract(const Eigen::VectorXd& direction) const {
        require(direction.size() == parameter_count(), "direction length must equal the parameter count");
        const Eigen::VectorXd v = columns_ * direction;
        return Eigen::Map<const Eigen::MatrixXd>(v.data(), dim_, dim_);
    }

private:
    int dim_;
    Eigen::MatrixXd columns_;
    ParamKind kind_;
    Eigen::VectorXd point_;
    int cells_;
    bool logarithmic_;
};

namespace detail {

/// Adds  -int_{cell} grad u_j . grad u_k  into the conductivity columns.
/// P1 gradients are constant per triangle, so each triangle contributes
/// -area * G G^T with G the dim x 2 matrix of solution gradients.
inline void accumulate_conductivity_slices(const std::vector<TriangleGeometry>& geometry,
                                           const Eigen::MatrixXd& potentials, Eigen::MatrixXd& columns) {
    const Eigen::Index dim = potentials.cols();
    Eigen::MatrixXd grads(dim, 2);
    Eigen::MatrixXd local(dim, dim);
    for (const auto& g : geometry) {
        grads.noalias() = potentials.row(g.nodes[0]).transpose() * g.gradients[0].transpose();
        grads.noalias() += potentials.row(g.nodes[1]).transpose() * g.gradients[1].transpose();
        grads.noalias() += potentials.row(g.nodes[2]).transpose() * g.gradients[2].transpose();
        local.noalias() = grads * grads.transpose();
        Eigen::Map<Eigen::MatrixXd>(columns.col(g.cell).data(), dim, dim) -= g.area * local;
    }
}

} // namespace detail

/// Conductivity Jacobian of the Neumann-to-Dirichlet matrix from the basis
/// solutions at sigma.
inline JacobianTensor continuum_jacobian(const ContinuumSystem& system, const Eigen::MatrixXd& potentials,
                                         const ConductivityField& sigma) {
    const int dim = static_cast<int>(potentials.cols());
    Eigen::MatrixXd columns = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim) * dim, system.cell_count());
    detail::accumulate_conductivity_slices(system.geometry(), potentials, columns);
    return JacobianTensor(dim, std::move(columns), ParamKind::Conductivity, sigma.values(), system.cell_count());
}

inline JacobianTensor continuum_jacobian(const Mesh& mesh, const Partition& partition, const ConductivityField& sigma,
                                         const TrigBasis& basis) {
    const ForwardModel model = ForwardModel::continuum(mesh, partition, basis);
    return continuum_jacobian(model.continuum_system(), model.evaluate({sigma, std::nullopt}).potentials, sigma);
}

/// Conductivity and contact-conductance Jacobian of the resistance matrix.
/// Contact slice m is  -int_{E_m} (U_b - u_b)(U_a - u_a) dS.
inline JacobianTensor cem_jacobian(const CemSystem& system, const CemSolutions& states, const ConductivityField& sigma,
                                   const ContactVector& zeta) {
    const int dim = static_cast<int>(states.potential.cols());
    const int cells = system.cell_count();
    const int electrodes = system.electrode_count();
    Eigen::MatrixXd columns = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim) * dim, cells + electrodes);
    detail::accumulate_conductivity_slices(system.geometry(), states.potential, columns);

    const auto& edges = system.mesh().boundary_edges();
    Eigen::VectorXd first(dim), second(dim);
    for (int m = 0; m < electrodes; ++m) {
        Eigen::Map<Eigen::MatrixXd> slice(columns.col(cells + m).data(), dim, dim);
        for (int e : system.electrode_edges()[static_cast<std::size_t>(m)]) {
            const auto& edge = edges[static_cast<std::size_t>(e)];
            first = states.electrode_potentials.row(m) - states.potential.row(edge.first);
            second = states.electrode_potentials.row(m) - states.potential.row(edge.second);
            const double w = edge.length() / 6.0;
            slice.noalias() -= w * (2.0 * first * first.transpose() + first * second.transpose() +
                                    second * first.transpose() + 2.0 * second * second.transpose());
        }
    }
    Eigen::VectorXd point(cells + electrodes);
    point << sigma.values(), zeta.values();
    return JacobianTensor(dim, std::move(columns), ParamKind::Conductivity, std::move(point), cells);
}

inline JacobianTensor cem_jacobian(const Mesh& mesh, const Partition& partition, const ConductivityField& sigma,
                                   const ContactVector& zeta, const ElectrodeLayout& layout) {
    const ForwardModel model = ForwardModel::cem(mesh, partition, layout);
    const ForwardResult r = model.evaluate({sigma, zeta});
    return cem_jacobian(model.cem_system(), {r.potentials, r.electrode_potentials}, sigma, zeta);
}

/// Conductivity-coordinate Jacobian of either model at the given physical point.
inline JacobianTensor jacobian(const ForwardModel& model, const PhysicalParameters& params) {
    const ForwardResult r = model.evaluate(params);
    if (model.is_cem()) {
        return cem_jacobian(model.cem_system(), {r.potentials, r.electrode_potentials}, params.sigma, *params.zeta);
    }
    return continuum_jacobian(model.continuum_system(), r.potentials, params.sigma);
}

/// Chain rule from conductivity coordinates into `kind` coordinates at p
/// (p in `kind` coordinates). Each slice is scaled by d(sigma)/d(p):
/// -sigma^2 for resistivity, sigma for log-conductivity; contacts alike.
inline JacobianTensor reparametrize_jacobian(const JacobianTensor& j, ParamKind kind, const Eigen::VectorXd& p) {
    if (j.kind() != ParamKind::Conductivity || j.logarithmic()) {
        throw ArgumentError("reparametrization expects a conductivity-coordinate jacobian");
    }
    require(p.size() == j.parameter_count(), "expansion point length must equal the parameter count");
    const Eigen::VectorXd sigma = to_physical(kind, p);
    const double mismatch = (sigma - j.point()).cwiseAbs().maxCoeff();
    if (mismatch > 1e-12 * std::max(1.0, j.point().cwiseAbs().maxCoeff())) {
        throw ArgumentError("expansion point does not match the jacobian's assembly point (max deviation " +
                            std::to_string(mismatch) + ")");
    }
    Eigen::VectorXd scale;
    switch (kind) {
    case ParamKind::Conductivity: scale = Eigen::VectorXd::Ones(p.size()); break;
    case ParamKind::Resistivity: scale = -sigma.cwiseAbs2(); break;
    case ParamKind::LogConductivity: scale = sigma; break;
    }
    return JacobianTensor(j.dim(), j.columns() * scale.asDiagonal(), kind, p, j.cell_count());
}

} // namespace eitlin
