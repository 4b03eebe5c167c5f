#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/OrderingMethods>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "eitlin/basis.hpp"
#include "eitlin/error.hpp"
#include "eitlin/mesh.hpp"

namespace eitlin {

namespace detail {

inline Eigen::VectorXd checked_positive(Eigen::VectorXd values, const char* what) {
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
            std::ostringstream msg;
            msg << what << " entry " << i << " must be positive and finite, got " << values[i];
            throw ArgumentError(msg.str());
        }
    }
    return values;
}

} // namespace detail

/// Cellwise conductivity values sigma_i > 0.
class ConductivityField {
public:
    explicit ConductivityField(Eigen::VectorXd values)
        : values_(detail::checked_positive(std::move(values), "conductivity")) {}

    static ConductivityField constant(int cells, double value) {
        return ConductivityField(Eigen::VectorXd::Constant(cells, value));
    }

    int size() const { return static_cast<int>(values_.size()); }
    const Eigen::VectorXd& values() const { return values_; }
    double operator[](int i) const { return values_[i]; }

private:
    Eigen::VectorXd values_;
};

/// Contact conductances zeta_m > 0, one per electrode.
class ContactVector {
public:
    explicit ContactVector(Eigen::VectorXd values)
        : values_(detail::checked_positive(std::move(values), "contact conductance")) {}

    static ContactVector constant(int electrodes, double value) {
        return ContactVector(Eigen::VectorXd::Constant(electrodes, value));
    }

    int size() const { return static_cast<int>(values_.size()); }
    const Eigen::VectorXd& values() const { return values_; }
    double operator[](int i) const { return values_[i]; }

private:
    Eigen::VectorXd values_;
};

struct ContinuumSolution {
    Eigen::VectorXd potential;          ///< nodal values, zero boundary mean
    Eigen::VectorXd trace_coefficients; ///< (psi_j, u|boundary) for the basis used
};

struct CemSolution {
    Eigen::VectorXd potential;           ///< nodal values
    Eigen::VectorXd electrode_potentials; ///< U, sums to zero
};

/// Several solutions side by side, one column per right-hand side.
struct CemSolutions {
    Eigen::MatrixXd potential;
    Eigen::MatrixXd electrode_potentials;
};

namespace detail {

/// Per-triangle data of the P1 discretization.
struct TriangleGeometry {
    std::array<int, 3> nodes{};
    std::array<Eigen::Vector2d, 3> gradients;
    double area = 0.0;
    int cell = 0;
};

inline std::vector<TriangleGeometry> triangle_geometry(const Mesh& mesh, const Partition& partition) {
    std::vector<TriangleGeometry> out(static_cast<std::size_t>(mesh.triangle_count()));
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        auto& g = out[static_cast<std::size_t>(t)];
        g.nodes = mesh.triangle(t);
        g.area = mesh.triangle_area(t);
        g.cell = partition.cell_of_triangle(t);
        for (int a = 0; a < 3; ++a) {
            const Eigen::Vector2d& pj = mesh.node(g.nodes[(a + 1) % 3]);
            const Eigen::Vector2d& pk = mesh.node(g.nodes[(a + 2) % 3]);
            g.gradients[a] = Eigen::Vector2d(pj.y() - pk.y(), pk.x() - pj.x()) / (2.0 * g.area);
        }
    }
    return out;
}

/// Symmetric system on `graph_size` unknowns bordered by one gauge
/// (Lagrange multiplier) row. The unknowns are renumbered once: AMD on the
/// graph part, with the multiplier eliminated second to last. Every leading
/// block before it is then positive definite (the bilinear forms here are
/// singular only on constants), and the multiplier pivot is negative.
class GaugedSystem {
public:
    using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

    GaugedSystem(int graph_size, const std::vector<std::pair<int, int>>& couplings,
                 const std::vector<std::pair<int, double>>& gauge_weights)
        : graph_size_(graph_size), new_of_old_(static_cast<std::size_t>(graph_size) + 1),
          old_of_new_(static_cast<std::size_t>(graph_size) + 1) {
        const int total = graph_size + 1;

        std::vector<Eigen::Triplet<double, int>> graph;
        graph.reserve(2 * couplings.size() + static_cast<std::size_t>(graph_size));
        for (int i = 0; i < graph_size; ++i) graph.emplace_back(i, i, 1.0);
        for (const auto& [i, j] : couplings) {
            graph.emplace_back(i, j, 1.0);
            graph.emplace_back(j, i, 1.0);
        }
        SparseMatrix pattern(graph_size, graph_size);
        pattern.setFromTriplets(graph.begin(), graph.end());
        Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> order;
        Eigen::AMDOrdering<int>()(pattern, order);

        // order.indices()[position] = original unknown
        std::vector<int> sequence(order.indices().data(), order.indices().data() + graph_size);
        sequence.insert(sequence.end() - 1, graph_size);
        for (int p = 0; p < total; ++p) {
            old_of_new_[static_cast<std::size_t>(p)] = sequence[static_cast<std::size_t>(p)];
            new_of_old_[static_cast<std::size_t>(sequence[static_cast<std::size_t>(p)])] = p;
        }

        std::vector<Eigen::Triplet<double, int>> lower;
        lower.reserve(couplings.size() + gauge_weights.size() + static_cast<std::size_t>(total));
        auto add_lower = [&](int i, int j, double v) {
            int a = new_of_old_[static_cast<std::size_t>(i)];
            int b = new_of_old_[static_cast<std::size_t>(j)];
            if (a < b) std::swap(a, b);
            lower.emplace_back(a, b, v);
        };
        for (int i = 0; i < graph_size; ++i) add_lower(i, i, 0.0);
        for (const auto& [i, j] : couplings) add_lower(i, j, 0.0);
        add_lower(graph_size, graph_size, 0.0);
        for (const auto& [i, w] : gauge_weights) add_lower(i, graph_size, w);
        matrix_.resize(total, total);
        matrix_.setFromTriplets(lower.begin(), lower.end(), [](double, double b) { return b; });
        matrix_.makeCompressed();
    }

    int graph_size() const { return graph_size_; }
    int gauge_index() const { return graph_size_; }
    int size() const { return graph_size_ + 1; }

    /// Position of logical entry (i, j) in the value array of the pattern.
    int slot(int i, int j) const {
        int a = new_of_old_[static_cast<std::size_t>(i)];
        int b = new_of_old_[static_cast<std::size_t>(j)];
        if (a < b) std::swap(a, b);
        const int* begin = matrix_.innerIndexPtr() + matrix_.outerIndexPtr()[b];
        const int* end = matrix_.innerIndexPtr() + matrix_.outerIndexPtr()[b + 1];
        const int* hit = std::lower_bound(begin, end, a);
        if (hit == end || *hit != a) throw NumericalError("internal: entry missing from sparsity pattern");
        return static_cast<int>(hit - matrix_.innerIndexPtr());
    }

    /// Pattern with only the gauge couplings filled in.
    const SparseMatrix& template_matrix() const { return matrix_; }

    int new_index(int logical) const { return new_of_old_[static_cast<std::size_t>(logical)]; }
    int logical_index(int position) const { return old_of_new_[static_cast<std::size_t>(position)]; }

    Eigen::MatrixXd to_new(const Eigen::MatrixXd& logical) const {
        Eigen::MatrixXd out(logical.rows(), logical.cols());
        for (int i = 0; i < size(); ++i) out.row(new_index(i)) = logical.row(i);
        return out;
    }

    Eigen::MatrixXd to_logical(const Eigen::MatrixXd& permuted) const {
        Eigen::MatrixXd out(permuted.rows(), permuted.cols());
        for (int i = 0; i < size(); ++i) out.row(i) = permuted.row(new_index(i));
        return out;
    }

private:
    int graph_size_;
    std::vector<int> new_of_old_;
    std::vector<int> old_of_new_;
    SparseMatrix matrix_;
};

} // namespace detail

/// Reusable LDL^T factorization of one assembled, gauge-bordered system.
/// Immutable once built; solve() is const and may run concurrently.
class Factorization {
public:
    using SparseMatrix = detail::GaugedSystem::SparseMatrix;
    using Solver = Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::NaturalOrdering<int>>;

    /// `describe` names a logical unknown in diagnostics.
    template <typename Describe>
    Factorization(std::shared_ptr<const detail::GaugedSystem> system, const SparseMatrix& assembled,
                  Describe&& describe)
        : system_(std::move(system)), solver_(std::make_unique<Solver>()) {
        solver_->compute(assembled);
        const Eigen::VectorXd d = solver_->info() == Eigen::Success ? Eigen::VectorXd(solver_->vectorD())
                                                                    : Eigen::VectorXd();
        const double scale = d.size() > 0 ? d.cwiseAbs().maxCoeff() : 0.0;
        Eigen::Index worst = 0;
        const double smallest = d.size() > 0 ? d.cwiseAbs().minCoeff(&worst) : 0.0;
        if (solver_->info() != Eigen::Success || !(smallest > 1e-14 * scale) || !std::isfinite(scale)) {
            std::ostringstream msg;
            msg << "numerically singular factorization";
            if (d.size() > 0) {
                msg << ": pivot " << worst << " (" << describe(system_->logical_index(static_cast<int>(worst)))
                    << ") = " << d[worst] << " against max |pivot| " << scale;
            }
            throw NumericalError(msg.str());
        }
    }

    Factorization(Factorization&&) noexcept = default;
    Factorization& operator=(Factorization&&) noexcept = default;

    /// Solves for right-hand sides given in logical numbering (size() rows).
    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const {
        return system_->to_logical(solver_->solve(system_->to_new(rhs)));
    }

    /// Pivots of D in elimination order.
    Eigen::VectorXd pivots() const { return solver_->vectorD(); }
    const detail::GaugedSystem& system() const { return *system_; }

private:
    std::shared_ptr<const detail::GaugedSystem> system_;
    std::unique_ptr<Solver> solver_;
};

// ---------------------------------------------------------------------------
// Continuum (Neumann) model
// ---------------------------------------------------------------------------

/// Handle returned by ContinuumSystem::factorize.
class ContinuumFactorization {
public:
    ContinuumFactorization(Factorization factorization, int nodes)
        : factorization_(std::move(factorization)), nodes_(nodes) {}

    /// Nodal potentials (zero boundary mean) for mean-free loads, one column each.
    Eigen::MatrixXd solve(const Eigen::MatrixXd& loads) const {
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nodes_ + 1, loads.cols());
        rhs.topRows(nodes_) = loads;
        return factorization_.solve(rhs).topRows(nodes_);
    }

    const Factorization& factorization() const { return factorization_; }

private:
    Factorization factorization_;
    int nodes_;
};

/// P1 discretization of  int sigma grad u . grad v = <f, v>  on a mesh with
/// cellwise conductivity; the gauge is a zero mean of the boundary trace.
class ContinuumSystem {
public:
    ContinuumSystem(const Mesh& mesh, const Partition& partition)
        : mesh_(std::make_shared<const Mesh>(mesh)), cells_(partition.cell_count()),
          geometry_(detail::triangle_geometry(mesh, partition)) {
        const int n = mesh.node_count();
        std::vector<std::pair<int, int>> couplings;
        for (const auto& g : geometry_) {
            couplings.emplace_back(g.nodes[0], g.nodes[1]);
            couplings.emplace_back(g.nodes[0], g.nodes[2]);
            couplings.emplace_back(g.nodes[1], g.nodes[2]);
        }
        boundary_weights_ = Eigen::VectorXd::Zero(n);
        for (const auto& edge : mesh.boundary_edges()) {
            boundary_weights_[edge.first] += 0.5 * edge.length();
            boundary_weights_[edge.second] += 0.5 * edge.length();
        }
        std::vector<std::pair<int, double>> gauge;
        for (int i = 0; i < n; ++i) {
            if (boundary_weights_[i] != 0.0) gauge.emplace_back(i, boundary_weights_[i] / kTwoPi);
        }
        system_ = std::make_shared<const detail::GaugedSystem>(n, couplings, gauge);
        build_slots();
    }

    const Mesh& mesh() const { return *mesh_; }
    int node_count() const { return mesh_->node_count(); }
    int cell_count() const { return cells_; }
    const std::vector<detail::TriangleGeometry>& geometry() const { return geometry_; }

    /// int phi_i dS over the boundary (angle measure).
    const Eigen::VectorXd& boundary_weights() const { return boundary_weights_; }

    /// Column j holds <psi_j, phi_i> for every node i, integrated exactly.
    Eigen::MatrixXd load_matrix(const TrigBasis& basis) const {
        Eigen::MatrixXd loads = Eigen::MatrixXd::Zero(node_count(), basis.size());
        for (const auto& edge : mesh_->boundary_edges()) {
            for (int j = 0; j < basis.size(); ++j) {
                const auto [left, right] = basis.hat_integrals(j, edge.theta_begin, edge.theta_end);
                loads(edge.first, j) += left;
                loads(edge.second, j) += right;
            }
        }
        return loads;
    }

    ContinuumFactorization factorize(const ConductivityField& sigma) const {
        require(sigma.size() == cells_, "conductivity has " + std::to_string(sigma.size()) +
                                            " values but the partition has " + std::to_string(cells_) + " cells");
        Factorization::SparseMatrix a = system_->template_matrix();
        double* values = a.valuePtr();
        for (std::size_t t = 0; t < geometry_.size(); ++t) {
            const auto& g = geometry_[t];
            const double s = sigma[g.cell];
            for (int e = 0; e < 6; ++e) values[slots_[t][e]] += s * local_[t][e];
        }
        const int n = node_count();
        Factorization f(system_, a, [n](int logical) {
            return logical == n ? std::string("boundary-mean multiplier") : "node " + std::to_string(logical);
        });
        return ContinuumFactorization(std::move(f), n);
    }

private:
    // local entry order: (0,0) (1,1) (2,2) (0,1) (0,2) (1,2)
    static constexpr std::array<std::pair<int, int>, 6> kLocalPairs{
        {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}}};

    void build_slots() {
        slots_.resize(geometry_.size());
        local_.resize(geometry_.size());
        for (std::size_t t = 0; t < geometry_.size(); ++t) {
            const auto& g = geometry_[t];
            for (int e = 0; e < 6; ++e) {
                const auto [a, b] = kLocalPairs[static_cast<std::size_t>(e)];
                slots_[t][e] = system_->slot(g.nodes[a], g.nodes[b]);
                local_[t][e] = g.area * g.gradients[a].dot(g.gradients[b]);
            }
        }
    }

    std::shared_ptr<const Mesh> mesh_;
    int cells_;
    std::vector<detail::TriangleGeometry> geometry_;
    Eigen::VectorXd boundary_weights_;
    std::shared_ptr<const detail::GaugedSystem> system_;
    std::vector<std::array<int, 6>> slots_;
    std::vector<std::array<double, 6>> local_;
};

// ---------------------------------------------------------------------------
// Complete electrode model
// ---------------------------------------------------------------------------

/// Handle returned by CemSystem::factorize.
class CemFactorization {
public:
    CemFactorization(Factorization factorization, int nodes, int electrodes)
        : factorization_(std::move(factorization)), nodes_(nodes), electrodes_(electrodes) {}

    /// Columns of `currents` are zero-sum electrode current patterns.
    CemSolutions solve(const Eigen::MatrixXd& currents) const {
        require(currents.rows() == electrodes_, "current pattern length must equal the electrode count");
        for (Eigen::Index c = 0; c < currents.cols(); ++c) {
            const double sum = currents.col(c).sum();
            if (std::abs(sum) > 1e-12) {
                throw ArgumentError("current pattern " + std::to_string(c) + " does not sum to zero (sum " +
                                    std::to_string(sum) + ")");
            }
        }
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nodes_ + electrodes_ + 1, currents.cols());
        rhs.middleRows(nodes_, electrodes_) = currents;
        const Eigen::MatrixXd x = factorization_.solve(rhs);
        return {x.topRows(nodes_), x.middleRows(nodes_, electrodes_)};
    }

    const Factorization& factorization() const { return factorization_; }

private:
    Factorization factorization_;
    int nodes_;
    int electrodes_;
};

/// P1 discretization of the complete electrode model:
///   int sigma grad u . grad v + sum_m zeta_m int_{E_m} (U_m - u)(V_m - v) dS = I . V
/// over (u, U) with the gauge sum_m U_m = 0.
class CemSystem {
public:
    CemSystem(const Mesh& mesh, const Partition& partition, const ElectrodeLayout& layout)
        : mesh_(std::make_shared<const Mesh>(mesh)), cells_(partition.cell_count()), electrodes_(layout.count()),
          geometry_(detail::triangle_geometry(mesh, partition)), electrode_edges_(eitlin::electrode_edges(mesh, layout)) {
        const int n = mesh.node_count();
        std::vector<std::pair<int, int>> couplings;
        for (const auto& g : geometry_) {
            couplings.emplace_back(g.nodes[0], g.nodes[1]);
            couplings.emplace_back(g.nodes[0], g.nodes[2]);
            couplings.emplace_back(g.nodes[1], g.nodes[2]);
        }
        const auto& edges = mesh.boundary_edges();
        for (int m = 0; m < electrodes_; ++m) {
            for (int e : electrode_edges_[static_cast<std::size_t>(m)]) {
                couplings.emplace_back(edges[static_cast<std::size_t>(e)].first, n + m);
                couplings.emplace_back(edges[static_cast<std::size_t>(e)].second, n + m);
            }
        }
        std::vector<std::pair<int, double>> gauge;
        for (int m = 0; m < electrodes_; ++m) gauge.emplace_back(n + m, 1.0);
        system_ = std::make_shared<const detail::GaugedSystem>(n + electrodes_, couplings, gauge);

        triangle_slots_.resize(geometry_.size());
        triangle_local_.resize(geometry_.size());
        for (std::size_t t = 0; t < geometry_.size(); ++t) {
            const auto& g = geometry_[t];
            for (int e = 0; e < 6; ++e) {
                const auto [a, b] = kLocalPairs[static_cast<std::size_t>(e)];
                triangle_slots_[t][e] = system_->slot(g.nodes[a], g.nodes[b]);
                triangle_local_[t][e] = g.area * g.gradients[a].dot(g.gradients[b]);
            }
        }
        for (int m = 0; m < electrodes_; ++m) {
            for (int e : electrode_edges_[static_cast<std::size_t>(m)]) {
                const auto& edge = edges[static_cast<std::size_t>(e)];
                const double h = edge.length();
                const int a = edge.first;
                const int b = edge.second;
                const int u = n + m;
                contact_terms_.push_back({m,
                                          {system_->slot(a, a), system_->slot(b, b), system_->slot(a, b),
                                           system_->slot(a, u), system_->slot(b, u), system_->slot(u, u)},
                                          {h / 3.0, h / 3.0, h / 6.0, -h / 2.0, -h / 2.0, h}});
            }
        }
    }

    const Mesh& mesh() const { return *mesh_; }
    int node_count() const { return mesh_->node_count(); }
    int cell_count() const { return cells_; }
    int electrode_count() const { return electrodes_; }
    const std::vector<detail::TriangleGeometry>& geometry() const { return geometry_; }
    const std::vector<std::vector<int>>& electrode_edges() const { return electrode_edges_; }

    CemFactorization factorize(const ConductivityField& sigma, const ContactVector& zeta) const {
        require(sigma.size() == cells_, "conductivity length must equal the cell count");
        require(zeta.size() == electrodes_, "contact vector length must equal the electrode count");
        Factorization::SparseMatrix a = system_->template_matrix();
        double* values = a.valuePtr();
        for (std::size_t t = 0; t < geometry_.size(); ++t) {
            const double s = sigma[geometry_[t].cell];
            for (int e = 0; e < 6; ++e) values[triangle_slots_[t][e]] += s * triangle_local_[t][e];
        }
        for (const auto& term : contact_terms_) {
            const double z = zeta[term.electrode];
            for (int e = 0; e < 6; ++e) values[term.slots[e]] += z * term.weights[e];
        }
        const int n = node_count();
        const int m_count = electrodes_;
        Factorization f(system_, a, [n, m_count](int logical) {
            if (logical < n) return "node " + std::to_string(logical);
            if (logical < n + m_count) return "electrode " + std::to_string(logical - n);
            return std::string("electrode-mean multiplier");
        });
        return CemFactorization(std::move(f), n, electrodes_);
    }

    /// Electrode term  int_{E_m} (U_m - u)(V_m - v) dS  for P1 traces, exact.
    double contact_form(int m, const Eigen::Ref<const Eigen::VectorXd>& u, double u_electrode,
                        const Eigen::Ref<const Eigen::VectorXd>& v, double v_electrode) const {
        double total = 0.0;
        const auto& edges = mesh_->boundary_edges();
        for (int e : electrode_edges_[static_cast<std::size_t>(m)]) {
            const auto& edge = edges[static_cast<std::size_t>(e)];
            const double a = u_electrode - u[edge.first];
            const double b = u_electrode - u[edge.second];
            const double c = v_electrode - v[edge.first];
            const double d = v_electrode - v[edge.second];
            total += edge.length() / 6.0 * (2.0 * a * c + a * d + b * c + 2.0 * b * d);
        }
        return total;
    }

    /// Full bilinear form of the model evaluated on two states.
    double bilinear_form(const ConductivityField& sigma, const ContactVector& zeta,
                         const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& u_el,
                         const Eigen::Ref<const Eigen::VectorXd>& v,
                         const Eigen::Ref<const Eigen::VectorXd>& v_el) const {
        double total = 0.0;
        for (const auto& g : geometry_) {
            Eigen::Vector2d gu = Eigen::Vector2d::Zero();
            Eigen::Vector2d gv = Eigen::Vector2d::Zero();
            for (int a = 0; a < 3; ++a) {
                gu += u[g.nodes[a]] * g.gradients[a];
                gv += v[g.nodes[a]] * g.gradients[a];
            }
            total += sigma[g.cell] * g.area * gu.dot(gv);
        }
        for (int m = 0; m < electrodes_; ++m) total += zeta[m] * contact_form(m, u, u_el[m], v, v_el[m]);
        return total;
    }

private:
    static constexpr std::array<std::pair<int, int>, 6> kLocalPairs{
        {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}}};

    struct ContactTerm {
        int electrode;
        std::array<int, 6> slots;
        std::array<double, 6> weights;
    };

    std::shared_ptr<const Mesh> mesh_;
    int cells_;
    int electrodes_;
    std::vector<detail::TriangleGeometry> geometry_;
    std::vector<std::vector<int>> electrode_edges_;
    std::shared_ptr<const detail::GaugedSystem> system_;
    std::vector<std::array<int, 6>> triangle_slots_;
    std::vector<std::array<double, 6>> triangle_local_;
    std::vector<ContactTerm> contact_terms_;
};

// ---------------------------------------------------------------------------
// One-shot entry points
// ---------------------------------------------------------------------------

/// Boundary current f = sum_j coefficients_j psi_j.
inline ContinuumSolution solve_continuum(const Mesh& mesh, const Partition& partition,
                                         const ConductivityField& sigma, const TrigBasis& basis,
                                         const Eigen::VectorXd& coefficients) {
    require(coefficients.size() == basis.size(), "current coefficients must match the basis size");
    const ContinuumSystem system(mesh, partition);
    const Eigen::MatrixXd loads = system.load_matrix(basis);
    const Eigen::VectorXd u = system.factorize(sigma).solve(loads * coefficients);
    return {u, loads.transpose() * u};
}

inline CemSolution solve_cem(const Mesh& mesh, const Partition& partition, const ConductivityField& sigma,
                             const ContactVector& zeta, const ElectrodeLayout& layout, const Eigen::VectorXd& current) {
    const CemSystem system(mesh, partition, layout);
    const CemSolutions s = system.factorize(sigma, zeta).solve(current);
    return {s.potential.col(0), s.electrode_potentials.col(0)};
}

inline ContinuumFactorization factorize(const Mesh& mesh, const Partition& partition,
                                        const ConductivityField& sigma) {
    return ContinuumSystem(mesh, partition).factorize(sigma);
}

inline CemFactorization factorize(const Mesh& mesh, const Partition& partition, const ConductivityField& sigma,
                                  const ContactVector& zeta, const ElectrodeLayout& layout) {
    return CemSystem(mesh, partition, layout).factorize(sigma, zeta);
}

} // namespace eitlin
