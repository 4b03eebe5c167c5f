#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "eitlin/error.hpp"

namespace eitlin {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle difference into [-pi, pi).
inline double wrap_angle(double angle) {
    double wrapped = std::fmod(angle + kPi, kTwoPi);
    if (wrapped < 0.0) wrapped += kTwoPi;
    return wrapped - kPi;
}

// ---------------------------------------------------------------------------
// Electrodes
// ---------------------------------------------------------------------------

/// M identical electrodes centered at 2*pi*m/M (m = 0..M-1), each an arc of
/// length coverage * 2*pi / M on the unit circle.
class ElectrodeLayout {
public:
    ElectrodeLayout(int count, double coverage) : count_(count), coverage_(coverage) {
        require(count >= 2, "electrode layout needs at least 2 electrodes, got " + std::to_string(count));
        require(coverage > 0.0 && coverage < 1.0,
                "electrode coverage must lie in (0, 1), got " + std::to_string(coverage));
        for (int a = 0; a < count_; ++a) {
            for (int b = a + 1; b < count_; ++b) {
                if (arcs_overlap(a, b)) {
                    throw ArgumentError("electrode arcs " + std::to_string(a) + " and " +
                                        std::to_string(b) + " intersect");
                }
            }
        }
    }

    int count() const { return count_; }
    double coverage() const { return coverage_; }
    double arc_length() const { return coverage_ * kTwoPi / count_; }
    double center(int m) const { return kTwoPi * m / count_; }

    /// Polar-angle interval [begin, end] of electrode m; begin may be negative.
    std::pair<double, double> arc(int m) const {
        const double half = 0.5 * arc_length();
        return {center(m) - half, center(m) + half};
    }

    /// True when the two arcs share any point.
    bool arcs_overlap(int a, int b) const {
        const double distance = std::abs(wrap_angle(center(a) - center(b)));
        return distance <= arc_length();
    }

private:
    int count_;
    double coverage_;
};

inline ElectrodeLayout build_electrode_layout(int count, double coverage) {
    return ElectrodeLayout(count, coverage);
}

// ---------------------------------------------------------------------------
// Mesh
// ---------------------------------------------------------------------------

/// Counter-clockwise boundary edge together with the polar-angle interval it
/// spans. Boundary integrals are taken with respect to this angle.
struct BoundaryEdge {
    int first = 0;
    int second = 0;
    double theta_begin = 0.0;
    double theta_end = 0.0;

    double length() const { return theta_end - theta_begin; }
    double midpoint() const { return 0.5 * (theta_begin + theta_end); }
};

class Mesh {
public:
    using Triangle = std::array<int, 3>;

    /// Validates orientation, the boundary cycle, and that boundary nodes
    /// lie on the unit circle.
    Mesh(std::vector<Eigen::Vector2d> nodes, std::vector<Triangle> triangles,
         std::vector<BoundaryEdge> boundary)
        : nodes_(std::move(nodes)), triangles_(std::move(triangles)), boundary_(std::move(boundary)) {
        validate();
    }

    int node_count() const { return static_cast<int>(nodes_.size()); }
    int triangle_count() const { return static_cast<int>(triangles_.size()); }

    const std::vector<Eigen::Vector2d>& nodes() const { return nodes_; }
    const std::vector<Triangle>& triangles() const { return triangles_; }
    const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_; }

    const Eigen::Vector2d& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    const Triangle& triangle(int t) const { return triangles_[static_cast<std::size_t>(t)]; }

    double triangle_area(int t) const {
        const auto& tri = triangle(t);
        return signed_area(node(tri[0]), node(tri[1]), node(tri[2]));
    }

    Eigen::Vector2d centroid(int t) const {
        const auto& tri = triangle(t);
        return (node(tri[0]) + node(tri[1]) + node(tri[2])) / 3.0;
    }

    /// Sum of triangle areas in triangle order.
    double area() const {
        double total = 0.0;
        for (int t = 0; t < triangle_count(); ++t) total += triangle_area(t);
        return total;
    }

    static double signed_area(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
        return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
    }

private:
    void validate() const {
        const int n = node_count();
        if (n < 3 || triangles_.empty()) throw NumericalError("mesh has no triangles");
        for (int t = 0; t < triangle_count(); ++t) {
            const auto& tri = triangle(t);
            for (int v : tri) {
                if (v < 0 || v >= n) {
                    throw NumericalError("triangle " + std::to_string(t) + " references node " + std::to_string(v) +
                                         " outside [0, " + std::to_string(n) + ")");
                }
            }
            const double a = triangle_area(t);
            if (!(a > 0.0)) {
                std::ostringstream msg;
                msg << "degenerate or inverted triangle " << t << " (nodes " << tri[0] << ", " << tri[1] << ", "
                    << tri[2] << ") with signed area " << a;
                throw NumericalError(msg.str());
            }
        }

        if (boundary_.size() < 3) throw NumericalError("mesh boundary has fewer than 3 edges");
        double span = 0.0;
        for (std::size_t e = 0; e < boundary_.size(); ++e) {
            const auto& edge = boundary_[e];
            const auto& next = boundary_[(e + 1) % boundary_.size()];
            if (edge.second != next.first) {
                throw NumericalError("boundary edges do not form a closed cycle at edge " + std::to_string(e));
            }
            if (!(edge.theta_end > edge.theta_begin)) {
                throw NumericalError("boundary edge " + std::to_string(e) + " has an empty angle interval");
            }
            if (e + 1 < boundary_.size() && std::abs(next.theta_begin - edge.theta_end) > 1e-12) {
                throw NumericalError("boundary angles are discontinuous at edge " + std::to_string(e));
            }
            span += edge.length();
            for (int v : {edge.first, edge.second}) {
                if (v < 0 || v >= n) throw NumericalError("boundary edge references a missing node");
                if (std::abs(node(v).norm() - 1.0) > 1e-9) {
                    throw NumericalError("boundary node " + std::to_string(v) + " is off the unit circle");
                }
            }
            if (std::abs(wrap_angle(std::atan2(node(edge.first).y(), node(edge.first).x()) - edge.theta_begin)) >
                1e-9) {
                throw NumericalError("boundary node " + std::to_string(edge.first) +
                                     " disagrees with its edge angle");
            }
        }
        if (std::abs(span - kTwoPi) > 1e-9) throw NumericalError("boundary angles do not cover the full circle");
    }

    std::vector<Eigen::Vector2d> nodes_;
    std::vector<Triangle> triangles_;
    std::vector<BoundaryEdge> boundary_;
};

namespace detail {

/// Polar angles of the boundary nodes, increasing. With electrodes, every arc
/// endpoint is a node and both arcs and gaps are subdivided evenly.
inline std::vector<double> boundary_angles(int count, const std::optional<ElectrodeLayout>& electrodes) {
    std::vector<double> angles;
    if (!electrodes) {
        angles.reserve(static_cast<std::size_t>(count));
        for (int j = 0; j < count; ++j) angles.push_back(kTwoPi * j / count);
        return angles;
    }
    const double spacing = kTwoPi / count;
    auto subdivide = [&](double begin, double end) {
        const int pieces = std::max(1, static_cast<int>(std::lround((end - begin) / spacing)));
        for (int i = 0; i < pieces; ++i) angles.push_back(begin + (end - begin) * i / pieces);
    };
    const int m_count = electrodes->count();
    for (int m = 0; m < m_count; ++m) {
        const auto [begin, end] = electrodes->arc(m);
        const double next_begin =
            m + 1 < m_count ? electrodes->arc(m + 1).first : electrodes->arc(0).first + kTwoPi;
        subdivide(begin, end);
        subdivide(end, next_begin);
    }
    return angles;
}

/// Triangulates the annulus between two closed rings of nodes, both listed
/// counter-clockwise with increasing angle (each spanning less than 2*pi).
inline void stitch_rings(const std::vector<int>& inner, const std::vector<double>& inner_theta,
                         const std::vector<int>& outer, const std::vector<double>& outer_theta,
                         std::vector<Mesh::Triangle>& triangles) {
    const std::size_t n_in = inner.size();
    const std::size_t n_out = outer.size();

    std::vector<double> a(n_in + 1);
    for (std::size_t i = 0; i < n_in; ++i) a[i] = inner_theta[i];
    a[n_in] = inner_theta[0] + kTwoPi;

    std::size_t j0 = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n_out; ++j) {
        const double d = std::abs(wrap_angle(outer_theta[j] - a[0]));
        if (d < best) {
            best = d;
            j0 = j;
        }
    }
    std::vector<double> b(n_out + 1);
    b[0] = a[0] + wrap_angle(outer_theta[j0] - a[0]);
    for (std::size_t k = 1; k < n_out; ++k) {
        const double step = outer_theta[(j0 + k) % n_out] - outer_theta[(j0 + k - 1) % n_out];
        b[k] = b[k - 1] + (step > 0.0 ? step : step + kTwoPi);
    }
    b[n_out] = b[0] + kTwoPi;

    auto in_node = [&](std::size_t i) { return inner[i % n_in]; };
    auto out_node = [&](std::size_t k) { return outer[(j0 + k) % n_out]; };

    std::size_t i = 0;
    std::size_t k = 0;
    while (i < n_in || k < n_out) {
        // coincident angles are resolved the same way everywhere so that
        // rotationally symmetric rings give a symmetric triangulation
        const bool advance_inner = k == n_out || (i < n_in && a[i + 1] < b[k + 1] - 1e-12);
        if (advance_inner) {
            triangles.push_back({in_node(i), out_node(k), in_node(i + 1)});
            ++i;
        } else {
            triangles.push_back({in_node(i), out_node(k), out_node(k + 1)});
            ++k;
        }
    }
}

} // namespace detail

/// Structured triangulation of the unit disk by concentric rings: ring r of
/// R carries about 6r nodes at radius r/R, so the node count is close to
/// 3R(R+1)+1. With an electrode layout the boundary nodes include every arc
/// endpoint and every ring holds a multiple of M nodes, which makes the mesh
/// invariant under rotation by one electrode.
inline Mesh build_disk_mesh(int target_node_count, const std::optional<ElectrodeLayout>& electrodes = std::nullopt) {
    require(target_node_count >= 100, "target node count must be at least 100");
    const double t = static_cast<double>(target_node_count);
    const int rings = std::max(2, static_cast<int>(std::lround((-3.0 + std::sqrt(9.0 + 12.0 * (t - 1.0))) / 6.0)));

    std::vector<Eigen::Vector2d> nodes;
    nodes.emplace_back(0.0, 0.0);
    std::vector<Mesh::Triangle> triangles;

    std::vector<int> previous;
    std::vector<double> previous_theta;
    std::vector<BoundaryEdge> boundary;

    for (int r = 1; r <= rings; ++r) {
        std::vector<double> theta;
        if (r < rings) {
            int count = 6 * r;
            if (electrodes) {
                const int m = electrodes->count();
                count = m * std::max(1, static_cast<int>(std::lround(static_cast<double>(count) / m)));
            }
            theta.reserve(static_cast<std::size_t>(count));
            for (int j = 0; j < count; ++j) theta.push_back(kTwoPi * j / count);
        } else {
            theta = detail::boundary_angles(6 * rings, electrodes);
        }
        const double radius = static_cast<double>(r) / rings;
        std::vector<int> ring;
        ring.reserve(theta.size());
        for (double angle : theta) {
            ring.push_back(static_cast<int>(nodes.size()));
            nodes.emplace_back(radius * std::cos(angle), radius * std::sin(angle));
        }

        if (r == 1) {
            for (std::size_t j = 0; j < ring.size(); ++j) triangles.push_back({0, ring[j], ring[(j + 1) % ring.size()]});
        } else {
            detail::stitch_rings(previous, previous_theta, ring, theta, triangles);
        }

        if (r == rings) {
            for (std::size_t j = 0; j < ring.size(); ++j) {
                const std::size_t next = (j + 1) % ring.size();
                const double end = next == 0 ? theta[0] + kTwoPi : theta[next];
                boundary.push_back({ring[j], ring[next], theta[j], end});
            }
        }
        previous = std::move(ring);
        previous_theta = std::move(theta);
    }
    return Mesh(std::move(nodes), std::move(triangles), std::move(boundary));
}

/// Boundary edges covered by each electrode. Throws when the arc endpoints
/// are not mesh nodes (the covered edges must sum to the arc length).
inline std::vector<std::vector<int>> electrode_edges(const Mesh& mesh, const ElectrodeLayout& layout) {
    std::vector<std::vector<int>> covered(static_cast<std::size_t>(layout.count()));
    const auto& edges = mesh.boundary_edges();
    const double half = 0.5 * layout.arc_length();
    for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
        for (int m = 0; m < layout.count(); ++m) {
            if (std::abs(wrap_angle(edges[static_cast<std::size_t>(e)].midpoint() - layout.center(m))) < half) {
                covered[static_cast<std::size_t>(m)].push_back(e);
            }
        }
    }
    for (int m = 0; m < layout.count(); ++m) {
        double length = 0.0;
        for (int e : covered[static_cast<std::size_t>(m)]) length += edges[static_cast<std::size_t>(e)].length();
        if (std::abs(length - layout.arc_length()) > 1e-9) {
            throw ArgumentError("mesh boundary is not aligned with electrode " + std::to_string(m) +
                                " (covered length " + std::to_string(length) + ")");
        }
    }
    return covered;
}

// ---------------------------------------------------------------------------
// Partition
// ---------------------------------------------------------------------------

/// Piecewise-constant parameter cells. Cell membership of a triangle is
/// decided by its centroid.
class Partition {
public:
    Partition(std::vector<int> cell_of_triangle, std::vector<Eigen::Vector2d> centers, Eigen::VectorXd areas)
        : cell_of_triangle_(std::move(cell_of_triangle)), centers_(std::move(centers)), areas_(std::move(areas)) {}

    int cell_count() const { return static_cast<int>(areas_.size()); }
    int cell_of_triangle(int t) const { return cell_of_triangle_[static_cast<std::size_t>(t)]; }
    const std::vector<int>& cell_of_triangles() const { return cell_of_triangle_; }
    const std::vector<Eigen::Vector2d>& centers() const { return centers_; }
    const Eigen::Vector2d& center(int i) const { return centers_[static_cast<std::size_t>(i)]; }
    const Eigen::VectorXd& areas() const { return areas_; }

    double max_min_area_ratio() const { return areas_.maxCoeff() / areas_.minCoeff(); }

private:
    std::vector<int> cell_of_triangle_;
    std::vector<Eigen::Vector2d> centers_;
    Eigen::VectorXd areas_;
};

namespace detail {

/// Splits `total` into integer shares proportional to `weights` (largest
/// remainder), each share at least one.
inline std::vector<int> apportion(int total, const std::vector<double>& weights) {
    const double weight_sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<int> shares(weights.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    int assigned = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        const double exact = total * weights[k] / weight_sum;
        shares[k] = std::max(1, static_cast<int>(std::floor(exact)));
        assigned += shares[k];
        remainders.emplace_back(exact - std::floor(exact), k);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });
    for (std::size_t r = 0; assigned < total; r = (r + 1) % remainders.size()) {
        ++shares[remainders[r].second];
        ++assigned;
    }
    for (std::size_t k = shares.size(); assigned > total && k-- > 0;) {
        if (shares[k] > 1) {
            --shares[k];
            --assigned;
            k = shares.size();
        }
    }
    return shares;
}

} // namespace detail

/// Cell areas and area-weighted centers for a triangle-to-cell map.
inline Partition partition_from_assignment(const Mesh& mesh, std::vector<int> cell_of, int cells) {
    require(cell_of.size() == static_cast<std::size_t>(mesh.triangle_count()), "one cell index per triangle required");
    Eigen::VectorXd areas = Eigen::VectorXd::Zero(cells);
    std::vector<Eigen::Vector2d> moments(static_cast<std::size_t>(cells), Eigen::Vector2d::Zero());
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const int cell = cell_of[static_cast<std::size_t>(t)];
        require(cell >= 0 && cell < cells, "cell index out of range");
        const double a = mesh.triangle_area(t);
        areas[cell] += a;
        moments[static_cast<std::size_t>(cell)] += a * mesh.centroid(t);
    }
    std::vector<Eigen::Vector2d> centers(static_cast<std::size_t>(cells));
    for (int i = 0; i < cells; ++i) {
        if (areas[i] <= 0.0) {
            throw ArgumentError("cell count " + std::to_string(cells) +
                                " is too large for the mesh resolution (cell " + std::to_string(i) + " is empty)");
        }
        centers[static_cast<std::size_t>(i)] = moments[static_cast<std::size_t>(i)] / areas[i];
    }
    return Partition(std::move(cell_of), std::move(centers), std::move(areas));
}

/// Polar-grid partition into N cells of nearly equal area: K annuli of equal
/// radial width (K ~ sqrt(N/pi) for roughly square cells); annulus k holds a
/// number of equal sectors proportional to its area, 2k+1.
inline Partition build_partition(const Mesh& mesh, int cells) {
    require(cells >= 1, "cell count must be positive");
    if (cells > mesh.triangle_count()) {
        throw ArgumentError("cell count " + std::to_string(cells) + " exceeds triangle count " +
                            std::to_string(mesh.triangle_count()));
    }
    const int rings = std::max(1, static_cast<int>(std::lround(std::sqrt(cells / kPi))));
    std::vector<double> weights;
    for (int k = 0; k < rings; ++k) weights.push_back(2.0 * k + 1.0);
    const std::vector<int> sectors = detail::apportion(cells, weights);
    std::vector<int> offset(static_cast<std::size_t>(rings) + 1, 0);
    for (int k = 0; k < rings; ++k) offset[k + 1] = offset[k] + sectors[k];

    std::vector<int> cell_of(static_cast<std::size_t>(mesh.triangle_count()));
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const Eigen::Vector2d c = mesh.centroid(t);
        const int ring = std::min(rings - 1, static_cast<int>(c.norm() * rings));
        double theta = std::atan2(c.y(), c.x());
        if (theta < 0.0) theta += kTwoPi;
        const int n = sectors[static_cast<std::size_t>(ring)];
        const int sector = std::min(n - 1, static_cast<int>(theta / kTwoPi * n));
        cell_of[static_cast<std::size_t>(t)] = offset[static_cast<std::size_t>(ring)] + sector;
    }
    return partition_from_assignment(mesh, std::move(cell_of), cells);
}

/// Two cells split by triangle centroid at radius r: 0 inside, 1 outside.
inline Partition concentric_partition(const Mesh& mesh, double radius) {
    require(radius > 0.0 && radius < 1.0, "inclusion radius must lie in (0, 1)");
    std::vector<int> cell_of(static_cast<std::size_t>(mesh.triangle_count()));
    for (int t = 0; t < mesh.triangle_count(); ++t) cell_of[static_cast<std::size_t>(t)] = mesh.centroid(t).norm() < radius ? 0 : 1;
    return partition_from_assignment(mesh, std::move(cell_of), 2);
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------
//
//   eitlin-mesh 1 <nodes> <triangles> <boundary_edges>
//   <i> <x> <y>                               one line per node
//   <i> <a> <b> <c>                           one line per triangle
//   <i> <first> <second> <theta0> <theta1>    one line per boundary edge
//
// Reals are written with 17 significant digits.

inline void write_mesh(std::ostream& out, const Mesh& mesh) {
    out << "eitlin-mesh 1 " << mesh.node_count() << ' ' << mesh.triangle_count() << ' '
        << mesh.boundary_edges().size() << '\n';
    out << std::setprecision(17);
    for (int i = 0; i < mesh.node_count(); ++i) out << i << ' ' << mesh.node(i).x() << ' ' << mesh.node(i).y() << '\n';
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangle(t);
        out << t << ' ' << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
    }
    const auto& edges = mesh.boundary_edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        out << e << ' ' << edges[e].first << ' ' << edges[e].second << ' ' << edges[e].theta_begin << ' '
            << edges[e].theta_end << '\n';
    }
    if (!out) throw IoError("failed to write mesh");
}

inline Mesh read_mesh(std::istream& in) {
    std::string magic;
    int version = 0;
    std::size_t n_nodes = 0, n_triangles = 0, n_edges = 0;
    if (!(in >> magic >> version >> n_nodes >> n_triangles >> n_edges) || magic != "eitlin-mesh" || version != 1) {
        throw IoError("not an eitlin mesh file (bad header)");
    }
    auto expect_index = [&](std::size_t expected, const char* table) {
        std::size_t index = 0;
        if (!(in >> index) || index != expected) {
            throw IoError(std::string("malformed ") + table + " table at row " + std::to_string(expected));
        }
    };
    std::vector<Eigen::Vector2d> nodes(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        expect_index(i, "node");
        if (!(in >> nodes[i].x() >> nodes[i].y())) throw IoError("malformed node row " + std::to_string(i));
    }
    std::vector<Mesh::Triangle> triangles(n_triangles);
    for (std::size_t t = 0; t < n_triangles; ++t) {
        expect_index(t, "triangle");
        if (!(in >> triangles[t][0] >> triangles[t][1] >> triangles[t][2])) {
            throw IoError("malformed triangle row " + std::to_string(t));
        }
    }
    std::vector<BoundaryEdge> edges(n_edges);
    for (std::size_t e = 0; e < n_edges; ++e) {
        expect_index(e, "boundary");
        if (!(in >> edges[e].first >> edges[e].second >> edges[e].theta_begin >> edges[e].theta_end)) {
            throw IoError("malformed boundary row " + std::to_string(e));
        }
    }
    return Mesh(std::move(nodes), std::move(triangles), std::move(edges));
}

} // namespace eitlin
