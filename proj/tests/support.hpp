#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <utility>

#include <Eigen/Core>
#include <Eigen/QR>

#include "eitlin/forward.hpp"
#include "eitlin/mesh.hpp"

namespace testing_support {

/// Meshes and partitions are costly to rebuild for every test; they are
/// cached per (node target, electrode count, cells).
struct Disk {
    eitlin::ElectrodeLayout layout;
    eitlin::Mesh mesh;
    eitlin::Partition partition;
};

inline const Disk& disk(int target, int cells, int electrodes = 16, double coverage = 0.46) {
    static std::map<std::tuple<int, int, int, double>, std::unique_ptr<Disk>> cache;
    auto& slot = cache[{target, cells, electrodes, coverage}];
    if (!slot) {
        eitlin::ElectrodeLayout layout(electrodes, coverage);
        eitlin::Mesh mesh = eitlin::build_disk_mesh(target, layout);
        eitlin::Partition partition = eitlin::build_partition(mesh, cells);
        slot = std::make_unique<Disk>(Disk{layout, std::move(mesh), std::move(partition)});
    }
    return *slot;
}

inline double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

inline Eigen::VectorXd normal_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
    return v;
}

inline Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) x(i, j) = normal(rng);
    return 0.5 * (x + x.transpose());
}

/// Q diag(mu) Q^T with log-uniform spectrum in [low, high].
inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n, double low = 0.1, double high = 2.0) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> u(std::log(low), std::log(high));
    Eigen::MatrixXd x(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) x(i, j) = normal(rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(x).householderQ();
    Eigen::VectorXd mu(n);
    for (int i = 0; i < n; ++i) mu[i] = std::exp(u(rng));
    Eigen::MatrixXd a = q * mu.asDiagonal() * q.transpose();
    return 0.5 * (a + a.transpose());
}

} // namespace testing_support
