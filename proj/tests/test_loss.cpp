#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gradcheck.hpp"
#include "l2m/loss.hpp"
#include "testmesh.hpp"

#include <random>

using namespace l2m;
using nn::Tensor;
using gradcheck::max_rel_error;
using gradcheck::random_matrix;

namespace {

using TD = Tensor<double>;

// Dense evaluation of the full adjacency penalty over all vertex pairs; the
// production path must agree with this to 1e-12.
double dense_adjacency_oracle(const Eigen::MatrixXd& p, const std::vector<int>& labels,
                              const Eigen::MatrixX3d& v, const AdjacencyData& adj, double sigma,
                              bool squared = false) {
    const Eigen::Index n = p.rows();
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = p(i, labels[static_cast<size_t>(i)]);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (size_t i = 0; i < adj.neighbors.size(); ++i)
        for (int j : adj.neighbors[i]) a(static_cast<Eigen::Index>(i), j) = 1.0;

    double total = 0.0;
    Eigen::Index participating = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (adj.ring_counts[i] == 0) continue;
        ++participating;
        double ring = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double d = (v.row(i) - v.row(j)).norm();
            const double omega = squared ? std::exp(-d * d / (2.0 * sigma * sigma))
                                         : std::exp(-d / (2.0 * sigma));
            ring += omega * std::abs(y[i] - y[j]) * a(i, j);
        }
        total += ring / adj.ring_counts[i];
    }
    return participating ? total / static_cast<double>(participating) : 0.0;
}

AdjacencyData adjacency_of(const Mesh& m) { return vertex_adjacency(build_topology(m)); }

// random row-stochastic matrix
Eigen::MatrixXd random_probs(Eigen::Index n, Eigen::Index c, std::uint64_t seed) {
    Eigen::MatrixXd p = random_matrix(n, c, seed).array().abs() + 0.05;
    for (Eigen::Index i = 0; i < n; ++i) p.row(i) /= p.row(i).sum();
    return p;
}

std::vector<int> random_labels(Eigen::Index n, int classes, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> d(0, classes - 1);
    std::vector<int> out(static_cast<size_t>(n));
    for (auto& v : out) v = d(rng);
    return out;
}

} // namespace

TEST_CASE("cross entropy of the uniform distribution is ln C") {
    const Eigen::MatrixXd p = Eigen::MatrixXd::Constant(5, 4, 0.25);
    const TD loss = cross_entropy(TD::constant(p), {0, 1, 2, 3, 0});
    CHECK(loss.value()(0, 0) == doctest::Approx(std::log(4.0)).epsilon(1e-12)); // 1.386294
}

TEST_CASE("cross entropy of a confident correct prediction is near zero") {
    Eigen::MatrixXd p = Eigen::MatrixXd::Constant(3, 2, 1e-7);
    for (Eigen::Index i = 0; i < 3; ++i) p(i, 0) = 1.0 - 1e-7;
    const TD loss = cross_entropy(TD::constant(p), {0, 0, 0});
    CHECK(loss.value()(0, 0) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(loss.value()(0, 0) > 0.0);
}

TEST_CASE("cross entropy rejects out-of-range labels") {
    const TD p = TD::constant(random_probs(3, 2, 1));
    CHECK_THROWS_AS(cross_entropy(p, {0, 2, 1}), DataError);
    CHECK_THROWS_AS(cross_entropy(p, {0, -1, 1}), DataError);
}

TEST_CASE("cross entropy gradient matches finite differences through softmax") {
    std::vector<TD> params = {TD::variable(random_matrix(6, 3, 9))};
    const std::vector<int> labels = {0, 1, 2, 0, 1, 2};
    auto build = [&] { return cross_entropy(nn::softmax_rows(params[0]), labels); };
    CHECK(max_rel_error(build, params) < 1e-5);
}

TEST_CASE("two-vertex toy adjacency loss is 0.5/e") {
    Eigen::MatrixX3d v(2, 3);
    v << 0, 0, 0, 1, 0, 0;
    Eigen::MatrixXd p(2, 2);
    p << 1.0, 0.0, 0.5, 0.5; // Y = (1.0, 0.5) with labels (0, 0)
    AdjacencyData adj;
    adj.neighbors = {{1}, {0}};
    adj.ring_counts.resize(2);
    adj.ring_counts << 1, 1;
    const TD loss = adjacency_loss(TD::constant(p), {0, 0}, v, adj, 0.5);
    CHECK(loss.value()(0, 0) == doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-12)); // 0.183940
}

TEST_CASE("constant predictive values give zero adjacency loss") {
    const Mesh m = normalize_to_unit_cube(testmesh::icosphere(1));
    const AdjacencyData adj = adjacency_of(m);
    Eigen::MatrixXd p = Eigen::MatrixXd::Constant(m.vertex_count(), 3, 1.0 / 3.0);
    const std::vector<int> labels = random_labels(m.vertex_count(), 3, 5);
    const TD loss = adjacency_loss(TD::constant(p), labels, m.vertices, adj, 0.25);
    CHECK(loss.value()(0, 0) == 0.0);
}

TEST_CASE("sparse evaluation equals the dense oracle") {
    // a real mesh and several random graphs, n <= 50
    {
        const Mesh m = normalize_to_unit_cube(testmesh::icosphere(1)); // n = 42
        const AdjacencyData adj = adjacency_of(m);
        const Eigen::MatrixXd p = random_probs(m.vertex_count(), 4, 11);
        const std::vector<int> labels = random_labels(m.vertex_count(), 4, 12);
        for (double sigma : {0.05, 0.3, 2.0}) {
            const TD loss = adjacency_loss(TD::constant(p), labels, m.vertices, adj, sigma);
            const double oracle = dense_adjacency_oracle(p, labels, m.vertices, adj, sigma);
            CHECK(loss.value()(0, 0) == doctest::Approx(oracle).epsilon(1e-12));
        }
    }
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::Index n = 20;
        AdjacencyData adj;
        adj.neighbors.assign(static_cast<size_t>(n), {});
        std::uniform_int_distribution<int> pick(0, static_cast<int>(n) - 1);
        for (int e = 0; e < 40; ++e) {
            int a = pick(rng), b = pick(rng);
            if (a == b) continue;
            auto& na = adj.neighbors[static_cast<size_t>(a)];
            if (std::find(na.begin(), na.end(), b) != na.end()) continue;
            na.push_back(b);
            adj.neighbors[static_cast<size_t>(b)].push_back(a);
        }
        for (auto& nb : adj.neighbors) std::sort(nb.begin(), nb.end());
        adj.ring_counts.resize(n);
        for (Eigen::Index i = 0; i < n; ++i)
            adj.ring_counts[i] = static_cast<int>(adj.neighbors[static_cast<size_t>(i)].size());

        const Eigen::MatrixX3d v = random_matrix(n, 3, 1000 + static_cast<std::uint64_t>(trial));
        const Eigen::MatrixXd p = random_probs(n, 3, 2000 + static_cast<std::uint64_t>(trial));
        const std::vector<int> labels = random_labels(n, 3, 3000 + static_cast<std::uint64_t>(trial));
        const TD loss = adjacency_loss(TD::constant(p), labels, v, adj, 0.4);
        const double oracle = dense_adjacency_oracle(p, labels, v, adj, 0.4);
        CHECK(loss.value()(0, 0) == doctest::Approx(oracle).epsilon(1e-12));
    }
}

TEST_CASE("adjacency loss rejects non-positive sigma") {
    const Mesh m = testmesh::two_triangles();
    const AdjacencyData adj = adjacency_of(m);
    const TD p = TD::constant(random_probs(m.vertex_count(), 2, 3));
    CHECK_THROWS_AS(adjacency_loss(p, random_labels(m.vertex_count(), 2, 4), m.vertices, adj, 0.0),
                    NumericalError);
}

TEST_CASE("adjacency loss is non-negative and invariant under rigid motion") {
    const Mesh m = normalize_to_unit_cube(testmesh::bumpy_sphere(1, 0.1, 41));
    const AdjacencyData adj = adjacency_of(m);
    const Eigen::MatrixXd p = random_probs(m.vertex_count(), 3, 21);
    const std::vector<int> labels = random_labels(m.vertex_count(), 3, 22);
    const double base =
        adjacency_loss(TD::constant(p), labels, m.vertices, adj, 0.3).value()(0, 0);
    CHECK(base >= 0.0);

    Eigen::Matrix3d rot;
    rot = Eigen::AngleAxisd(0.83, Eigen::Vector3d(1, 2, -1).normalized());
    Eigen::MatrixX3d moved = m.vertices * rot.transpose();
    moved.rowwise() += Eigen::RowVector3d(0.7, -0.2, 0.1);
    const double rotated =
        adjacency_loss(TD::constant(p), labels, moved, adj, 0.3).value()(0, 0);
    CHECK(rotated == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("adjacency loss never decreases as sigma grows") {
    const Mesh m = normalize_to_unit_cube(testmesh::icosphere(1));
    const AdjacencyData adj = adjacency_of(m);
    const Eigen::MatrixXd p = random_probs(m.vertex_count(), 3, 31);
    const std::vector<int> labels = random_labels(m.vertex_count(), 3, 32);
    double prev = 0.0;
    for (double sigma : {0.01, 0.05, 0.2, 1.0, 5.0}) {
        const double v = adjacency_loss(TD::constant(p), labels, m.vertices, adj, sigma).value()(0, 0);
        CHECK(v >= prev - 1e-15);
        prev = v;
    }
}

TEST_CASE("isolated vertices are excluded from the average") {
    // same graph with and without an isolated extra vertex
    AdjacencyData adj2;
    adj2.neighbors = {{1}, {0}};
    adj2.ring_counts.resize(2);
    adj2.ring_counts << 1, 1;
    AdjacencyData adj3;
    adj3.neighbors = {{1}, {0}, {}};
    adj3.ring_counts.resize(3);
    adj3.ring_counts << 1, 1, 0;

    Eigen::MatrixX3d v2(2, 3), v3(3, 3);
    v2 << 0, 0, 0, 1, 0, 0;
    v3 << 0, 0, 0, 1, 0, 0, 9, 9, 9;
    Eigen::MatrixXd p2(2, 2), p3(3, 2);
    p2 << 0.9, 0.1, 0.4, 0.6;
    p3 << 0.9, 0.1, 0.4, 0.6, 0.5, 0.5;
    const double a = adjacency_loss(TD::constant(p2), {0, 0}, v2, adj2, 0.5).value()(0, 0);
    const double b = adjacency_loss(TD::constant(p3), {0, 0, 1}, v3, adj3, 0.5).value()(0, 0);
    CHECK(a == doctest::Approx(b).epsilon(1e-15));
}

TEST_CASE("squared-distance kernel variant matches its oracle") {
    const Mesh m = normalize_to_unit_cube(testmesh::icosphere(1));
    const AdjacencyData adj = adjacency_of(m);
    const Eigen::MatrixXd p = random_probs(m.vertex_count(), 3, 51);
    const std::vector<int> labels = random_labels(m.vertex_count(), 3, 52);
    const TD loss = adjacency_loss(TD::constant(p), labels, m.vertices, adj, 0.3, true);
    const double oracle = dense_adjacency_oracle(p, labels, m.vertices, adj, 0.3, true);
    CHECK(loss.value()(0, 0) == doctest::Approx(oracle).epsilon(1e-12));
    // the two kernels genuinely differ
    const double plain = adjacency_loss(TD::constant(p), labels, m.vertices, adj, 0.3).value()(0, 0);
    CHECK(std::abs(plain - loss.value()(0, 0)) > 1e-6);
}

TEST_CASE("omega = 0 reduces combined loss to cross entropy bitwise") {
    const Mesh m = normalize_to_unit_cube(testmesh::icosphere(1));
    const AdjacencyData adj = adjacency_of(m);
    const Eigen::MatrixXd p = random_probs(m.vertex_count(), 3, 61);
    const std::vector<int> labels = random_labels(m.vertex_count(), 3, 62);
    LossConfig cfg;
    cfg.omega = 0.0;
    cfg.sigma = 0.5;
    const TD combined = combined_loss(TD::constant(p), labels, m.vertices, adj, cfg);
    const TD ce = cross_entropy(TD::constant(p), labels);
    CHECK(combined.value()(0, 0) == ce.value()(0, 0));
}

TEST_CASE("omega = 1 exceeds both components") {
    const Mesh m = normalize_to_unit_cube(testmesh::icosphere(1));
    const AdjacencyData adj = adjacency_of(m);
    const Eigen::MatrixXd p = random_probs(m.vertex_count(), 3, 71);
    const std::vector<int> labels = random_labels(m.vertex_count(), 3, 72);
    LossConfig cfg;
    cfg.omega = 1.0;
    cfg.sigma = 0.5;
    const double combined =
        combined_loss(TD::constant(p), labels, m.vertices, adj, cfg).value()(0, 0);
    const double ce = cross_entropy(TD::constant(p), labels).value()(0, 0);
    const double adj_term =
        adjacency_loss(TD::constant(p), labels, m.vertices, adj, cfg.sigma).value()(0, 0);
    CHECK(ce > 0.0);
    CHECK(adj_term > 0.0);
    CHECK(combined == doctest::Approx(ce + adj_term).epsilon(1e-12));
    CHECK(combined > ce);
    CHECK(combined > adj_term);
}

TEST_CASE("combined loss gradient matches finite differences") {
    const Mesh m = normalize_to_unit_cube(testmesh::two_triangles());
    const AdjacencyData adj = adjacency_of(m);
    const std::vector<int> labels = {0, 1, 0, 1, 0, 1};
    std::vector<TD> params = {TD::variable(random_matrix(6, 2, 81))};
    LossConfig cfg;
    cfg.omega = 0.7;
    cfg.sigma = 0.4;
    auto build = [&] {
        return combined_loss(nn::softmax_rows(params[0]), labels, m.vertices, adj, cfg);
    };
    CHECK(max_rel_error(build, params) < 1e-5);
}

TEST_CASE("Prediction validation flags bad row sums") {
    Prediction good{random_probs(4, 3, 91)};
    CHECK_NOTHROW(good.check());
    Prediction bad{Eigen::MatrixXd::Constant(2, 3, 0.5)};
    CHECK_THROWS_AS(bad.check(), NumericalError);
}
