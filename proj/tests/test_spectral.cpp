#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "l2m/errors.hpp"
#include "l2m/spectral.hpp"
#include "testmesh.hpp"

#include <random>

using namespace l2m;

namespace {

// Independent oracle: assembles the dense cotangent matrix straight from the
// defining formula, then solves with the dense symmetric eigensolver.
Eigen::MatrixXd dense_cot_matrix(const Mesh& m) {
    const Eigen::Index n = m.vertex_count();
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index f = 0; f < m.face_count(); ++f) {
        const int idx[3] = {m.faces(f, 0), m.faces(f, 1), m.faces(f, 2)};
        for (int corner = 0; corner < 3; ++corner) {
            const Eigen::Vector3d p = m.vertices.row(idx[corner]);
            const Eigen::Vector3d q = m.vertices.row(idx[(corner + 1) % 3]);
            const Eigen::Vector3d r = m.vertices.row(idx[(corner + 2) % 3]);
            const double cot = (q - p).dot(r - p) / (q - p).cross(r - p).norm();
            const int a = idx[(corner + 1) % 3], b = idx[(corner + 2) % 3];
            L(a, b) -= 0.5 * cot;
            L(b, a) -= 0.5 * cot;
            L(a, a) += 0.5 * cot;
            L(b, b) += 0.5 * cot;
        }
    }
    return L;
}

Eigen::VectorXd oracle_eigenvalues(const Mesh& m, Eigen::Index k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_cot_matrix(m));
    return es.eigenvalues().head(k);
}

struct MeshBasis {
    SparseSymMatrix lap;
    EigenBasis basis;
};

MeshBasis full_basis(const Mesh& raw, const std::string& provenance = "anonymous") {
    const Mesh m = normalize_to_unit_cube(raw);
    MeshBasis mb;
    mb.lap = cotangent_laplacian(m, build_topology(m));
    EigOptions opts;
    opts.provenance = provenance;
    mb.basis = smallest_eigenpairs(mb.lap, m.vertex_count(), opts);
    return mb;
}

double basis_residual(const SparseSymMatrix& L, const EigenBasis& b) {
    return (L * b.vectors - b.vectors * b.eigenvalues.asDiagonal().toDenseMatrix()).norm();
}

} // namespace

TEST_CASE("k=1 on a connected mesh is the constant eigenvector") {
    const Mesh m = normalize_to_unit_cube(testmesh::icosphere(1));
    const SparseSymMatrix L = cotangent_laplacian(m, build_topology(m));
    const EigenBasis b = smallest_eigenpairs(L, 1);
    CHECK(b.eigenvalues[0] <= 1e-8);
    const double expected = 1.0 / std::sqrt(static_cast<double>(m.vertex_count()));
    for (Eigen::Index i = 0; i < b.n(); ++i)
        CHECK(std::abs(b.vectors(i, 0)) == doctest::Approx(expected).epsilon(1e-8));
    CHECK(b.vectors(0, 0) > 0); // sign convention
}

TEST_CASE("two disjoint triangles have two zero eigenvalues") {
    const Mesh m = normalize_to_unit_cube(testmesh::two_triangles());
    const SparseSymMatrix L = cotangent_laplacian(m, build_topology(m));
    const EigenBasis b = smallest_eigenpairs(L, 3);
    CHECK(b.eigenvalues[0] <= 1e-10);
    CHECK(b.eigenvalues[1] <= 1e-10);
    CHECK(b.eigenvalues[2] > 1e-6);
    CHECK(b.near_zero_count() == 2);
}

TEST_CASE("icosahedron eigenvalues match the dense oracle") {
    const Mesh m = normalize_to_unit_cube(testmesh::icosahedron());
    const SparseSymMatrix L = cotangent_laplacian(m, build_topology(m));
    const EigenBasis b = smallest_eigenpairs(L, 12);
    const Eigen::VectorXd oracle = oracle_eigenvalues(m, 12);
    CHECK((b.eigenvalues - oracle).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("eigenbasis invariants hold on varied meshes") {
    for (const Mesh& raw : {testmesh::tetrahedron(), testmesh::icosphere(2),
                            testmesh::torus(12, 10), testmesh::nonmanifold_fan()}) {
        const MeshBasis mb = full_basis(raw);
        const EigenBasis& b = mb.basis;
        const double scale = std::max(1.0, b.eigenvalues.maxCoeff());
        CHECK(basis_residual(mb.lap, b) <=
              1e-8 * scale * std::sqrt(static_cast<double>(b.n() * b.k())));
        CHECK((b.vectors.transpose() * b.vectors -
               Eigen::MatrixXd::Identity(b.k(), b.k())).norm() <= 1e-8);
        for (Eigen::Index i = 0; i + 1 < b.k(); ++i)
            CHECK(b.eigenvalues[i] <= b.eigenvalues[i + 1] + 1e-14);
        CHECK(b.eigenvalues[0] >= 0.0);
    }
}

TEST_CASE("solver is bitwise deterministic") {
    const Mesh m = normalize_to_unit_cube(testmesh::bumpy_sphere(2, 0.1, 5));
    const SparseSymMatrix L = cotangent_laplacian(m, build_topology(m));
    const EigenBasis a = smallest_eigenpairs(L, 30);
    const EigenBasis b = smallest_eigenpairs(L, 30);
    CHECK((a.vectors - b.vectors).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Lanczos path agrees with the dense path") {
    const Mesh m = normalize_to_unit_cube(testmesh::icosphere(3)); // 642 vertices
    const SparseSymMatrix L = cotangent_laplacian(m, build_topology(m));
    EigOptions lanczos_opts;
    lanczos_opts.solver = EigSolver::Lanczos;
    const EigenBasis it = smallest_eigenpairs(L, 24, lanczos_opts);
    EigOptions dense_opts;
    dense_opts.solver = EigSolver::Dense;
    const EigenBasis de = smallest_eigenpairs(L, 24, dense_opts);
    CHECK((it.eigenvalues - de.eigenvalues).cwiseAbs().maxCoeff() < 1e-8);
    const double scale = std::max(1.0, de.eigenvalues.maxCoeff());
    CHECK(basis_residual(L, it) <= 1e-8 * scale * std::sqrt(static_cast<double>(it.n() * it.k())));
    CHECK((it.vectors.transpose() * it.vectors -
           Eigen::MatrixXd::Identity(24, 24)).norm() <= 1e-8);
}

TEST_CASE("k bounds are enforced") {
    const MeshBasis mb = full_basis(testmesh::tetrahedron());
    CHECK_THROWS_AS(smallest_eigenpairs(mb.lap, 0), DataError);
    CHECK_THROWS_AS(smallest_eigenpairs(mb.lap, 5), DataError);
}

TEST_CASE("prefix_basis slices and composes") {
    const MeshBasis mb = full_basis(testmesh::icosphere(1)); // n = 42
    const EigenBasis& b = mb.basis;
    const EigenBasis same = prefix_basis(b, b.k());
    CHECK((same.vectors - b.vectors).norm() == 0.0);
    const EigenBasis p4a = prefix_basis(prefix_basis(b, 8), 4);
    const EigenBasis p4b = prefix_basis(b, 4);
    CHECK((p4a.vectors - p4b.vectors).norm() == 0.0);
    CHECK((p4a.eigenvalues - p4b.eigenvalues).norm() == 0.0);
    CHECK_THROWS_AS(prefix_basis(b, 0), DataError);
    CHECK_THROWS_AS(prefix_basis(b, b.k() + 1), DataError);
}

TEST_CASE("projecting the basis onto itself gives the identity") {
    const MeshBasis mb = full_basis(testmesh::icosphere(1));
    const SpectralTensor s = project(mb.basis, mb.basis.vectors);
    CHECK((s.data - Eigen::MatrixXd::Identity(mb.basis.k(), mb.basis.k())).cwiseAbs().maxCoeff() <
          1e-10);
}

TEST_CASE("constant column projects onto the constant mode only") {
    const MeshBasis mb = full_basis(testmesh::icosphere(1));
    const double c = 2.5;
    const Eigen::MatrixXd g = Eigen::MatrixXd::Constant(mb.basis.n(), 1, c);
    const SpectralTensor s = project(mb.basis, g);
    const double expected = c * std::sqrt(static_cast<double>(mb.basis.n()));
    CHECK(std::abs(s.data(0, 0)) == doctest::Approx(expected).epsilon(1e-8));
    CHECK(s.data.bottomRows(s.data.rows() - 1).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("full-basis reconstruction is exact") {
    const Mesh m = normalize_to_unit_cube(testmesh::bumpy_sphere(2, 0.1, 9));
    const MeshBasis mb = full_basis(m);
    const Eigen::MatrixXd rec = reconstruct(mb.basis, project(mb.basis, m.vertices));
    CHECK(testmesh::rel_rms_error(m.vertices, rec) < 1e-9);
}

TEST_CASE("zero tensor reconstructs to zero") {
    const MeshBasis mb = full_basis(testmesh::icosphere(1));
    SpectralTensor s;
    s.resolution = mb.basis.k();
    s.data = Eigen::MatrixXd::Zero(mb.basis.k(), 3);
    s.provenance = mb.basis.provenance;
    CHECK(reconstruct(mb.basis, s).norm() == 0.0);
}

TEST_CASE("projection rejects row mismatch and provenance mismatch") {
    const MeshBasis mb = full_basis(testmesh::icosphere(1));
    CHECK_THROWS_AS(project(mb.basis, Eigen::MatrixXd::Zero(7, 3)), DataError);
    SpectralTensor s = project(mb.basis, Eigen::MatrixXd::Zero(mb.basis.n(), 3));
    s.provenance = "other";
    CHECK_THROWS_AS(reconstruct(mb.basis, s), DataError);
}

TEST_CASE("reconstruction error is non-increasing in k and energy ordering holds") {
    const Mesh m = normalize_to_unit_cube(testmesh::torus(14, 10));
    const MeshBasis mb = full_basis(m);
    const Eigen::Index n = mb.basis.n();
    double prev_err = std::numeric_limits<double>::infinity();
    double prev_energy = -1.0;
    for (Eigen::Index k = 1; k <= n; ++k) {
        const EigenBasis pk = prefix_basis(mb.basis, k);
        const SpectralTensor s = project(pk, m.vertices);
        const double err = (m.vertices - reconstruct(pk, s)).norm();
        CHECK(err <= prev_err + 1e-9);
        prev_err = err;
        const double energy = s.data.norm();
        CHECK(energy >= prev_energy - 1e-9);
        prev_energy = energy;
    }
    CHECK(prev_energy == doctest::Approx(m.vertices.norm()).epsilon(1e-9));
    CHECK(prev_err < 1e-9);
}

TEST_CASE("pool_transfer with the same basis is the identity") {
    const MeshBasis mb = full_basis(testmesh::icosphere(1));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    SpectralTensor s;
    s.resolution = mb.basis.k();
    s.data.resize(mb.basis.k(), 5);
    for (Eigen::Index i = 0; i < s.data.size(); ++i) s.data(i) = g(rng);
    s.provenance = mb.basis.provenance;
    const SpectralTensor out = pool_transfer(mb.basis, mb.basis, s);
    CHECK((out.data - s.data).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("prefix-basis pooling is row truncation, unpooling is zero-padding") {
    const MeshBasis mb = full_basis(testmesh::bumpy_sphere(1, 0.1, 13)); // n = 42
    const EigenBasis b32 = prefix_basis(mb.basis, 32);
    const EigenBasis b12 = prefix_basis(mb.basis, 12);
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
        SpectralTensor s;
        s.resolution = 32;
        s.data.resize(32, 4);
        for (Eigen::Index i = 0; i < s.data.size(); ++i) s.data(i) = g(rng);
        s.provenance = mb.basis.provenance;

        const SpectralTensor pooled = pool_transfer(b32, b12, s);
        CHECK((pooled.data - s.data.topRows(12)).cwiseAbs().maxCoeff() < 1e-10);

        const SpectralTensor unpooled = unpool_transfer(b32, b12, pooled);
        CHECK(unpooled.resolution == 32);
        CHECK((unpooled.data.topRows(12) - pooled.data).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(unpooled.data.bottomRows(20).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("pooling to a larger prefix zero-pads") {
    const MeshBasis mb = full_basis(testmesh::icosphere(1));
    const EigenBasis b8 = prefix_basis(mb.basis, 8);
    const EigenBasis b20 = prefix_basis(mb.basis, 20);
    SpectralTensor s;
    s.resolution = 8;
    s.data = Eigen::MatrixXd::Random(8, 3);
    s.provenance = mb.basis.provenance;
    const SpectralTensor out = pool_transfer(b8, b20, s);
    CHECK(out.resolution == 20);
    CHECK((out.data.topRows(8) - s.data).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(out.data.bottomRows(12).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("32 -> 128 -> 32 prefix round trip recovers the input") {
    const MeshBasis mb = full_basis(testmesh::icosphere(2)); // n = 162
    const EigenBasis b128 = prefix_basis(mb.basis, 128);
    const EigenBasis b32 = prefix_basis(mb.basis, 32);
    SpectralTensor s;
    s.resolution = 32;
    s.data = Eigen::MatrixXd::Random(32, 6);
    s.provenance = mb.basis.provenance;
    const SpectralTensor up = unpool_transfer(b128, b32, s);
    REQUIRE(up.resolution == 128);
    const SpectralTensor back = pool_transfer(b128, b32, up);
    CHECK((back.data - s.data).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("transfers reject provenance mismatches") {
    const MeshBasis a = full_basis(testmesh::icosphere(1), "mesh-a");
    MeshBasis b = full_basis(testmesh::torus(8, 6), "mesh-b");
    SpectralTensor s;
    s.resolution = a.basis.k();
    s.data = Eigen::MatrixXd::Zero(a.basis.k(), 2);
    s.provenance = a.basis.provenance;
    CHECK_THROWS_AS(pool_transfer(a.basis, b.basis, s), DataError);
}

TEST_CASE("default k0 is min(512, n)") {
    CHECK(default_k0(100) == 100);
    CHECK(default_k0(5000) == 512);
}
