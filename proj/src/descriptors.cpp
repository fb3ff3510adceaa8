#include "l2m/descriptors.hpp"
#include "l2m/errors.hpp"

#include <algorithm>
#include <cmath>

namespace l2m {
namespace {

constexpr double kPi = 3.14159265358979323846;

// interior angle at corner p, clamped to [0, pi]
double corner_angle(const Eigen::Vector3d& p, const Eigen::Vector3d& q, const Eigen::Vector3d& r) {
    const Eigen::Vector3d u = q - p, v = r - p;
    return std::atan2(u.cross(v).norm(), u.dot(v)); // atan2 >= 0 since cross norm >= 0
}

} // namespace

Eigen::VectorXd gaussian_curvature(const Mesh& mesh, const MeshTopology& topo) {
    const Eigen::Index n = mesh.vertex_count();
    Eigen::VectorXd angle_sum = Eigen::VectorXd::Zero(n);
    for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
        const Eigen::Vector3d a = mesh.vertices.row(mesh.faces(f, 0));
        const Eigen::Vector3d b = mesh.vertices.row(mesh.faces(f, 1));
        const Eigen::Vector3d c = mesh.vertices.row(mesh.faces(f, 2));
        angle_sum[mesh.faces(f, 0)] += corner_angle(a, b, c);
        angle_sum[mesh.faces(f, 1)] += corner_angle(b, c, a);
        angle_sum[mesh.faces(f, 2)] += corner_angle(c, a, b);
    }
    Eigen::VectorXd defect(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (topo.vertex_faces[static_cast<size_t>(i)].empty())
            defect[i] = 0.0;
        else if (topo.vertex_boundary[static_cast<size_t>(i)])
            defect[i] = kPi - angle_sum[i];
        else
            defect[i] = 2.0 * kPi - angle_sum[i];
    }
    return defect;
}

Eigen::MatrixX3d vertex_normals(const Mesh& mesh, const MeshTopology& topo) {
    (void)topo;
    const Eigen::Index n = mesh.vertex_count();
    Eigen::MatrixX3d acc = Eigen::MatrixX3d::Zero(n, 3);
    for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
        const Eigen::Vector3d a = mesh.vertices.row(mesh.faces(f, 0));
        const Eigen::Vector3d b = mesh.vertices.row(mesh.faces(f, 1));
        const Eigen::Vector3d c = mesh.vertices.row(mesh.faces(f, 2));
        const Eigen::Vector3d area_n = 0.5 * (b - a).cross(c - a); // length = face area
        for (int j = 0; j < 3; ++j) acc.row(mesh.faces(f, j)) += area_n.transpose();
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const double len = acc.row(i).norm();
        if (len > 1e-20)
            acc.row(i) /= len;
        else
            acc.row(i).setZero();
    }
    return acc;
}

Eigen::MatrixXd hks(const EigenBasis& basis, const std::vector<double>& times) {
    if (basis.k() < 2) throw DataError("hks: basis needs at least 2 eigenpairs");
    for (double t : times)
        if (!(t > 0.0)) throw NumericalError("hks: non-positive time value");
    const int skip = std::max(1, basis.near_zero_count());
    const Eigen::Index n = basis.n();
    Eigen::MatrixXd out(n, static_cast<Eigen::Index>(times.size()));
    const Eigen::MatrixXd sq = basis.vectors.rightCols(basis.k() - skip).array().square();
    for (size_t ti = 0; ti < times.size(); ++ti) {
        Eigen::VectorXd weights(basis.k() - skip);
        for (Eigen::Index i = skip; i < basis.k(); ++i)
            weights[i - skip] = std::exp(-basis.eigenvalues[i] * times[ti]);
        Eigen::VectorXd col = sq * weights;
        const double total = col.sum();
        if (total > 0.0) col /= total;
        out.col(static_cast<Eigen::Index>(ti)) = col;
    }
    return out;
}

std::vector<double> default_hks_times(const EigenBasis& basis) {
    const int skip = std::max(1, basis.near_zero_count());
    if (skip >= basis.k())
        throw NumericalError("default_hks_times: no nonzero eigenvalues");
    const double lam_lo = basis.eigenvalues[skip];
    const double lam_hi = basis.eigenvalues[basis.k() - 1];
    if (lam_lo < 1e-12 || lam_hi < 1e-12)
        throw NumericalError("default_hks_times: nonzero eigenvalues below 1e-12");
    const double t_min = 4.0 * std::log(10.0) / lam_hi;
    const double t_max = 4.0 * std::log(10.0) / lam_lo;
    std::vector<double> times(9);
    if (t_max <= t_min) {
        std::fill(times.begin(), times.end(), t_min);
        return times;
    }
    const double step = (std::log(t_max) - std::log(t_min)) / 8.0;
    for (int i = 0; i < 9; ++i) times[static_cast<size_t>(i)] = std::exp(std::log(t_min) + step * i);
    return times;
}

FaceDihedrals face_dihedrals(const Mesh& mesh, const MeshTopology& topo) {
    const Eigen::Index nf = mesh.face_count();
    Eigen::MatrixX3d normals(nf, 3);
    for (Eigen::Index f = 0; f < nf; ++f) {
        const Eigen::Vector3d a = mesh.vertices.row(mesh.faces(f, 0));
        const Eigen::Vector3d b = mesh.vertices.row(mesh.faces(f, 1));
        const Eigen::Vector3d c = mesh.vertices.row(mesh.faces(f, 2));
        Eigen::Vector3d nrm = (b - a).cross(c - a);
        const double len = nrm.norm();
        if (len > 1e-20)
            normals.row(f) = (nrm / len).transpose();
        else
            normals.row(f).setZero();
    }

    FaceDihedrals out;
    out.values.resize(nf, 3);
    out.discarded.assign(static_cast<size_t>(nf), {false, false, false});
    for (Eigen::Index f = 0; f < nf; ++f) {
        for (int s = 0; s < 3; ++s) {
            const int a = mesh.faces(f, s), b = mesh.faces(f, (s + 1) % 3);
            const Edge& e = topo.edges[static_cast<size_t>(topo.find_edge(a, b))];
            if (e.kind == EdgeKind::NonManifold) {
                out.values(f, s) = 1.0;
                out.discarded[static_cast<size_t>(f)][static_cast<size_t>(s)] = true;
            } else if (e.kind == EdgeKind::Boundary) {
                out.values(f, s) = 1.0; // pad: gentle terrain
            } else {
                const int other = e.faces[0] == static_cast<int>(f) ? e.faces[1] : e.faces[0];
                if (normals.row(f).isZero() || normals.row(other).isZero())
                    out.values(f, s) = 1.0;
                else
                    out.values(f, s) = std::clamp(normals.row(f).dot(normals.row(other)), -1.0, 1.0);
            }
        }
    }
    return out;
}

Eigen::MatrixX3d dihedral_vertex_features(const Mesh& mesh, const MeshTopology& topo,
                                          const FaceDihedrals& face_d) {
    (void)mesh;
    const size_t n = topo.vertex_faces.size();
    Eigen::MatrixX3d out(static_cast<Eigen::Index>(n), 3);
    for (size_t v = 0; v < n; ++v) {
        double sums[3] = {0, 0, 0};
        int counts[3] = {0, 0, 0};
        for (int f : topo.vertex_faces[v]) {
            double kept[3];
            int m = 0;
            for (int s = 0; s < 3; ++s)
                if (!face_d.discarded[static_cast<size_t>(f)][static_cast<size_t>(s)])
                    kept[m++] = face_d.values(f, s);
            std::sort(kept, kept + m);
            for (int s = 0; s < m; ++s) {
                sums[s] += kept[s];
                ++counts[s];
            }
        }
        double comp[3];
        for (int s = 0; s < 3; ++s) comp[s] = counts[s] > 0 ? sums[s] / counts[s] : 1.0;
        std::sort(comp, comp + 3);
        out.row(static_cast<Eigen::Index>(v)) << comp[0], comp[1], comp[2];
    }
    return out;
}

Eigen::MatrixXd eigvec_features(const EigenBasis& basis) {
    const int skip = std::max(1, basis.near_zero_count());
    if (basis.k() < skip + 20)
        throw DataError("eigvec_features: basis too small (k=" + std::to_string(basis.k()) +
                        ", need " + std::to_string(skip + 20) + " with " + std::to_string(skip) +
                        " zero modes)");
    return basis.vectors.middleCols(skip, 20).cwiseAbs();
}

VertexFeatures assemble_features(const Mesh& mesh, const MeshTopology& topo,
                                 const EigenBasis& basis) {
    const Eigen::Index n = mesh.vertex_count();
    if (basis.n() != n)
        throw DataError("assemble_features: basis size does not match mesh");
    VertexFeatures vf;
    vf.data.resize(n, VertexFeatures::kColumns);
    vf.data.middleCols(0, 3) = mesh.vertices;
    vf.data.middleCols(3, 3) = vertex_normals(mesh, topo);
    vf.data.middleCols(6, 3) = dihedral_vertex_features(mesh, topo, face_dihedrals(mesh, topo));
    vf.data.col(9) = gaussian_curvature(mesh, topo);
    vf.data.middleCols(10, 9) = hks(basis, default_hks_times(basis));
    vf.data.middleCols(19, 20) = eigvec_features(basis);
    return vf;
}

} // namespace l2m
