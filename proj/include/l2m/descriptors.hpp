#pragma once

#include "l2m/mesh.hpp"
#include "l2m/spectral.hpp"
#include "l2m/topology.hpp"

#include <array>
#include <vector>

namespace l2m {

// Per-vertex input features, n x 39. Column layout:
//   0-2   vertex coordinates            (extrinsic)
//   3-5   unit vertex normals           (extrinsic)
//   6-8   vertex dihedral features      (extrinsic)
//   9     Gaussian curvature            (intrinsic)
//   10-18 HKS at 9 time samples         (intrinsic)
//   19-38 |eigenvector| values, 20 cols (intrinsic)
struct VertexFeatures {
    Eigen::MatrixXd data;

    static constexpr int kColumns = 39;
    static constexpr int kExtrinsic = 9;
    static constexpr int kIntrinsic = 30;

    auto extrinsic() const { return data.leftCols(kExtrinsic); }
    auto intrinsic() const { return data.rightCols(kIntrinsic); }
};

// Angle defect: 2*pi minus the incident triangle angles for interior
// vertices, pi minus for boundary vertices, 0 for isolated ones. No area
// division; stable after unit-cube normalization.
Eigen::VectorXd gaussian_curvature(const Mesh& mesh, const MeshTopology& topo);

// Area-weighted average of incident face normals, unit length (zero for
// isolated vertices or cancelling incident normals).
Eigen::MatrixX3d vertex_normals(const Mesh& mesh, const MeshTopology& topo);

// Heat kernel signature sum over non-constant modes, one column per time
// sample, each column normalized to unit vertex-sum.
Eigen::MatrixXd hks(const EigenBasis& basis, const std::vector<double>& times);

// 9 log-spaced times on [4 ln10 / lambda_max, 4 ln10 / lambda_min_nonzero].
std::vector<double> default_hks_times(const EigenBasis& basis);

// Per-face, per-edge-slot dihedral feature: dot product of the unit normals
// of the face and its neighbor across that slot (1 = coplanar). Boundary
// slots are padded with 1; slots on non-manifold edges hold 1 and are marked
// discarded so vertex aggregation can skip them.
struct FaceDihedrals {
    Eigen::MatrixX3d values;                    // |F| x 3, slot s is edge (f[s], f[s+1])
    std::vector<std::array<bool, 3>> discarded; // non-manifold slots
};
FaceDihedrals face_dihedrals(const Mesh& mesh, const MeshTopology& topo);

// Vertex aggregation of face dihedrals: each incident face contributes its
// kept slot values sorted ascending; positions are averaged across faces and
// the result sorted again. Sorting before the average is what makes the
// output independent of the arbitrary slot order inside each face. Isolated
// vertices get (1,1,1).
Eigen::MatrixX3d dihedral_vertex_features(const Mesh& mesh, const MeshTopology& topo,
                                          const FaceDihedrals& face_d);

// Absolute values of the 20 lowest-frequency eigenvectors, skipping the
// leading near-zero (constant per component) modes. Requires k >= 20 + c.
Eigen::MatrixXd eigvec_features(const EigenBasis& basis);

VertexFeatures assemble_features(const Mesh& mesh, const MeshTopology& topo,
                                 const EigenBasis& basis);

} // namespace l2m
