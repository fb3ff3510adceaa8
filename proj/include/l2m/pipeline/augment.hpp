#pragma once

#include "l2m/mesh.hpp"

#include <random>

namespace l2m {

// Per-axis scale factors: independent Normal(1, stddev) draws clamped to
// [0.5, 1.5].
Eigen::Vector3d sample_scale_factors(std::mt19937_64& rng, double stddev = 0.1);

// Random anisotropic scaling followed by unit-cube renormalization.
Mesh augment_scale(const Mesh& mesh, std::mt19937_64& rng, double stddev = 0.1);

// Quarter-turn rotation: three Euler angles drawn from {0, pi/2, pi, 3pi/2},
// applied about z, then y, then x. Entries are exact (0/±1), so coordinates
// are permuted and negated, never perturbed.
Eigen::Matrix3d sample_quarter_rotation(std::mt19937_64& rng);
Eigen::Matrix3d quarter_rotation(int z_quarter, int y_quarter, int x_quarter);

Mesh augment_rotate(const Mesh& mesh, std::mt19937_64& rng);

} // namespace l2m
