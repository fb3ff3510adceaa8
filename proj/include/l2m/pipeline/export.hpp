#pragma once

#include "l2m/mesh.hpp"

#include <filesystem>
#include <vector>

namespace l2m {

// Fixed 16-entry color palette for label rendering.
std::array<std::array<std::uint8_t, 3>, 16> label_palette();

// ASCII PLY with per-face RGB taken from the palette. Throws DataError when
// a label exceeds the palette.
void export_colored_mesh(const Mesh& mesh, const std::vector<int>& face_labels,
                         const std::filesystem::path& path);

// argmax over the summed vertex probability rows of each face (smallest
// class wins ties), matching the face-accuracy rule.
std::vector<int> face_labels_from_probabilities(const Eigen::MatrixXd& probabilities,
                                                const Mesh& mesh);

} // namespace l2m
