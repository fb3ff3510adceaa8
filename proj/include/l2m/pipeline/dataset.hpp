#pragma once

#include "l2m/mesh.hpp"
#include "l2m/nn/model.hpp"
#include "l2m/topology.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace l2m {

enum class Split : std::uint8_t { Train, Test };

struct ManifestEntry {
    std::filesystem::path mesh_path; // resolved against the manifest directory
    Split split = Split::Train;
    int label = -1;                    // classification
    std::filesystem::path label_path;  // segmentation: one face label per line
};

// JSON dataset index: {"task": "classification"|"segmentation",
// "classes": [...], "entries": [{"mesh": p, "split": "train", "label": i} |
// {"mesh": p, "split": "test", "labels": p}]}
struct DatasetManifest {
    nn::Task task = nn::Task::Classification;
    std::vector<std::string> class_names;
    std::vector<ManifestEntry> entries;

    int classes() const { return static_cast<int>(class_names.size()); }
    std::vector<int> split_indices(Split s) const;

    // Validates that referenced files exist and labels are inside the class
    // table; throws DataError otherwise.
    static DatasetManifest load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

// Face label file: whitespace-separated integers, one per face.
std::vector<int> read_face_labels(const std::filesystem::path& path);

// Majority vote of incident face labels per vertex; ties take the smallest
// label id; vertices with no incident faces get 0 (warned on stderr).
std::vector<int> vertex_labels_from_face_labels(const MeshTopology& topo,
                                                const std::vector<int>& face_labels);

// Fraction of faces whose predicted label (argmax over the summed probability
// rows of the face's 3 vertices; ties take the smallest class) matches the
// ground truth.
double face_accuracy(const Eigen::MatrixXd& probabilities, const std::vector<int>& face_labels,
                     const Mesh& mesh);

double mean_edge_length(const Mesh& mesh, const MeshTopology& topo);

} // namespace l2m
