#pragma once

#include "l2m/loss.hpp"
#include "l2m/nn/model.hpp"
#include "l2m/pipeline/cache.hpp"
#include "l2m/pipeline/dataset.hpp"

#include <filesystem>
#include <optional>

namespace l2m {

struct TrainConfig {
    nn::ModelConfig model;
    LossConfig loss{0.0, 1.0, false}; // sigma <= 0: use the per-mesh mean edge length
    int epochs = 100;
    double lr = 1e-3;
    bool cosine_decay = true;
    int batch_size = 8; // classification gradient-accumulation group
    bool aug_scale = false;
    bool aug_rotate = false;
    std::uint64_t seed = 1;

    // Reads the JSON config and fills task/class count from the manifest.
    // Absent keys keep defaults; the default k pyramid is (512,128,32) for
    // segmentation and (256,64,16) for classification.
    static TrainConfig from_json_file(const std::filesystem::path& path,
                                      const DatasetManifest& manifest);
    static TrainConfig defaults_for(const DatasetManifest& manifest);
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double test_metric = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    double best_metric = 0.0;
    int best_epoch = -1;
    std::vector<EpochLog> log;
    std::filesystem::path checkpoint_file;
};

// Everything one mesh contributes to training, resident in memory.
struct MeshBundle {
    ManifestEntry entry;
    CacheEntry cache;
    Mesh mesh; // normalized
    AdjacencyData adjacency;
    double mean_edge = 0.0;
};

MeshBundle load_bundle(const DatasetManifest& manifest, const ManifestEntry& entry,
                       const std::filesystem::path& cache_dir);

// Multi-resolution spectral inputs: the feature matrix projected onto the
// basis, zero-padded to k0 rows, plus the k1/k2 prefixes (projection onto a
// prefix basis IS row truncation).
std::array<Eigen::MatrixXd, 3> spectral_inputs(const EigenBasis& basis,
                                               const Eigen::MatrixXd& features,
                                               const std::array<Eigen::Index, 3>& k_pyramid);

// Eigenbasis extended to n x k0 with zero columns past the actual basis size,
// for vertex-domain recovery at a fixed spectral width.
Eigen::MatrixXd extended_basis(const EigenBasis& basis, Eigen::Index k0);

// Trains on the cache's train split, evaluating the test split each epoch and
// keeping the best checkpoint (out_dir/checkpoint.l2mt + .json). Metrics go
// to out_dir/metrics.jsonl. Aborts with NumericalError naming the mesh if the
// loss goes non-finite.
TrainResult train(const TrainConfig& config, const std::filesystem::path& cache_dir,
                  const std::filesystem::path& out_dir);

struct EvalResult {
    double metric = 0.0; // classification: mesh accuracy; segmentation: mean face accuracy
    std::vector<std::pair<std::string, double>> per_mesh;
};

EvalResult evaluate(const std::filesystem::path& checkpoint_file,
                    const std::filesystem::path& cache_dir, Split split);

// checkpoint IO
void save_checkpoint(nn::ClassifierModel<float>& model, const TrainConfig& config,
                     const std::filesystem::path& file);
void save_checkpoint(nn::SegmenterModel<float>& model, const TrainConfig& config,
                     const std::filesystem::path& file);
TrainConfig read_checkpoint_config(const std::filesystem::path& file);
nn::ClassifierModel<float> load_classifier(const std::filesystem::path& file);
nn::SegmenterModel<float> load_segmenter(const std::filesystem::path& file);

// Forward passes on plain double inputs (inference helpers).
Eigen::RowVectorXd classify_logits(nn::ClassifierModel<float>& model, const MeshBundle& b);
Eigen::MatrixXd segment_probabilities(nn::SegmenterModel<float>& model, const MeshBundle& b);

// Full single-mesh inference for a segmentation checkpoint.
Eigen::MatrixXd segment_mesh_file(const std::filesystem::path& checkpoint_file,
                                  const std::filesystem::path& mesh_path, Mesh* out_mesh);

} // namespace l2m
