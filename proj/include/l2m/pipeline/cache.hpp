#pragma once

#include "l2m/descriptors.hpp"
#include "l2m/pipeline/dataset.hpp"
#include "l2m/spectral.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>

namespace l2m {

// FNV-1a over the file bytes; used only for cache invalidation.
std::uint64_t content_hash(const std::filesystem::path& path);
std::string hash_hex(std::uint64_t h);

// Everything training needs that is expensive to recompute, keyed by the
// content hash of the source mesh.
struct CacheEntry {
    std::filesystem::path source;
    std::uint64_t hash = 0;
    EigenBasis basis; // k = min(k0, n)
    VertexFeatures features;
    std::vector<int> vertex_labels; // segmentation only
    std::vector<int> face_labels;   // segmentation only
};

std::filesystem::path cache_file_for(const std::filesystem::path& cache_dir,
                                     const std::filesystem::path& mesh_path);

void write_cache_entry(const CacheEntry& entry, const std::filesystem::path& file);
CacheEntry read_cache_entry(const std::filesystem::path& file);

// Valid means: file exists, the stored hash matches the current mesh bytes,
// and the stored basis size equals min(k0, n).
bool cache_entry_valid(const std::filesystem::path& cache_dir, const ManifestEntry& entry,
                       Eigen::Index k0);

struct PreprocessStats {
    int computed = 0;
    int reused = 0;
    int failed = 0;
};

// Normalize -> topology -> Laplacian -> eigenbasis -> features -> labels for
// every manifest entry, in parallel over meshes (threads <= 1 runs serial).
// Also copies the manifest into cache_dir/manifest.json so downstream
// commands need only the cache directory. Per-mesh failures are logged and
// counted, not fatal.
PreprocessStats preprocess(const DatasetManifest& manifest, Eigen::Index k0,
                           const std::filesystem::path& cache_dir, int threads = 1);

// Single-mesh pipeline used by preprocess and by augmented training steps.
CacheEntry compute_entry(const Mesh& raw_mesh, Eigen::Index k0, const std::string& provenance,
                         const std::vector<int>* face_labels);

int thread_count_from_env(); // L2M_THREADS, default 1

} // namespace l2m
