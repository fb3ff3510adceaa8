#include "l2m/pipeline/cache.hpp"
#include "l2m/errors.hpp"
#include "l2m/pipeline/container.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

namespace l2m {

std::uint64_t content_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot hash missing file: " + path.string());
    std::uint64_t h = 1469598103934665603ULL; // FNV offset basis
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL; // FNV prime
        }
        if (got < static_cast<std::streamsize>(sizeof buf)) break;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::filesystem::path cache_file_for(const std::filesystem::path& cache_dir,
                                     const std::filesystem::path& mesh_path) {
    // stem + short hash of the full path, so equal stems in different
    // directories cannot collide
    std::uint64_t ph = 1469598103934665603ULL;
    for (char c : mesh_path.string()) {
        ph ^= static_cast<unsigned char>(c);
        ph *= 1099511628211ULL;
    }
    return cache_dir / (mesh_path.stem().string() + "_" + hash_hex(ph).substr(8) + ".l2mt");
}

void write_cache_entry(const CacheEntry& entry, const std::filesystem::path& file) {
    TensorFile tf;
    tf.add_u32("content_hash", {static_cast<std::uint32_t>(entry.hash & 0xffffffffULL),
                                static_cast<std::uint32_t>(entry.hash >> 32)});
    tf.add_matrix("eigenvalues", entry.basis.eigenvalues);
    tf.add_matrix("eigenvectors", entry.basis.vectors);
    tf.add_matrix("features", entry.features.data);
    if (!entry.vertex_labels.empty()) {
        std::vector<std::uint32_t> vl(entry.vertex_labels.begin(), entry.vertex_labels.end());
        tf.add_u32("vertex_labels", vl);
    }
    if (!entry.face_labels.empty()) {
        std::vector<std::uint32_t> fl(entry.face_labels.begin(), entry.face_labels.end());
        tf.add_u32("face_labels", fl);
    }
    write_l2mt(tf, file);
}

CacheEntry read_cache_entry(const std::filesystem::path& file) {
    const TensorFile tf = read_l2mt(file);
    CacheEntry e;
    const auto hash_words = tf.require("content_hash").as_u32();
    if (hash_words.size() != 2) throw DataError("cache: malformed content hash in " + file.string());
    e.hash = static_cast<std::uint64_t>(hash_words[0]) |
             (static_cast<std::uint64_t>(hash_words[1]) << 32);
    e.basis.eigenvalues = tf.require("eigenvalues").as_matrix().col(0);
    e.basis.vectors = tf.require("eigenvectors").as_matrix();
    e.basis.provenance = hash_hex(e.hash);
    e.features.data = tf.require("features").as_matrix();
    if (const TensorEntry* vl = tf.find("vertex_labels")) {
        for (std::uint32_t v : vl->as_u32()) e.vertex_labels.push_back(static_cast<int>(v));
    }
    if (const TensorEntry* fl = tf.find("face_labels")) {
        for (std::uint32_t v : fl->as_u32()) e.face_labels.push_back(static_cast<int>(v));
    }
    return e;
}

bool cache_entry_valid(const std::filesystem::path& cache_dir, const ManifestEntry& entry,
                       Eigen::Index k0) {
    const std::filesystem::path file = cache_file_for(cache_dir, entry.mesh_path);
    if (!std::filesystem::exists(file)) return false;
    try {
        const CacheEntry e = read_cache_entry(file);
        if (e.hash != content_hash(entry.mesh_path)) return false;
        const Eigen::Index expected_k = std::min<Eigen::Index>(k0, e.basis.n());
        return e.basis.k() == expected_k;
    } catch (const std::exception&) {
        return false;
    }
}

CacheEntry compute_entry(const Mesh& raw_mesh, Eigen::Index k0, const std::string& provenance,
                         const std::vector<int>* face_labels) {
    CacheEntry e;
    const Mesh mesh = normalize_to_unit_cube(raw_mesh);
    const MeshTopology topo = build_topology(mesh);
    const SparseSymMatrix lap = cotangent_laplacian(mesh, topo);
    const Eigen::Index k = std::min<Eigen::Index>(k0, mesh.vertex_count());
    EigOptions opts;
    opts.provenance = provenance;
    e.basis = smallest_eigenpairs(lap, k, opts);
    e.features = assemble_features(mesh, topo, e.basis);
    if (face_labels) {
        if (static_cast<Eigen::Index>(face_labels->size()) != mesh.face_count())
            throw DataError("face label count " + std::to_string(face_labels->size()) +
                            " does not match face count " + std::to_string(mesh.face_count()));
        e.face_labels = *face_labels;
        e.vertex_labels = vertex_labels_from_face_labels(topo, *face_labels);
    }
    return e;
}

int thread_count_from_env() {
    const char* env = std::getenv("L2M_THREADS");
    if (!env) return 1;
    const int v = std::atoi(env);
    return v >= 1 ? v : 1;
}

PreprocessStats preprocess(const DatasetManifest& manifest, Eigen::Index k0,
                           const std::filesystem::path& cache_dir, int threads) {
    std::filesystem::create_directories(cache_dir);
    manifest.save(cache_dir / "manifest.json");

    PreprocessStats stats;
    std::mutex mu;
    std::atomic<size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= manifest.entries.size()) return;
            const ManifestEntry& entry = manifest.entries[i];
            try {
                if (cache_entry_valid(cache_dir, entry, k0)) {
                    std::lock_guard lock(mu);
                    ++stats.reused;
                    continue;
                }
                Mesh mesh = load_mesh(entry.mesh_path);
                if (k0 < (mesh.vertex_count() + 1) / 2) {
                    std::lock_guard lock(mu);
                    std::cerr << "warning: k0=" << k0 << " below half the vertex count ("
                              << mesh.vertex_count() << ") for " << entry.mesh_path.string()
                              << "; reconstruction quality may suffer\n";
                }
                std::vector<int> face_labels;
                const std::vector<int>* fl = nullptr;
                if (manifest.task == nn::Task::Segmentation) {
                    face_labels = read_face_labels(entry.label_path);
                    fl = &face_labels;
                }
                CacheEntry e =
                    compute_entry(mesh, k0, hash_hex(content_hash(entry.mesh_path)), fl);
                e.source = entry.mesh_path;
                e.hash = content_hash(entry.mesh_path);
                write_cache_entry(e, cache_file_for(cache_dir, entry.mesh_path));
                std::lock_guard lock(mu);
                ++stats.computed;
            } catch (const std::exception& ex) {
                std::lock_guard lock(mu);
                ++stats.failed;
                std::cerr << "preprocess failed for " << entry.mesh_path.string() << ": "
                          << ex.what() << '\n';
            }
        }
    };

    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return stats;
}

} // namespace l2m
