// l2m: spectral mesh understanding CLI. Subcommands cover preprocessing a
// dataset into feature caches, training and evaluating classification or
// segmentation models, spectral reconstruction, feature export, and colored
// segmentation output.

#include "l2m/descriptors.hpp"
#include "l2m/errors.hpp"
#include "l2m/pipeline/cache.hpp"
#include "l2m/pipeline/container.hpp"
#include "l2m/pipeline/export.hpp"
#include "l2m/pipeline/train.hpp"
#include "l2m/spectral.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <iostream>

namespace {

int run_preprocess(const std::string& manifest_path, long k0, const std::string& cache_dir) {
    const l2m::DatasetManifest manifest = l2m::DatasetManifest::load(manifest_path);
    const int threads = l2m::thread_count_from_env();
    const l2m::PreprocessStats stats = l2m::preprocess(manifest, k0, cache_dir, threads);
    std::cout << "preprocess: " << stats.computed << " computed, " << stats.reused
              << " reused, " << stats.failed << " failed\n";
    return stats.failed == 0 ? 0 : 2;
}

int run_train(const std::string& config_path, const std::string& cache_dir,
              const std::string& out_dir) {
    const l2m::DatasetManifest manifest =
        l2m::DatasetManifest::load(std::filesystem::path(cache_dir) / "manifest.json");
    const l2m::TrainConfig config =
        config_path.empty() ? l2m::TrainConfig::defaults_for(manifest)
                            : l2m::TrainConfig::from_json_file(config_path, manifest);
    const l2m::TrainResult result = l2m::train(config, cache_dir, out_dir);
    std::cout << "best test metric " << result.best_metric << " at epoch " << result.best_epoch
              << "; checkpoint " << result.checkpoint_file.string() << '\n';
    return 0;
}

int run_eval(const std::string& checkpoint, const std::string& cache_dir,
             const std::string& split_name) {
    const l2m::Split split = split_name == "train" ? l2m::Split::Train : l2m::Split::Test;
    const l2m::EvalResult r = l2m::evaluate(checkpoint, cache_dir, split);
    nlohmann::json j;
    j["split"] = split_name;
    j["metric"] = r.metric;
    j["per_mesh"] = nlohmann::json::array();
    for (const auto& [mesh, value] : r.per_mesh)
        j["per_mesh"].push_back({{"mesh", mesh}, {"value", value}});
    std::cout << j.dump(2) << '\n';
    return 0;
}

int run_reconstruct(const std::string& mesh_path, long k, const std::string& out_path) {
    const l2m::Mesh mesh = l2m::normalize_to_unit_cube(l2m::load_mesh(mesh_path));
    const l2m::MeshTopology topo = l2m::build_topology(mesh);
    const l2m::SparseSymMatrix lap = l2m::cotangent_laplacian(mesh, topo);
    const Eigen::Index k_eff =
        std::min<Eigen::Index>(k > 0 ? k : l2m::default_k0(mesh.vertex_count()), mesh.vertex_count());
    l2m::EigOptions opts;
    opts.provenance = mesh_path;
    const l2m::EigenBasis basis = l2m::smallest_eigenpairs(lap, k_eff, opts);
    l2m::Mesh out = mesh;
    out.vertices = l2m::reconstruct(basis, l2m::project(basis, mesh.vertices));
    l2m::save_mesh(out, out_path);
    std::cout << "reconstructed with k=" << k_eff << " of n=" << mesh.vertex_count() << " -> "
              << out_path << '\n';
    return 0;
}

int run_features(const std::string& mesh_path, long k0, const std::string& out_path) {
    const l2m::Mesh raw = l2m::load_mesh(mesh_path);
    const Eigen::Index k =
        std::min<Eigen::Index>(k0 > 0 ? k0 : l2m::default_k0(raw.vertex_count()), raw.vertex_count());
    const l2m::CacheEntry entry =
        l2m::compute_entry(raw, k, l2m::hash_hex(l2m::content_hash(mesh_path)), nullptr);
    l2m::TensorFile tf;
    tf.add_matrix("features", entry.features.data);
    tf.add_matrix("eigenvalues", entry.basis.eigenvalues);
    tf.add_matrix("eigenvectors", entry.basis.vectors);
    l2m::write_l2mt(tf, out_path);
    std::cout << "features " << entry.features.data.rows() << "x" << entry.features.data.cols()
              << " -> " << out_path << '\n';
    return 0;
}

int run_segment(const std::string& checkpoint, const std::string& mesh_path,
                const std::string& out_path) {
    l2m::Mesh mesh;
    const Eigen::MatrixXd probabilities =
        l2m::segment_mesh_file(checkpoint, mesh_path, &mesh);
    const std::vector<int> labels = l2m::face_labels_from_probabilities(probabilities, mesh);
    l2m::export_colored_mesh(mesh, labels, out_path);
    std::cout << "segmented " << mesh.face_count() << " faces -> " << out_path << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Laplacian-space mesh understanding toolkit"};
    app.require_subcommand(1);

    std::string manifest_path, cache_dir, out_dir, config_path, checkpoint, mesh_path, out_path;
    std::string split_name = "test";
    long k0 = 512, k = 0;

    auto* pre = app.add_subcommand("preprocess", "build feature caches for a dataset");
    pre->add_option("--manifest", manifest_path, "dataset manifest JSON")->required();
    pre->add_option("--k0", k0, "spectral resolution (clamped to n per mesh)");
    pre->add_option("--cache", cache_dir, "cache directory")->required();

    auto* tr = app.add_subcommand("train", "train a model on a preprocessed cache");
    tr->add_option("--config", config_path, "training config JSON (defaults when omitted)");
    tr->add_option("--cache", cache_dir, "cache directory")->required();
    tr->add_option("--out", out_dir, "run output directory")->required();

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    ev->add_option("--checkpoint", checkpoint, "checkpoint .l2mt")->required();
    ev->add_option("--cache", cache_dir, "cache directory")->required();
    ev->add_option("--split", split_name, "train or test")
        ->check(CLI::IsMember({"train", "test"}));

    auto* rec = app.add_subcommand("reconstruct", "spectral low-pass reconstruction of a mesh");
    rec->add_option("--mesh", mesh_path, "input .obj/.off")->required();
    rec->add_option("--k", k, "number of eigenvectors (default min(512, n))");
    rec->add_option("--out", out_path, "output mesh path")->required();

    auto* fe = app.add_subcommand("features", "compute the 39-column vertex descriptor");
    fe->add_option("--mesh", mesh_path, "input .obj/.off")->required();
    fe->add_option("--k0", k0, "spectral resolution");
    fe->add_option("--out", out_path, "output .l2mt")->required();

    auto* seg = app.add_subcommand("segment", "segment a mesh and write a colored PLY");
    seg->add_option("--checkpoint", checkpoint, "segmentation checkpoint")->required();
    seg->add_option("--mesh", mesh_path, "input .obj/.off")->required();
    seg->add_option("--out", out_path, "output .ply")->required();

    try {
        app.parse(argc, argv);
        if (pre->parsed()) return run_preprocess(manifest_path, k0, cache_dir);
        if (tr->parsed()) return run_train(config_path, cache_dir, out_dir);
        if (ev->parsed()) return run_eval(checkpoint, cache_dir, split_name);
        if (rec->parsed()) return run_reconstruct(mesh_path, k, out_path);
        if (fe->parsed()) return run_features(mesh_path, k0, out_path);
        if (seg->parsed()) return run_segment(checkpoint, mesh_path, out_path);
        return 1;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e); // prints the usage message
        return 1;
    } catch (const l2m::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const l2m::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
