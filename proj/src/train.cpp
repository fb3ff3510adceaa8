#include "l2m/pipeline/train.hpp"
#include "l2m/errors.hpp"
#include "l2m/nn/adam.hpp"
#include "l2m/pipeline/augment.hpp"
#include "l2m/pipeline/container.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

namespace l2m {

using nlohmann::json;
using nn::Tensor;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::array<Eigen::Index, 3> default_pyramid(nn::Task task) {
    return task == nn::Task::Segmentation ? std::array<Eigen::Index, 3>{512, 128, 32}
                                          : std::array<Eigen::Index, 3>{256, 64, 16};
}

} // namespace

TrainConfig TrainConfig::defaults_for(const DatasetManifest& manifest) {
    TrainConfig c;
    c.model.task = manifest.task;
    c.model.classes = manifest.classes();
    c.model.k_pyramid = default_pyramid(manifest.task);
    return c;
}

TrainConfig TrainConfig::from_json_file(const std::filesystem::path& path,
                                        const DatasetManifest& manifest) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open train config: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("train config parse error: " + std::string(e.what()));
    }
    TrainConfig c = defaults_for(manifest);
    if (j.contains("k_pyramid")) {
        const auto& kp = j["k_pyramid"];
        if (!kp.is_array() || kp.size() != 3) throw DataError("config: k_pyramid needs 3 values");
        for (int i = 0; i < 3; ++i) c.model.k_pyramid[static_cast<size_t>(i)] = kp[static_cast<size_t>(i)].get<Eigen::Index>();
    }
    if (j.contains("widths")) {
        const auto& w = j["widths"];
        if (!w.is_array() || w.size() != 3) throw DataError("config: widths needs 3 values");
        for (int i = 0; i < 3; ++i) c.model.widths[static_cast<size_t>(i)] = w[static_cast<size_t>(i)].get<int>();
    }
    c.model.se_reduction = j.value("se_reduction", c.model.se_reduction);
    c.model.blocks_per_stage = j.value("blocks_per_stage", c.model.blocks_per_stage);
    c.epochs = j.value("epochs", c.epochs);
    c.lr = j.value("lr", c.lr);
    c.cosine_decay = j.value("cosine_decay", c.cosine_decay);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    c.model.seed = c.seed;
    if (j.contains("augment")) {
        c.aug_scale = j["augment"].value("scale", false);
        c.aug_rotate = j["augment"].value("rotate", false);
    }
    if (j.contains("loss")) {
        c.loss.sigma = j["loss"].value("sigma", 0.0);
        c.loss.omega = j["loss"].value("omega", 1.0);
        c.loss.gaussian_squared = j["loss"].value("gaussian_squared", false);
    }
    if (c.epochs < 1) throw DataError("config: epochs must be >= 1");
    c.model.check();
    return c;
}

MeshBundle load_bundle(const DatasetManifest& manifest, const ManifestEntry& entry,
                       const std::filesystem::path& cache_dir) {
    MeshBundle b;
    b.entry = entry;
    const std::filesystem::path file = cache_file_for(cache_dir, entry.mesh_path);
    if (!std::filesystem::exists(file))
        throw DataError("cache entry missing for " + entry.mesh_path.string() +
                        " (run preprocess first)");
    b.cache = read_cache_entry(file);
    const std::uint64_t current = content_hash(entry.mesh_path);
    if (b.cache.hash != current)
        throw DataError("cache entry stale for " + entry.mesh_path.string() +
                        " (run preprocess again)");
    b.mesh = normalize_to_unit_cube(load_mesh(entry.mesh_path));
    const MeshTopology topo = build_topology(b.mesh);
    if (manifest.task == nn::Task::Segmentation) b.adjacency = vertex_adjacency(topo);
    b.mean_edge = mean_edge_length(b.mesh, topo);
    return b;
}

std::array<Eigen::MatrixXd, 3> spectral_inputs(const EigenBasis& basis,
                                               const Eigen::MatrixXd& features,
                                               const std::array<Eigen::Index, 3>& k_pyramid) {
    const Eigen::Index k_act = basis.k();
    const Eigen::Index k0 = k_pyramid[0];
    Eigen::MatrixXd s0 = Eigen::MatrixXd::Zero(k0, features.cols());
    s0.topRows(std::min(k_act, k0)) =
        (basis.vectors.transpose() * features).topRows(std::min(k_act, k0));
    return {s0, s0.topRows(k_pyramid[1]), s0.topRows(k_pyramid[2])};
}

Eigen::MatrixXd extended_basis(const EigenBasis& basis, Eigen::Index k0) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(basis.n(), k0);
    e.leftCols(std::min(basis.k(), k0)) = basis.vectors.leftCols(std::min(basis.k(), k0));
    return e;
}

namespace {

std::array<Tensor<float>, 3> input_tensors(const std::array<Eigen::MatrixXd, 3>& feats) {
    return {Tensor<float>::constant_from(feats[0]), Tensor<float>::constant_from(feats[1]),
            Tensor<float>::constant_from(feats[2])};
}

double cosine_lr(const TrainConfig& cfg, int epoch) {
    if (!cfg.cosine_decay || cfg.epochs <= 1) return cfg.lr;
    return cfg.lr * 0.5 * (1.0 + std::cos(kPi * epoch / (cfg.epochs - 1)));
}

std::mt19937_64 step_rng(std::uint64_t seed, int epoch, int index) {
    const std::uint64_t mix = seed ^ (static_cast<std::uint64_t>(epoch) * 0x9e3779b97f4a7c15ULL) ^
                              (static_cast<std::uint64_t>(index) * 0xbf58476d1ce4e5b9ULL);
    return std::mt19937_64(mix);
}

// Augmented view of a bundle: transforms the mesh and recomputes basis and
// features from scratch (scaling changes the Laplacian, so nothing cached
// survives). Connectivity is untouched, so labels carry over.
MeshBundle augmented_view(const MeshBundle& base, const TrainConfig& cfg, std::mt19937_64& rng) {
    Mesh mesh = base.mesh;
    if (cfg.aug_scale) mesh = augment_scale(mesh, rng);
    if (cfg.aug_rotate) mesh = augment_rotate(mesh, rng);
    MeshBundle out;
    out.entry = base.entry;
    out.mesh = normalize_to_unit_cube(mesh);
    const std::vector<int>* fl =
        base.cache.face_labels.empty() ? nullptr : &base.cache.face_labels;
    out.cache = compute_entry(mesh, base.cache.basis.k(), base.cache.basis.provenance + "+aug", fl);
    const MeshTopology topo = build_topology(out.mesh);
    if (!base.adjacency.neighbors.empty()) out.adjacency = vertex_adjacency(topo);
    out.mean_edge = mean_edge_length(out.mesh, topo);
    return out;
}

LossConfig loss_for_mesh(const TrainConfig& cfg, const MeshBundle& b) {
    LossConfig lc = cfg.loss;
    if (lc.sigma <= 0.0) lc.sigma = std::max(b.mean_edge, 1e-12);
    return lc;
}

template <typename Model>
void check_finite(const Tensor<float>& loss, const MeshBundle& b) {
    if (!std::isfinite(loss.value()(0, 0)))
        throw NumericalError("non-finite loss at mesh " + b.entry.mesh_path.string());
}

json log_to_json(const EpochLog& log) {
    return json{{"epoch", log.epoch},
                {"train_loss", log.train_loss},
                {"test_metric", log.test_metric},
                {"lr", log.lr}};
}

void write_checkpoint_file(const std::vector<std::pair<std::string, Tensor<float>>>& named,
                           const TrainConfig& config, const std::filesystem::path& file) {
    TensorFile tf;
    for (const auto& [name, t] : named)
        tf.add_matrix(name, t.value().cast<double>(), DType::F32);
    write_l2mt(tf, file);

    json j;
    j["task"] = config.model.task == nn::Task::Classification ? "classification" : "segmentation";
    j["k_pyramid"] = {config.model.k_pyramid[0], config.model.k_pyramid[1], config.model.k_pyramid[2]};
    j["widths"] = {config.model.widths[0], config.model.widths[1], config.model.widths[2]};
    j["classes"] = config.model.classes;
    j["se_reduction"] = config.model.se_reduction;
    j["blocks_per_stage"] = config.model.blocks_per_stage;
    j["input_channels"] = config.model.input_channels;
    j["seed"] = config.seed;
    j["loss"] = {{"sigma", config.loss.sigma},
                 {"omega", config.loss.omega},
                 {"gaussian_squared", config.loss.gaussian_squared}};
    std::filesystem::path sidecar = file;
    sidecar.replace_extension(".json");
    std::ofstream out(sidecar);
    out << j.dump(2) << '\n';
}

template <typename Model>
void load_weights(Model& model, const std::filesystem::path& file) {
    const TensorFile tf = read_l2mt(file);
    model.visit([&](const std::string& name, Tensor<float>& t) {
        const Eigen::MatrixXd v = tf.require(name).as_matrix();
        if (v.rows() != t.rows() || v.cols() != t.cols())
            throw DataError("checkpoint: parameter '" + name + "' has shape " +
                            std::to_string(v.rows()) + "x" + std::to_string(v.cols()) +
                            ", expected " + std::to_string(t.rows()) + "x" +
                            std::to_string(t.cols()));
        t.value_mut() = v.cast<float>();
    });
}

} // namespace

void save_checkpoint(nn::ClassifierModel<float>& model, const TrainConfig& config,
                     const std::filesystem::path& file) {
    write_checkpoint_file(nn::named_parameters<float>(model), config, file);
}

void save_checkpoint(nn::SegmenterModel<float>& model, const TrainConfig& config,
                     const std::filesystem::path& file) {
    write_checkpoint_file(nn::named_parameters<float>(model), config, file);
}

TrainConfig read_checkpoint_config(const std::filesystem::path& file) {
    std::filesystem::path sidecar = file;
    sidecar.replace_extension(".json");
    std::ifstream in(sidecar);
    if (!in) throw DataError("cannot open checkpoint sidecar: " + sidecar.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("checkpoint sidecar parse error: " + std::string(e.what()));
    }
    TrainConfig c;
    c.model.task = j.at("task").get<std::string>() == "segmentation" ? nn::Task::Segmentation
                                                                     : nn::Task::Classification;
    for (int i = 0; i < 3; ++i) {
        c.model.k_pyramid[static_cast<size_t>(i)] = j.at("k_pyramid")[static_cast<size_t>(i)].get<Eigen::Index>();
        c.model.widths[static_cast<size_t>(i)] = j.at("widths")[static_cast<size_t>(i)].get<int>();
    }
    c.model.classes = j.at("classes").get<int>();
    c.model.se_reduction = j.value("se_reduction", 4);
    c.model.blocks_per_stage = j.value("blocks_per_stage", 2);
    c.model.input_channels = j.value("input_channels", 39);
    c.seed = j.value("seed", 1ULL);
    c.model.seed = c.seed;
    if (j.contains("loss")) {
        c.loss.sigma = j["loss"].value("sigma", 0.0);
        c.loss.omega = j["loss"].value("omega", 1.0);
        c.loss.gaussian_squared = j["loss"].value("gaussian_squared", false);
    }
    return c;
}

nn::ClassifierModel<float> load_classifier(const std::filesystem::path& file) {
    const TrainConfig c = read_checkpoint_config(file);
    if (c.model.task != nn::Task::Classification)
        throw DataError("checkpoint is not a classification model");
    auto model = nn::ClassifierModel<float>::init(c.model);
    load_weights(model, file);
    return model;
}

nn::SegmenterModel<float> load_segmenter(const std::filesystem::path& file) {
    const TrainConfig c = read_checkpoint_config(file);
    if (c.model.task != nn::Task::Segmentation)
        throw DataError("checkpoint is not a segmentation model");
    auto model = nn::SegmenterModel<float>::init(c.model);
    load_weights(model, file);
    return model;
}

Eigen::RowVectorXd classify_logits(nn::ClassifierModel<float>& model, const MeshBundle& b) {
    const auto feats = spectral_inputs(b.cache.basis, b.cache.features.data, model.cfg.k_pyramid);
    const Tensor<float> logits = model.forward(input_tensors(feats));
    return logits.value().row(0).cast<double>();
}

Eigen::MatrixXd segment_probabilities(nn::SegmenterModel<float>& model, const MeshBundle& b) {
    const auto feats = spectral_inputs(b.cache.basis, b.cache.features.data, model.cfg.k_pyramid);
    const Tensor<float> basis =
        Tensor<float>::constant_from(extended_basis(b.cache.basis, model.cfg.k_pyramid[0]));
    return model.forward(input_tensors(feats), basis).value().cast<double>();
}

namespace {

double test_metric_classification(nn::ClassifierModel<float>& model,
                                  const std::vector<MeshBundle>& bundles,
                                  const std::vector<int>& idx,
                                  std::vector<std::pair<std::string, double>>* per_mesh) {
    if (idx.empty()) return 0.0;
    int correct = 0;
    for (int i : idx) {
        const Eigen::RowVectorXd logits = classify_logits(model, bundles[static_cast<size_t>(i)]);
        Eigen::Index pred = 0;
        for (Eigen::Index c = 1; c < logits.size(); ++c)
            if (logits[c] > logits[pred]) pred = c;
        const bool ok = pred == bundles[static_cast<size_t>(i)].entry.label;
        correct += ok ? 1 : 0;
        if (per_mesh)
            per_mesh->emplace_back(bundles[static_cast<size_t>(i)].entry.mesh_path.string(), ok ? 1.0 : 0.0);
    }
    return static_cast<double>(correct) / static_cast<double>(idx.size());
}

double test_metric_segmentation(nn::SegmenterModel<float>& model,
                                const std::vector<MeshBundle>& bundles,
                                const std::vector<int>& idx,
                                std::vector<std::pair<std::string, double>>* per_mesh) {
    if (idx.empty()) return 0.0;
    double acc = 0.0;
    for (int i : idx) {
        const MeshBundle& b = bundles[static_cast<size_t>(i)];
        const Eigen::MatrixXd p = segment_probabilities(model, b);
        const double a = face_accuracy(p, b.cache.face_labels, b.mesh);
        acc += a;
        if (per_mesh) per_mesh->emplace_back(b.entry.mesh_path.string(), a);
    }
    return acc / static_cast<double>(idx.size());
}

TrainResult train_classification(const TrainConfig& config, const DatasetManifest& manifest,
                                 std::vector<MeshBundle>& bundles,
                                 const std::filesystem::path& out_dir) {
    auto model = nn::ClassifierModel<float>::init(config.model);
    auto params = nn::parameters<float>(model);
    auto adam = nn::AdamState<float>::init(params);

    const std::vector<int> train_idx = manifest.split_indices(Split::Train);
    const std::vector<int> test_idx = manifest.split_indices(Split::Test);
    std::mt19937_64 shuffle_rng(config.seed);

    TrainResult result;
    result.checkpoint_file = out_dir / "checkpoint.l2mt";
    std::ofstream metrics(out_dir / "metrics.jsonl");

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<int> order = train_idx;
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        const float lr = static_cast<float>(cosine_lr(config, epoch));

        double loss_sum = 0.0;
        size_t done = 0;
        while (done < order.size()) {
            const size_t batch_end = std::min(done + static_cast<size_t>(config.batch_size), order.size());
            const float inv_batch = 1.0f / static_cast<float>(batch_end - done);
            for (auto& p : params) p.zero_grad();
            for (size_t bi = done; bi < batch_end; ++bi) {
                const MeshBundle& base = bundles[static_cast<size_t>(order[bi])];
                MeshBundle view;
                const MeshBundle* mb = &base;
                if (config.aug_scale || config.aug_rotate) {
                    auto rng = step_rng(config.seed, epoch, order[bi]);
                    view = augmented_view(base, config, rng);
                    mb = &view;
                }
                const auto feats =
                    spectral_inputs(mb->cache.basis, mb->cache.features.data, config.model.k_pyramid);
                const Tensor<float> logits = model.forward(input_tensors(feats));
                const Tensor<float> probs = nn::softmax_rows(logits);
                const Tensor<float> loss = cross_entropy(probs, {mb->entry.label});
                check_finite<decltype(model)>(loss, *mb);
                loss_sum += loss.value()(0, 0);
                nn::backward(nn::mul_scalar(loss, inv_batch));
            }
            nn::adam_step(params, adam, lr);
            done = batch_end;
        }

        EpochLog log;
        log.epoch = epoch;
        log.train_loss = order.empty() ? 0.0 : loss_sum / static_cast<double>(order.size());
        log.test_metric = test_metric_classification(model, bundles, test_idx, nullptr);
        log.lr = lr;
        result.log.push_back(log);
        metrics << log_to_json(log).dump() << '\n';
        if (log.test_metric > result.best_metric || result.best_epoch < 0) {
            result.best_metric = log.test_metric;
            result.best_epoch = epoch;
            save_checkpoint(model, config, result.checkpoint_file);
        }
    }
    return result;
}

TrainResult train_segmentation(const TrainConfig& config, const DatasetManifest& manifest,
                               std::vector<MeshBundle>& bundles,
                               const std::filesystem::path& out_dir) {
    auto model = nn::SegmenterModel<float>::init(config.model);
    auto params = nn::parameters<float>(model);
    auto adam = nn::AdamState<float>::init(params);

    const std::vector<int> train_idx = manifest.split_indices(Split::Train);
    const std::vector<int> test_idx = manifest.split_indices(Split::Test);
    std::mt19937_64 shuffle_rng(config.seed);

    TrainResult result;
    result.checkpoint_file = out_dir / "checkpoint.l2mt";
    std::ofstream metrics(out_dir / "metrics.jsonl");

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<int> order = train_idx;
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        const float lr = static_cast<float>(cosine_lr(config, epoch));

        double loss_sum = 0.0;
        for (int i : order) {
            const MeshBundle& base = bundles[static_cast<size_t>(i)];
            MeshBundle view;
            const MeshBundle* mb = &base;
            if (config.aug_scale || config.aug_rotate) {
                auto rng = step_rng(config.seed, epoch, i);
                view = augmented_view(base, config, rng);
                mb = &view;
            }
            const auto feats =
                spectral_inputs(mb->cache.basis, mb->cache.features.data, config.model.k_pyramid);
            const Tensor<float> basis =
                Tensor<float>::constant_from(extended_basis(mb->cache.basis, config.model.k_pyramid[0]));
            for (auto& p : params) p.zero_grad();
            const Tensor<float> probs = model.forward(input_tensors(feats), basis);
            const Tensor<float> loss = combined_loss(probs, mb->cache.vertex_labels,
                                                     mb->mesh.vertices, mb->adjacency,
                                                     loss_for_mesh(config, *mb));
            check_finite<decltype(model)>(loss, *mb);
            loss_sum += loss.value()(0, 0);
            nn::backward(loss);
            nn::adam_step(params, adam, lr);
        }

        EpochLog log;
        log.epoch = epoch;
        log.train_loss = order.empty() ? 0.0 : loss_sum / static_cast<double>(order.size());
        log.test_metric = test_metric_segmentation(model, bundles, test_idx, nullptr);
        log.lr = lr;
        result.log.push_back(log);
        metrics << log_to_json(log).dump() << '\n';
        if (log.test_metric > result.best_metric || result.best_epoch < 0) {
            result.best_metric = log.test_metric;
            result.best_epoch = epoch;
            save_checkpoint(model, config, result.checkpoint_file);
        }
    }
    return result;
}

} // namespace

TrainResult train(const TrainConfig& config, const std::filesystem::path& cache_dir,
                  const std::filesystem::path& out_dir) {
    const DatasetManifest manifest = DatasetManifest::load(cache_dir / "manifest.json");
    std::filesystem::create_directories(out_dir);
    std::vector<MeshBundle> bundles;
    bundles.reserve(manifest.entries.size());
    for (const auto& entry : manifest.entries)
        bundles.push_back(load_bundle(manifest, entry, cache_dir));
    return config.model.task == nn::Task::Classification
               ? train_classification(config, manifest, bundles, out_dir)
               : train_segmentation(config, manifest, bundles, out_dir);
}

EvalResult evaluate(const std::filesystem::path& checkpoint_file,
                    const std::filesystem::path& cache_dir, Split split) {
    const DatasetManifest manifest = DatasetManifest::load(cache_dir / "manifest.json");
    const TrainConfig config = read_checkpoint_config(checkpoint_file);
    if ((config.model.task == nn::Task::Classification) !=
        (manifest.task == nn::Task::Classification))
        throw DataError("evaluate: checkpoint task does not match the cached dataset");

    std::vector<MeshBundle> bundles;
    for (const auto& entry : manifest.entries)
        bundles.push_back(load_bundle(manifest, entry, cache_dir));
    const std::vector<int> idx = manifest.split_indices(split);

    EvalResult r;
    if (config.model.task == nn::Task::Classification) {
        auto model = load_classifier(checkpoint_file);
        r.metric = test_metric_classification(model, bundles, idx, &r.per_mesh);
    } else {
        auto model = load_segmenter(checkpoint_file);
        r.metric = test_metric_segmentation(model, bundles, idx, &r.per_mesh);
    }
    return r;
}

Eigen::MatrixXd segment_mesh_file(const std::filesystem::path& checkpoint_file,
                                  const std::filesystem::path& mesh_path, Mesh* out_mesh) {
    auto model = load_segmenter(checkpoint_file);
    const Mesh raw = load_mesh(mesh_path);
    MeshBundle b;
    b.mesh = normalize_to_unit_cube(raw);
    b.cache = compute_entry(raw, model.cfg.k_pyramid[0], "inference", nullptr);
    if (out_mesh) *out_mesh = b.mesh;
    return segment_probabilities(model, b);
}

} // namespace l2m
