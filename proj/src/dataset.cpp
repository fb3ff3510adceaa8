#include "l2m/pipeline/dataset.hpp"
#include "l2m/errors.hpp"

#include "json.hpp"

#include <fstream>
#include <iostream>
#include <map>

namespace l2m {

using nlohmann::json;

std::vector<int> DatasetManifest::split_indices(Split s) const {
    std::vector<int> idx;
    for (size_t i = 0; i < entries.size(); ++i)
        if (entries[i].split == s) idx.push_back(static_cast<int>(i));
    return idx;
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("manifest parse error in " + path.string() + ": " + e.what());
    }

    DatasetManifest m;
    const std::string task = j.value("task", "classification");
    if (task == "classification") m.task = nn::Task::Classification;
    else if (task == "segmentation") m.task = nn::Task::Segmentation;
    else throw DataError("manifest: unknown task '" + task + "'");
    if (!j.contains("classes") || !j["classes"].is_array() || j["classes"].empty())
        throw DataError("manifest: missing class table");
    for (const auto& c : j["classes"]) m.class_names.push_back(c.get<std::string>());

    // resolve to absolute so saved copies (e.g. the one inside a cache
    // directory) keep pointing at the source files
    const std::filesystem::path base = std::filesystem::absolute(path).parent_path();
    for (const auto& e : j.value("entries", json::array())) {
        ManifestEntry entry;
        entry.mesh_path = (base / e.at("mesh").get<std::string>()).lexically_normal();
        const std::string split = e.at("split").get<std::string>();
        if (split == "train") entry.split = Split::Train;
        else if (split == "test") entry.split = Split::Test;
        else throw DataError("manifest: unknown split '" + split + "'");
        if (!std::filesystem::exists(entry.mesh_path))
            throw DataError("manifest: mesh file missing: " + entry.mesh_path.string());
        if (m.task == nn::Task::Classification) {
            entry.label = e.at("label").get<int>();
            if (entry.label < 0 || entry.label >= m.classes())
                throw DataError("manifest: label " + std::to_string(entry.label) +
                                " outside class table of size " + std::to_string(m.classes()));
        } else {
            entry.label_path = (base / e.at("labels").get<std::string>()).lexically_normal();
            if (!std::filesystem::exists(entry.label_path))
                throw DataError("manifest: label file missing: " + entry.label_path.string());
            for (int fl : read_face_labels(entry.label_path))
                if (fl < 0 || fl >= m.classes())
                    throw DataError("manifest: face label " + std::to_string(fl) + " in " +
                                    entry.label_path.string() + " outside class table");
        }
        m.entries.push_back(std::move(entry));
    }
    return m;
}

void DatasetManifest::save(const std::filesystem::path& path) const {
    json j;
    j["task"] = task == nn::Task::Classification ? "classification" : "segmentation";
    j["classes"] = class_names;
    j["entries"] = json::array();
    for (const auto& e : entries) {
        json je;
        je["mesh"] = e.mesh_path.string();
        je["split"] = e.split == Split::Train ? "train" : "test";
        if (task == nn::Task::Classification) je["label"] = e.label;
        else je["labels"] = e.label_path.string();
        j["entries"].push_back(std::move(je));
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest: " + path.string());
    out << j.dump(2) << '\n';
}

std::vector<int> read_face_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open face label file: " + path.string());
    std::vector<int> labels;
    int v;
    while (in >> v) labels.push_back(v);
    if (labels.empty()) throw DataError("face label file is empty: " + path.string());
    return labels;
}

std::vector<int> vertex_labels_from_face_labels(const MeshTopology& topo,
                                                const std::vector<int>& face_labels) {
    const size_t n = topo.vertex_faces.size();
    std::vector<int> out(n, 0);
    int orphans = 0;
    for (size_t v = 0; v < n; ++v) {
        const auto& inc = topo.vertex_faces[v];
        if (inc.empty()) {
            ++orphans;
            continue;
        }
        std::map<int, int> votes;
        for (int f : inc) votes[face_labels.at(static_cast<size_t>(f))]++;
        int best = -1, best_count = 0;
        for (const auto& [label, count] : votes)
            if (count > best_count) { // map order makes ties resolve to the smallest label
                best = label;
                best_count = count;
            }
        out[v] = best;
    }
    if (orphans > 0)
        std::cerr << "warning: " << orphans << " vertex(es) without incident faces labeled 0\n";
    return out;
}

double face_accuracy(const Eigen::MatrixXd& probabilities, const std::vector<int>& face_labels,
                     const Mesh& mesh) {
    const Eigen::Index nf = mesh.face_count();
    if (static_cast<Eigen::Index>(face_labels.size()) != nf)
        throw DataError("face_accuracy: label count does not match face count");
    Eigen::Index correct = 0;
    for (Eigen::Index f = 0; f < nf; ++f) {
        Eigen::RowVectorXd score = probabilities.row(mesh.faces(f, 0)) +
                                   probabilities.row(mesh.faces(f, 1)) +
                                   probabilities.row(mesh.faces(f, 2));
        Eigen::Index pred = 0;
        for (Eigen::Index c = 1; c < score.size(); ++c)
            if (score[c] > score[pred]) pred = c; // strict: ties keep the smaller index
        if (pred == face_labels[static_cast<size_t>(f)]) ++correct;
    }
    return nf == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(nf);
}

double mean_edge_length(const Mesh& mesh, const MeshTopology& topo) {
    if (topo.edges.empty()) return 0.0;
    double acc = 0.0;
    for (const Edge& e : topo.edges)
        acc += (mesh.vertices.row(e.v0) - mesh.vertices.row(e.v1)).norm();
    return acc / static_cast<double>(topo.edges.size());
}

} // namespace l2m
