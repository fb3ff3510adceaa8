#include "l2m/pipeline/export.hpp"
#include "l2m/errors.hpp"

#include <fstream>

namespace l2m {

std::array<std::array<std::uint8_t, 3>, 16> label_palette() {
    return {{{230, 25, 75},   {60, 180, 75},   {255, 225, 25}, {0, 130, 200},
             {245, 130, 48},  {145, 30, 180},  {70, 240, 240}, {240, 50, 230},
             {210, 245, 60},  {250, 190, 212}, {0, 128, 128},  {220, 190, 255},
             {170, 110, 40},  {255, 250, 200}, {128, 0, 0},    {170, 255, 195}}};
}

void export_colored_mesh(const Mesh& mesh, const std::vector<int>& face_labels,
                         const std::filesystem::path& path) {
    if (static_cast<Eigen::Index>(face_labels.size()) != mesh.face_count())
        throw DataError("export: label count does not match face count");
    const auto palette = label_palette();
    for (int l : face_labels)
        if (l < 0 || l >= static_cast<int>(palette.size()))
            throw DataError("export: label " + std::to_string(l) + " exceeds the " +
                            std::to_string(palette.size()) + "-color palette");

    std::ofstream out(path);
    if (!out) throw DataError("cannot write PLY: " + path.string());
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << mesh.vertex_count() << '\n';
    out << "property float x\nproperty float y\nproperty float z\n";
    out << "element face " << mesh.face_count() << '\n';
    out << "property list uchar int vertex_indices\n";
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "end_header\n";
    for (Eigen::Index i = 0; i < mesh.vertex_count(); ++i)
        out << static_cast<float>(mesh.vertices(i, 0)) << ' '
            << static_cast<float>(mesh.vertices(i, 1)) << ' '
            << static_cast<float>(mesh.vertices(i, 2)) << '\n';
    for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
        const auto& rgb = palette[static_cast<size_t>(face_labels[static_cast<size_t>(f)])];
        out << "3 " << mesh.faces(f, 0) << ' ' << mesh.faces(f, 1) << ' ' << mesh.faces(f, 2)
            << ' ' << int(rgb[0]) << ' ' << int(rgb[1]) << ' ' << int(rgb[2]) << '\n';
    }
    if (!out) throw DataError("write failed: " + path.string());
}

std::vector<int> face_labels_from_probabilities(const Eigen::MatrixXd& probabilities,
                                                const Mesh& mesh) {
    std::vector<int> labels(static_cast<size_t>(mesh.face_count()));
    for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
        Eigen::RowVectorXd score = probabilities.row(mesh.faces(f, 0)) +
                                   probabilities.row(mesh.faces(f, 1)) +
                                   probabilities.row(mesh.faces(f, 2));
        Eigen::Index pred = 0;
        for (Eigen::Index c = 1; c < score.size(); ++c)
            if (score[c] > score[pred]) pred = c;
        labels[static_cast<size_t>(f)] = static_cast<int>(pred);
    }
    return labels;
}

} // namespace l2m
