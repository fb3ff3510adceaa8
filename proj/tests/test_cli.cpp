#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "l2m/mesh.hpp"
#include "l2m/pipeline/container.hpp"
#include "testmesh.hpp"

#include "json.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

std::string l2m_bin() {
    const char* bin = std::getenv("L2M_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "L2M_BIN must point at the l2m executable");
    return bin;
}

int run(const std::string& args, const fs::path& log) {
    const std::string cmd = l2m_bin() + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("l2m_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("usage errors exit with code 1") {
    const fs::path dir = fresh_dir("usage");
    CHECK(run("", dir / "log1.txt") == 1);
    CHECK(run("trainx", dir / "log2.txt") == 1);
    CHECK(run("reconstruct --mesh only.obj", dir / "log3.txt") == 1); // missing --out
}

TEST_CASE("data errors exit with code 2") {
    const fs::path dir = fresh_dir("dataerr");
    CHECK(run("reconstruct --mesh " + (dir / "missing.obj").string() + " --out " +
                  (dir / "o.obj").string(),
              dir / "log.txt") == 2);
    std::ofstream(dir / "broken.obj") << "v 0 0\n";
    CHECK(run("reconstruct --mesh " + (dir / "broken.obj").string() + " --out " +
                  (dir / "o.obj").string(),
              dir / "log2.txt") == 2);
}

TEST_CASE("reconstruct with full k reproduces the normalized mesh") {
    const fs::path dir = fresh_dir("rec");
    const l2m::Mesh mesh = testmesh::bumpy_sphere(1, 0.1, 8); // n = 42
    l2m::save_mesh(mesh, dir / "in.obj");
    CHECK(run("reconstruct --mesh " + (dir / "in.obj").string() + " --k 42 --out " +
                  (dir / "out.obj").string(),
              dir / "log.txt") == 0);
    const l2m::Mesh out = l2m::load_mesh(dir / "out.obj");
    const l2m::Mesh expect = l2m::normalize_to_unit_cube(mesh);
    REQUIRE(out.vertex_count() == expect.vertex_count());
    CHECK((out.vertices - expect.vertices).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((out.faces - expect.faces).cwiseAbs().maxCoeff() == 0);

    // low-pass variant keeps the face list but moves vertices
    CHECK(run("reconstruct --mesh " + (dir / "in.obj").string() + " --k 10 --out " +
                  (dir / "low.obj").string(),
              dir / "log2.txt") == 0);
    const l2m::Mesh low = l2m::load_mesh(dir / "low.obj");
    CHECK((low.faces - expect.faces).cwiseAbs().maxCoeff() == 0);
    CHECK((low.vertices - expect.vertices).cwiseAbs().maxCoeff() > 1e-4);
}

TEST_CASE("features command emits the 39-column descriptor") {
    const fs::path dir = fresh_dir("feat");
    l2m::save_mesh(testmesh::bumpy_sphere(1, 0.1, 9), dir / "in.obj");
    CHECK(run("features --mesh " + (dir / "in.obj").string() + " --k0 30 --out " +
                  (dir / "f.l2mt").string(),
              dir / "log.txt") == 0);
    const l2m::TensorFile tf = l2m::read_l2mt(dir / "f.l2mt");
    const Eigen::MatrixXd f = tf.require("features").as_matrix();
    CHECK(f.rows() == 42);
    CHECK(f.cols() == 39);
    CHECK(tf.require("eigenvectors").as_matrix().cols() == 30);
}

TEST_CASE("preprocess, train, eval and segment round trip") {
    const fs::path dir = fresh_dir("seg");
    fs::create_directories(dir / "meshes");
    fs::create_directories(dir / "labels");

    nlohmann::json entries = nlohmann::json::array();
    for (int i = 0; i < 5; ++i) {
        std::vector<int> face_labels;
        l2m::Mesh m = testmesh::capsule(8, 3, &face_labels);
        m = testmesh::jitter(m, 0.01, 300 + static_cast<std::uint64_t>(i));
        const std::string mesh_name = "cap" + std::to_string(i) + ".obj";
        const std::string label_name = "cap" + std::to_string(i) + ".seg";
        l2m::save_mesh(m, dir / "meshes" / mesh_name);
        std::ofstream lab(dir / "labels" / label_name);
        for (int fl : face_labels) lab << fl << "\n";
        entries.push_back({{"mesh", "meshes/" + mesh_name},
                           {"split", i < 4 ? "train" : "test"},
                           {"labels", "labels/" + label_name}});
    }
    nlohmann::json manifest;
    manifest["task"] = "segmentation";
    manifest["classes"] = {"bottom", "side", "top"};
    manifest["entries"] = entries;
    std::ofstream(dir / "manifest.json") << manifest.dump(2);

    nlohmann::json cfg;
    cfg["k_pyramid"] = {24, 12, 4};
    cfg["widths"] = {12, 16, 20};
    cfg["epochs"] = 30;
    cfg["lr"] = 5e-3;
    cfg["seed"] = 5;
    cfg["loss"] = {{"omega", 1.0}};
    std::ofstream(dir / "config.json") << cfg.dump(2);

    CHECK(run("preprocess --manifest " + (dir / "manifest.json").string() + " --k0 24 --cache " +
                  (dir / "cache").string(),
              dir / "pre.txt") == 0);
    CHECK(slurp(dir / "pre.txt").find("5 computed") != std::string::npos);

    CHECK(run("train --config " + (dir / "config.json").string() + " --cache " +
                  (dir / "cache").string() + " --out " + (dir / "run").string(),
              dir / "train.txt") == 0);
    REQUIRE(fs::exists(dir / "run" / "checkpoint.l2mt"));
    REQUIRE(fs::exists(dir / "run" / "metrics.jsonl"));

    CHECK(run("eval --checkpoint " + (dir / "run" / "checkpoint.l2mt").string() + " --cache " +
                  (dir / "cache").string() + " --split test",
              dir / "eval.txt") == 0);
    const nlohmann::json report = nlohmann::json::parse(slurp(dir / "eval.txt"));
    CHECK(report.at("metric").get<double>() >= 0.0);
    CHECK(report.at("metric").get<double>() <= 1.0);
    CHECK(report.at("per_mesh").size() == 1);

    CHECK(run("segment --checkpoint " + (dir / "run" / "checkpoint.l2mt").string() + " --mesh " +
                  (dir / "meshes" / "cap4.obj").string() + " --out " + (dir / "out.ply").string(),
              dir / "seg.txt") == 0);
    const std::string ply = slurp(dir / "out.ply");
    CHECK(ply.rfind("ply\n", 0) == 0);
    CHECK(ply.find("element face 64") != std::string::npos); // 2*8*3 + 2*8
}

TEST_CASE("preprocess honors L2M_THREADS") {
    const fs::path dir = fresh_dir("threads");
    fs::create_directories(dir / "meshes");
    nlohmann::json entries = nlohmann::json::array();
    for (int i = 0; i < 4; ++i) {
        const std::string name = "s" + std::to_string(i) + ".obj";
        l2m::save_mesh(testmesh::bumpy_sphere(1, 0.05, 600 + static_cast<std::uint64_t>(i)),
                       dir / "meshes" / name);
        entries.push_back({{"mesh", "meshes/" + name}, {"split", "train"}, {"label", 0}});
    }
    nlohmann::json manifest;
    manifest["task"] = "classification";
    manifest["classes"] = {"a", "b"};
    manifest["entries"] = entries;
    std::ofstream(dir / "manifest.json") << manifest.dump(2);

    const std::string cmd = "L2M_THREADS=2 " + l2m_bin() + " preprocess --manifest " +
                            (dir / "manifest.json").string() + " --k0 24 --cache " +
                            (dir / "cache").string() + " > " + (dir / "log.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(status) == 0);
    CHECK(slurp(dir / "log.txt").find("4 computed") != std::string::npos);
}
