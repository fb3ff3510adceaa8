#include "l2m/pipeline/augment.hpp"

#include <algorithm>

namespace l2m {

Eigen::Vector3d sample_scale_factors(std::mt19937_64& rng, double stddev) {
    std::normal_distribution<double> g(1.0, stddev);
    Eigen::Vector3d s;
    for (int a = 0; a < 3; ++a) s[a] = std::clamp(g(rng), 0.5, 1.5);
    return s;
}

Mesh augment_scale(const Mesh& mesh, std::mt19937_64& rng, double stddev) {
    const Eigen::Vector3d s = stddev == 0.0 ? Eigen::Vector3d::Ones() : sample_scale_factors(rng, stddev);
    Mesh out = mesh;
    out.vertices.array().rowwise() *= s.transpose().array();
    return normalize_to_unit_cube(out);
}

namespace {
// cos/sin of k * pi/2 as exact integers
constexpr int kCos[4] = {1, 0, -1, 0};
constexpr int kSin[4] = {0, 1, 0, -1};
} // namespace

Eigen::Matrix3d quarter_rotation(int z_quarter, int y_quarter, int x_quarter) {
    auto rz = [](int q) {
        Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
        r(0, 0) = kCos[q]; r(0, 1) = -kSin[q];
        r(1, 0) = kSin[q]; r(1, 1) = kCos[q];
        return r;
    };
    auto ry = [](int q) {
        Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
        r(0, 0) = kCos[q]; r(0, 2) = kSin[q];
        r(2, 0) = -kSin[q]; r(2, 2) = kCos[q];
        return r;
    };
    auto rx = [](int q) {
        Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
        r(1, 1) = kCos[q]; r(1, 2) = -kSin[q];
        r(2, 1) = kSin[q]; r(2, 2) = kCos[q];
        return r;
    };
    return rx(x_quarter & 3) * ry(y_quarter & 3) * rz(z_quarter & 3); // z applied first
}

Eigen::Matrix3d sample_quarter_rotation(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> quarter(0, 3);
    const int z = quarter(rng), y = quarter(rng), x = quarter(rng);
    return quarter_rotation(z, y, x);
}

Mesh augment_rotate(const Mesh& mesh, std::mt19937_64& rng) {
    const Eigen::Matrix3d r = sample_quarter_rotation(rng);
    Mesh out = mesh;
    out.vertices = mesh.vertices * r.transpose();
    return out;
}

} // namespace l2m
