#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace l2m {

// "L2MT" binary tensor container, used for feature caches, eigenbasis files
// and checkpoints. Layout: magic "L2MT", version u8, entry count u32, then
// per entry: name length u16 + UTF-8 bytes, dtype u8 (0=f32, 1=f64, 2=u32),
// rank u8, one u32 per dim, raw little-endian payload. Rank-2 payloads are
// row-major.
enum class DType : std::uint8_t { F32 = 0, F64 = 1, U32 = 2 };

struct TensorEntry {
    std::string name;
    DType dtype = DType::F64;
    std::vector<std::uint32_t> dims;
    std::vector<std::uint8_t> raw;

    std::uint64_t element_count() const;
    Eigen::MatrixXd as_matrix() const;          // f32/f64, rank 1 (n x 1) or 2
    std::vector<std::uint32_t> as_u32() const;  // u32, any rank
};

struct TensorFile {
    std::vector<TensorEntry> entries;

    const TensorEntry* find(const std::string& name) const;
    const TensorEntry& require(const std::string& name) const;

    void add_matrix(const std::string& name, const Eigen::MatrixXd& m, DType dtype = DType::F64);
    void add_u32(const std::string& name, const std::vector<std::uint32_t>& v);
};

TensorFile read_l2mt(const std::filesystem::path& path);
void write_l2mt(const TensorFile& file, const std::filesystem::path& path);

} // namespace l2m
