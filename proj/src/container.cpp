#include "l2m/pipeline/container.hpp"
#include "l2m/errors.hpp"

#include <cstring>
#include <fstream>

namespace l2m {
namespace {

constexpr char kMagic[4] = {'L', '2', 'M', 'T'};
constexpr std::uint8_t kVersion = 1;

size_t dtype_size(DType t) {
    switch (t) {
    case DType::F32: return 4;
    case DType::F64: return 8;
    case DType::U32: return 4;
    }
    throw DataError("L2MT: unknown dtype");
}

template <typename U>
void put(std::ofstream& out, U v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v); // little-endian host
}

template <typename U>
U get(std::ifstream& in, const std::filesystem::path& path) {
    U v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw DataError("L2MT: truncated file: " + path.string());
    return v;
}

} // namespace

std::uint64_t TensorEntry::element_count() const {
    std::uint64_t c = 1;
    for (std::uint32_t d : dims) c *= d;
    return c;
}

Eigen::MatrixXd TensorEntry::as_matrix() const {
    if (dtype == DType::U32) throw DataError("L2MT: entry '" + name + "' is not floating point");
    if (dims.empty() || dims.size() > 2)
        throw DataError("L2MT: entry '" + name + "' is not rank 1 or 2");
    const Eigen::Index rows = dims[0];
    const Eigen::Index cols = dims.size() == 2 ? dims[1] : 1;
    Eigen::MatrixXd m(rows, cols);
    if (dtype == DType::F64) {
        const double* p = reinterpret_cast<const double*>(raw.data());
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = p[r * cols + c];
    } else {
        const float* p = reinterpret_cast<const float*>(raw.data());
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = p[r * cols + c];
    }
    return m;
}

std::vector<std::uint32_t> TensorEntry::as_u32() const {
    if (dtype != DType::U32) throw DataError("L2MT: entry '" + name + "' is not u32");
    std::vector<std::uint32_t> v(element_count());
    std::memcpy(v.data(), raw.data(), v.size() * 4);
    return v;
}

const TensorEntry* TensorFile::find(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

const TensorEntry& TensorFile::require(const std::string& name) const {
    const TensorEntry* e = find(name);
    if (!e) throw DataError("L2MT: missing entry '" + name + "'");
    return *e;
}

void TensorFile::add_matrix(const std::string& name, const Eigen::MatrixXd& m, DType dtype) {
    TensorEntry e;
    e.name = name;
    e.dtype = dtype;
    e.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
    e.raw.resize(static_cast<size_t>(m.size()) * dtype_size(dtype));
    if (dtype == DType::F64) {
        double* p = reinterpret_cast<double*>(e.raw.data());
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) p[r * m.cols() + c] = m(r, c);
    } else if (dtype == DType::F32) {
        float* p = reinterpret_cast<float*>(e.raw.data());
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) p[r * m.cols() + c] = static_cast<float>(m(r, c));
    } else {
        throw DataError("L2MT: add_matrix requires a float dtype");
    }
    entries.push_back(std::move(e));
}

void TensorFile::add_u32(const std::string& name, const std::vector<std::uint32_t>& v) {
    TensorEntry e;
    e.name = name;
    e.dtype = DType::U32;
    e.dims = {static_cast<std::uint32_t>(v.size())};
    e.raw.resize(v.size() * 4);
    std::memcpy(e.raw.data(), v.data(), e.raw.size());
    entries.push_back(std::move(e));
}

TensorFile read_l2mt(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open tensor file: " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("L2MT: bad magic in " + path.string());
    const auto version = get<std::uint8_t>(in, path);
    if (version != kVersion)
        throw DataError("L2MT: unsupported version " + std::to_string(version));
    const auto count = get<std::uint32_t>(in, path);
    TensorFile file;
    file.entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        TensorEntry e;
        const auto name_len = get<std::uint16_t>(in, path);
        e.name.resize(name_len);
        if (!in.read(e.name.data(), name_len)) throw DataError("L2MT: truncated name in " + path.string());
        e.dtype = static_cast<DType>(get<std::uint8_t>(in, path));
        dtype_size(e.dtype); // validates
        const auto rank = get<std::uint8_t>(in, path);
        e.dims.resize(rank);
        for (auto& d : e.dims) d = get<std::uint32_t>(in, path);
        e.raw.resize(e.element_count() * dtype_size(e.dtype));
        if (!in.read(reinterpret_cast<char*>(e.raw.data()),
                     static_cast<std::streamsize>(e.raw.size())))
            throw DataError("L2MT: truncated payload for '" + e.name + "' in " + path.string());
        file.entries.push_back(std::move(e));
    }
    return file;
}

void write_l2mt(const TensorFile& file, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write tensor file: " + path.string());
    out.write(kMagic, 4);
    put(out, kVersion);
    put(out, static_cast<std::uint32_t>(file.entries.size()));
    for (const auto& e : file.entries) {
        put(out, static_cast<std::uint16_t>(e.name.size()));
        out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        put(out, static_cast<std::uint8_t>(e.dtype));
        put(out, static_cast<std::uint8_t>(e.dims.size()));
        for (std::uint32_t d : e.dims) put(out, d);
        out.write(reinterpret_cast<const char*>(e.raw.data()),
                  static_cast<std::streamsize>(e.raw.size()));
    }
    if (!out) throw DataError("write failed: " + path.string());
}

} // namespace l2m
