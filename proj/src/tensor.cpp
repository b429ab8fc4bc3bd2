#include "ssdpulse/tensor.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <unistd.h>

namespace ssdpulse {

namespace {

std::int64_t checked_numel(const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (std::int64_t d : shape) {
        if (d <= 0) {
            throw ShapeError("tensor dims must be positive, got shape " +
                             shape_to_string(shape));
        }
        if (n > std::numeric_limits<std::int64_t>::max() / d) {
            throw ShapeError("tensor shape overflows element count");
        }
        n *= d;
    }
    return n;
}

}  // namespace

std::string shape_to_string(const std::vector<std::int64_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor::Tensor(std::vector<std::int64_t> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<std::size_t>(checked_numel(shape_)), 0.0f);
}

Tensor::Tensor(std::vector<std::int64_t> shape, std::vector<float> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
    std::int64_t n = checked_numel(shape_);
    if (n != static_cast<std::int64_t>(data_.size())) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_to_string(shape_));
    }
}

Tensor Tensor::full(std::vector<std::int64_t> shape, float value) {
    Tensor t(std::move(shape));
    for (float& v : t.data_) v = value;
    return t;
}

std::int64_t Tensor::dim(std::int64_t i) const {
    if (i < 0 || i >= rank()) {
        throw ArgumentError("dim index " + std::to_string(i) +
                            " out of range for rank " + std::to_string(rank()));
    }
    return shape_[static_cast<std::size_t>(i)];
}

std::string Tensor::shape_str() const { return shape_to_string(shape_); }

namespace {

inline void check_axis(std::int64_t i, std::int64_t dim, const Tensor& t) {
    if (i < 0 || i >= dim) {
        throw ShapeError("index " + std::to_string(i) + " out of bounds for tensor " +
                         t.shape_str());
    }
}

}  // namespace

std::int64_t Tensor::offset(std::int64_t i0) const {
    if (rank() != 1) throw ShapeError("1-d index on tensor " + shape_str());
    check_axis(i0, shape_[0], *this);
    return i0;
}

std::int64_t Tensor::offset(std::int64_t i0, std::int64_t i1) const {
    if (rank() != 2) throw ShapeError("2-d index on tensor " + shape_str());
    check_axis(i0, shape_[0], *this);
    check_axis(i1, shape_[1], *this);
    return i0 * shape_[1] + i1;
}

std::int64_t Tensor::offset(std::int64_t i0, std::int64_t i1, std::int64_t i2) const {
    if (rank() != 3) throw ShapeError("3-d index on tensor " + shape_str());
    check_axis(i0, shape_[0], *this);
    check_axis(i1, shape_[1], *this);
    check_axis(i2, shape_[2], *this);
    return (i0 * shape_[1] + i1) * shape_[2] + i2;
}

std::int64_t Tensor::offset(std::int64_t i0, std::int64_t i1, std::int64_t i2,
                            std::int64_t i3) const {
    if (rank() != 4) throw ShapeError("4-d index on tensor " + shape_str());
    check_axis(i0, shape_[0], *this);
    check_axis(i1, shape_[1], *this);
    check_axis(i2, shape_[2], *this);
    check_axis(i3, shape_[3], *this);
    return ((i0 * shape_[1] + i1) * shape_[2] + i2) * shape_[3] + i3;
}

float& Tensor::at(std::int64_t i0) { return data_[static_cast<std::size_t>(offset(i0))]; }
float Tensor::at(std::int64_t i0) const { return data_[static_cast<std::size_t>(offset(i0))]; }
float& Tensor::at(std::int64_t i0, std::int64_t i1) {
    return data_[static_cast<std::size_t>(offset(i0, i1))];
}
float Tensor::at(std::int64_t i0, std::int64_t i1) const {
    return data_[static_cast<std::size_t>(offset(i0, i1))];
}
float& Tensor::at(std::int64_t i0, std::int64_t i1, std::int64_t i2) {
    return data_[static_cast<std::size_t>(offset(i0, i1, i2))];
}
float Tensor::at(std::int64_t i0, std::int64_t i1, std::int64_t i2) const {
    return data_[static_cast<std::size_t>(offset(i0, i1, i2))];
}
float& Tensor::at(std::int64_t i0, std::int64_t i1, std::int64_t i2, std::int64_t i3) {
    return data_[static_cast<std::size_t>(offset(i0, i1, i2, i3))];
}
float Tensor::at(std::int64_t i0, std::int64_t i1, std::int64_t i2, std::int64_t i3) const {
    return data_[static_cast<std::size_t>(offset(i0, i1, i2, i3))];
}

namespace {

constexpr char kMagic[6] = {'P', 'T', 'N', 'S', 'R', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    char b[4];
    b[0] = static_cast<char>(v & 0xff);
    b[1] = static_cast<char>((v >> 8) & 0xff);
    b[2] = static_cast<char>((v >> 16) & 0xff);
    b[3] = static_cast<char>((v >> 24) & 0xff);
    out.append(b, 4);
}

std::uint32_t get_u32(const std::string& in, std::size_t off) {
    const auto* p = reinterpret_cast<const unsigned char*>(in.data() + off);
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void atomic_write_file(const std::string& path, const std::string& bytes) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path dir = target.parent_path();
    if (dir.empty()) dir = ".";
    fs::path tmp = dir / (target.filename().string() + ".tmp." +
                          std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("cannot rename " + tmp.string() + " to " + path + ": " +
                      ec.message());
    }
}

std::string serialize_ptnsr(const Tensor& t) {
    static_assert(sizeof(float) == 4);
    for (std::int64_t i = 0; i < t.rank(); ++i) {
        if (t.dim(i) > std::numeric_limits<std::uint32_t>::max()) {
            throw ArgumentError("tensor dim too large for container: " + t.shape_str());
        }
    }
    std::string bytes;
    bytes.reserve(10 + 4 * static_cast<std::size_t>(t.rank()) +
                  4 * static_cast<std::size_t>(t.numel()));
    bytes.append(kMagic, sizeof(kMagic));
    put_u32(bytes, static_cast<std::uint32_t>(t.rank()));
    for (std::int64_t i = 0; i < t.rank(); ++i) {
        put_u32(bytes, static_cast<std::uint32_t>(t.dim(i)));
    }
    for (std::int64_t i = 0; i < t.numel(); ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, &t.data()[i], 4);
        put_u32(bytes, bits);
    }
    return bytes;
}

Tensor parse_ptnsr(const std::string& bytes, const std::string& origin) {
    if (bytes.size() < sizeof(kMagic) + 4 ||
        std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw FormatError(origin + ": bad magic, not a PTNSR1 file");
    }
    std::size_t off = sizeof(kMagic);
    std::uint32_t rank = get_u32(bytes, off);
    off += 4;
    if (rank > 8) {
        throw FormatError(origin + ": implausible rank " + std::to_string(rank));
    }
    if (bytes.size() < off + 4ull * rank) {
        throw IoError(origin + ": truncated header");
    }
    std::vector<std::int64_t> shape(rank);
    std::uint64_t numel = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        std::uint32_t d = get_u32(bytes, off);
        off += 4;
        if (d == 0) throw FormatError(origin + ": zero dim in header");
        shape[i] = static_cast<std::int64_t>(d);
        numel *= d;
    }
    if (bytes.size() != off + 4ull * numel) {
        throw FormatError(origin + ": payload length " +
                          std::to_string(bytes.size() - off) +
                          " does not match header (" + std::to_string(4ull * numel) +
                          " bytes expected)");
    }
    std::vector<float> values(numel);
    for (std::uint64_t i = 0; i < numel; ++i) {
        std::uint32_t bits = get_u32(bytes, off + 4 * i);
        std::memcpy(&values[i], &bits, 4);
    }
    return Tensor(std::move(shape), std::move(values));
}

void write_ptnsr(const std::string& path, const Tensor& t) {
    atomic_write_file(path, serialize_ptnsr(t));
}

Tensor read_ptnsr(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_ptnsr(ss.str(), path);
}

std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace ssdpulse
