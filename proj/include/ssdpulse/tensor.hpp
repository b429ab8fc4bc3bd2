#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssdpulse {

// Thrown when tensor shapes are incompatible with an operation.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown for invalid scalar arguments, flags or specs.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when a file's contents don't match the expected format.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown for filesystem-level failures (missing file, short read, ...).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense row-major float32 tensor. Rank is dynamic (0 is allowed and means
// an empty tensor, not a scalar).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::int64_t> shape);
    Tensor(std::vector<std::int64_t> shape, std::vector<float> values);

    static Tensor full(std::vector<std::int64_t> shape, float value);

    std::int64_t rank() const { return static_cast<std::int64_t>(shape_.size()); }
    std::int64_t dim(std::int64_t i) const;
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
    const std::vector<std::int64_t>& shape() const { return shape_; }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& values() { return data_; }
    const std::vector<float>& values() const { return data_; }

    float& at(std::int64_t i0);
    float at(std::int64_t i0) const;
    float& at(std::int64_t i0, std::int64_t i1);
    float at(std::int64_t i0, std::int64_t i1) const;
    float& at(std::int64_t i0, std::int64_t i1, std::int64_t i2);
    float at(std::int64_t i0, std::int64_t i1, std::int64_t i2) const;
    float& at(std::int64_t i0, std::int64_t i1, std::int64_t i2, std::int64_t i3);
    float at(std::int64_t i0, std::int64_t i1, std::int64_t i2, std::int64_t i3) const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    std::string shape_str() const;

private:
    std::int64_t offset(std::int64_t i0) const;
    std::int64_t offset(std::int64_t i0, std::int64_t i1) const;
    std::int64_t offset(std::int64_t i0, std::int64_t i1, std::int64_t i2) const;
    std::int64_t offset(std::int64_t i0, std::int64_t i1, std::int64_t i2,
                        std::int64_t i3) const;

    std::vector<std::int64_t> shape_;
    std::vector<float> data_;
};

std::string shape_to_string(const std::vector<std::int64_t>& shape);

// Binary tensor container. Layout: magic "PTNSR1", u32 rank, rank x u32 dims,
// then numel x f32 row-major. All integers and floats little-endian.
std::string serialize_ptnsr(const Tensor& t);
Tensor parse_ptnsr(const std::string& bytes, const std::string& origin);
void write_ptnsr(const std::string& path, const Tensor& t);
Tensor read_ptnsr(const std::string& path);

// FNV-1a 64-bit over a byte range; used for checkpoint content hashes.
std::uint64_t fnv1a64(const void* data, std::size_t len);

// Writes bytes to a temp file in the target directory and renames it over
// `path`, so readers never observe a partially written file.
void atomic_write_file(const std::string& path, const std::string& bytes);

}  // namespace ssdpulse
