#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace splatfeat {

enum class DType : std::uint8_t { kF32 = 1, kF64 = 2 };

/// Dense row-major tensor as stored in an FTC1 container.
///
/// Layout on disk (all little-endian):
///   "FTC1" | u32 version (=1) | u8 dtype | u32 rank | rank x u64 dims | payload
/// The payload is the row-major element array with no padding. Reading and
/// writing is bit-exact in both directions.
struct Tensor {
    std::vector<std::uint64_t> shape;
    std::variant<std::vector<float>, std::vector<double>> data;

    Tensor() : data(std::vector<float>{}) {}
    Tensor(std::vector<std::uint64_t> shape_, std::vector<float> values);
    Tensor(std::vector<std::uint64_t> shape_, std::vector<double> values);

    DType dtype() const {
        return std::holds_alternative<std::vector<float>>(data) ? DType::kF32 : DType::kF64;
    }
    std::size_t rank() const { return shape.size(); }
    std::size_t element_count() const;

    template <class T>
    const std::vector<T>& values() const {
        return std::get<std::vector<T>>(data);
    }
    template <class T>
    std::vector<T>& values() {
        return std::get<std::vector<T>>(data);
    }

    /// Copy of the payload converted to T (no-op copy when dtype matches).
    template <class T>
    std::vector<T> as() const;
};

inline constexpr std::uint32_t kTensorVersion = 1;

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_tensor(const std::filesystem::path& path);

/// Whole-file read used by the tensor reader and by manifest hashing.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace splatfeat
