#include "splatfeat/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "splatfeat/error.hpp"

namespace splatfeat {
namespace {

constexpr char kMagic[4] = {'F', 'T', 'C', '1'};

std::size_t checked_count(const std::vector<std::uint64_t>& shape) {
    std::size_t n = 1;
    for (auto d : shape) {
        if (d != 0 && n > SIZE_MAX / d) throw ParseError("FTC1: tensor dimensions overflow");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

template <class T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    out.insert(out.end(), buf, buf + sizeof(T));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    template <class T>
    T get(const char* what) {
        if (bytes_.size() - pos_ < sizeof(T))
            throw ParseError(std::string("FTC1: truncated while reading ") + what);
        std::uint8_t buf[sizeof(T)];
        std::memcpy(buf, bytes_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
        pos_ += sizeof(T);
        T value;
        std::memcpy(&value, buf, sizeof(T));
        return value;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }
    std::size_t position() const { return pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

template <class T>
std::vector<T> read_payload(Reader& reader, std::size_t count) {
    if (reader.remaining() / sizeof(T) < count)
        throw ParseError("FTC1: truncated payload: expected " + std::to_string(count) +
                         " elements, found " + std::to_string(reader.remaining() / sizeof(T)));
    std::vector<T> values(count);
    for (auto& v : values) v = reader.get<T>("payload");
    return values;
}

}  // namespace

Tensor::Tensor(std::vector<std::uint64_t> shape_, std::vector<float> values)
    : shape(std::move(shape_)), data(std::move(values)) {
    if (checked_count(shape) != std::get<std::vector<float>>(data).size())
        throw PreconditionError("tensor shape does not match element count");
}

Tensor::Tensor(std::vector<std::uint64_t> shape_, std::vector<double> values)
    : shape(std::move(shape_)), data(std::move(values)) {
    if (checked_count(shape) != std::get<std::vector<double>>(data).size())
        throw PreconditionError("tensor shape does not match element count");
}

std::size_t Tensor::element_count() const { return checked_count(shape); }

template <class T>
std::vector<T> Tensor::as() const {
    return std::visit(
        [](const auto& v) { return std::vector<T>(v.begin(), v.end()); }, data);
}

template std::vector<float> Tensor::as<float>() const;
template std::vector<double> Tensor::as<double>() const;

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor) {
    std::vector<std::uint8_t> out;
    const std::size_t elem = tensor.dtype() == DType::kF32 ? 4 : 8;
    out.reserve(4 + 4 + 1 + 4 + 8 * tensor.rank() + elem * tensor.element_count());
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_le<std::uint32_t>(out, kTensorVersion);
    out.push_back(static_cast<std::uint8_t>(tensor.dtype()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rank()));
    for (auto d : tensor.shape) put_le<std::uint64_t>(out, d);
    std::visit(
        [&](const auto& values) {
            for (auto v : values) put_le(out, v);
        },
        tensor.data);
    return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw ParseError("FTC1: bad magic");
    Reader reader(bytes.subspan(4));
    const auto version = reader.get<std::uint32_t>("version");
    if (version != kTensorVersion)
        throw ParseError("FTC1: unsupported version " + std::to_string(version));
    const auto dtype = reader.get<std::uint8_t>("dtype");
    if (dtype != 1 && dtype != 2) throw ParseError("FTC1: bad dtype " + std::to_string(dtype));
    const auto rank = reader.get<std::uint32_t>("rank");
    if (rank > reader.remaining() / 8) throw ParseError("FTC1: truncated while reading dims");
    std::vector<std::uint64_t> shape(rank);
    for (auto& d : shape) d = reader.get<std::uint64_t>("dims");
    const std::size_t count = checked_count(shape);
    Tensor t;
    t.shape = std::move(shape);
    if (dtype == 1)
        t.data = read_payload<float>(reader, count);
    else
        t.data = read_payload<double>(reader, count);
    if (reader.remaining() != 0)
        throw ParseError("FTC1: " + std::to_string(reader.remaining()) +
                         " trailing bytes after payload");
    return t;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

void write_tensor(const std::filesystem::path& path, const Tensor& tensor) {
    write_file_bytes(path, encode_tensor(tensor));
}

Tensor read_tensor(const std::filesystem::path& path) {
    auto bytes = read_file_bytes(path);
    try {
        return decode_tensor(bytes);
    } catch (const ParseError& e) {
        throw ParseError(std::string(e.what()) + " (" + path.string() + ")");
    }
}

}  // namespace splatfeat
