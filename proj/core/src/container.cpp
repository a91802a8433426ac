// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include "recam/container.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fmt/format.h>

#include "recam/error.hpp"

namespace recam {

static_assert(std::endian::native == std::endian::little, "container IO assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'P', 'D', 'T', '1'};

template <typename U>
void put(std::ofstream& os, U value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(U));
}

class Cursor {
public:
    explicit Cursor(std::span<const std::byte> bytes) : bytes_(bytes) {}

    template <typename U>
    U take() {
        need(sizeof(U));
        U value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(U));
        pos_ += sizeof(U);
        return value;
    }

    std::span<const std::byte> take_bytes(std::uint64_t n) {
        need(n);
        auto out = bytes_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    std::uint64_t position() const { return pos_; }
    std::uint64_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::uint64_t n) const {
        if (n > bytes_.size() - pos_) {
            fail(ErrorKind::CorruptContainer, fmt::format("truncated at byte {} (need {} more)", pos_, n));
        }
    }

    std::span<const std::byte> bytes_;
    std::uint64_t pos_ = 0;
};

}  // namespace

std::size_t dtype_size(DType dtype) {
    switch (dtype) {
        case DType::F32: return 4;
        case DType::U8: return 1;
    }
    fail(ErrorKind::CorruptContainer, "unknown dtype");
}

std::uint64_t Tensor::element_count() const {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

Tensor Tensor::from_f32(std::span<const float> values, std::vector<std::uint64_t> dims) {
    Tensor t;
    t.dtype = DType::F32;
    t.dims = std::move(dims);
    if (t.element_count() != values.size()) fail(ErrorKind::InvalidParams, "tensor dims do not match value count");
    t.payload.resize(values.size_bytes());
    std::memcpy(t.payload.data(), values.data(), values.size_bytes());
    return t;
}

Tensor Tensor::from_u8(std::span<const std::uint8_t> values, std::vector<std::uint64_t> dims) {
    Tensor t;
    t.dtype = DType::U8;
    t.dims = std::move(dims);
    if (t.element_count() != values.size()) fail(ErrorKind::InvalidParams, "tensor dims do not match value count");
    t.payload.resize(values.size());
    std::memcpy(t.payload.data(), values.data(), values.size());
    return t;
}

std::vector<float> Tensor::to_f32() const {
    if (dtype != DType::F32) fail(ErrorKind::InvalidParams, "tensor is not f32");
    std::vector<float> out(payload.size() / 4);
    std::memcpy(out.data(), payload.data(), payload.size());
    return out;
}

ContainerWriter::ContainerWriter(const std::filesystem::path& path) : path_(path), os_(path, std::ios::binary) {
    if (!os_) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    os_.write(kMagic, 4);
    put<std::uint32_t>(os_, kContainerVersion);
    put<std::uint32_t>(os_, 0);
    position_ = 12;
}

std::uint64_t ContainerWriter::add(const Tensor& tensor) {
    if (finished_) fail(ErrorKind::Io, "container already finished");
    if (tensor.dims.size() > 255) fail(ErrorKind::InvalidParams, "too many tensor dims");
    if (tensor.payload.size() != tensor.element_count() * dtype_size(tensor.dtype)) {
        fail(ErrorKind::InvalidParams, "tensor payload size does not match dims");
    }
    if (tensor.dtype == DType::F32) {
        const auto* f = reinterpret_cast<const float*>(tensor.payload.data());
        for (std::size_t i = 0; i < tensor.payload.size() / 4; ++i) {
            if (!std::isfinite(f[i])) fail(ErrorKind::Numeric, "refusing to store non-finite tensor values");
        }
    }
    const std::uint64_t offset = position_;
    put<std::uint8_t>(os_, static_cast<std::uint8_t>(tensor.dtype));
    put<std::uint8_t>(os_, static_cast<std::uint8_t>(tensor.dims.size()));
    for (auto d : tensor.dims) put<std::uint64_t>(os_, d);
    os_.write(reinterpret_cast<const char*>(tensor.payload.data()), static_cast<std::streamsize>(tensor.payload.size()));
    position_ += 2 + 8 * tensor.dims.size() + tensor.payload.size();
    ++count_;
    if (!os_) fail(ErrorKind::Io, "write failed for " + path_.string());
    return offset;
}

void ContainerWriter::finish(std::string_view manifest) {
    if (finished_) return;
    put<std::uint64_t>(os_, manifest.size());
    os_.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
    os_.seekp(8);
    put<std::uint32_t>(os_, count_);
    os_.close();
    finished_ = true;
    if (!os_) fail(ErrorKind::Io, "write failed for " + path_.string());
}

void write_container(const std::filesystem::path& path, std::span<const Tensor> tensors, std::string_view manifest) {
    ContainerWriter writer(path);
    for (const auto& t : tensors) writer.add(t);
    writer.finish(manifest);
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary | std::ios::ate);
    if (!is) fail(ErrorKind::Io, "cannot open " + path.string());
    const auto size = static_cast<std::size_t>(is.tellg());
    std::vector<std::byte> bytes(size);
    is.seekg(0);
    is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    if (!is) fail(ErrorKind::Io, "read failed for " + path.string());
    return bytes;
}

ContainerContents parse_container(std::span<const std::byte> bytes) {
    Cursor cur(bytes);
    const auto magic = cur.take_bytes(4);
    if (std::memcmp(magic.data(), kMagic, 4) != 0) fail(ErrorKind::CorruptContainer, "bad magic");
    const auto version = cur.take<std::uint32_t>();
    if (version != kContainerVersion) {
        fail(ErrorKind::CorruptContainer, fmt::format("unsupported version {}", version));
    }
    const auto count = cur.take<std::uint32_t>();
    ContainerContents out;
    out.tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        out.offsets.push_back(cur.position());
        Tensor t;
        const auto dtype = cur.take<std::uint8_t>();
        if (dtype > 1) fail(ErrorKind::CorruptContainer, fmt::format("unknown dtype {}", dtype));
        t.dtype = static_cast<DType>(dtype);
        const auto ndim = cur.take<std::uint8_t>();
        std::uint64_t elements = 1;
        for (int d = 0; d < ndim; ++d) {
            t.dims.push_back(cur.take<std::uint64_t>());
            if (t.dims.back() != 0 && elements > cur.remaining() / t.dims.back()) {
                fail(ErrorKind::CorruptContainer, "tensor larger than file");
            }
            elements *= t.dims.back();
        }
        const auto payload = cur.take_bytes(elements * dtype_size(t.dtype));
        t.payload.assign(payload.begin(), payload.end());
        out.tensors.push_back(std::move(t));
    }
    const auto length = cur.take<std::uint64_t>();
    const auto text = cur.take_bytes(length);
    out.manifest.assign(reinterpret_cast<const char*>(text.data()), text.size());
    if (cur.remaining() != 0) fail(ErrorKind::CorruptContainer, "trailing bytes after manifest");
    return out;
}

ContainerContents read_container(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return parse_container(bytes);
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) { return fmt::format("{:016x}", value); }

}  // namespace recam
