// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace recam {

// .pdt layout, all integers little-endian:
//   "PDT1" | u32 version (=1) | u32 tensor count
//   per tensor: u8 dtype | u8 ndim | ndim x u64 dims | row-major payload
//   u64 manifest length | manifest bytes (UTF-8, one line per entry)

inline constexpr std::uint32_t kContainerVersion = 1;

enum class DType : std::uint8_t { F32 = 0, U8 = 1 };

std::size_t dtype_size(DType dtype);

struct Tensor {
    DType dtype = DType::F32;
    std::vector<std::uint64_t> dims;
    std::vector<std::byte> payload;

    static Tensor from_f32(std::span<const float> values, std::vector<std::uint64_t> dims);
    static Tensor from_u8(std::span<const std::uint8_t> values, std::vector<std::uint64_t> dims);

    std::uint64_t element_count() const;
    /// Copies the payload out; throws ErrorKind::InvalidParams on dtype mismatch.
    std::vector<float> to_f32() const;

    bool operator==(const Tensor&) const = default;
};

struct ContainerContents {
    std::vector<Tensor> tensors;
    std::vector<std::uint64_t> offsets;  ///< byte offset of each tensor header
    std::string manifest;
};

/// Streaming single writer. The tensor count in the header is patched in
/// finish(), so callers need not know it up front.
class ContainerWriter {
public:
    explicit ContainerWriter(const std::filesystem::path& path);
    ContainerWriter(const ContainerWriter&) = delete;
    ContainerWriter& operator=(const ContainerWriter&) = delete;

    /// Returns the byte offset of the tensor's header. Non-finite floats are rejected.
    std::uint64_t add(const Tensor& tensor);
    void finish(std::string_view manifest);

private:
    std::filesystem::path path_;
    std::ofstream os_;
    std::uint64_t position_ = 0;
    std::uint32_t count_ = 0;
    bool finished_ = false;
};

void write_container(const std::filesystem::path& path, std::span<const Tensor> tensors, std::string_view manifest);

/// Throws ErrorKind::CorruptContainer on bad magic, version mismatch,
/// unknown dtype or truncation; ErrorKind::Io when the file cannot be opened.
ContainerContents read_container(const std::filesystem::path& path);
ContainerContents parse_container(std::span<const std::byte> bytes);

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);

/// FNV-1a 64-bit, used for config and content hashes.
std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t value);

}  // namespace recam
