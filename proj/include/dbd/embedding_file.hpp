#pragma once

// Binary embedding files.
//
//   offset  size  field
//   0       4     magic "DBDE"
//   4       2     version (u16 LE, currently 1)
//   6       4     dim     (u32 LE)
//   10      4     count   (u32 LE)
//   14      4*dim*count  payload, f32 LE, row-major
//
// Nothing may follow the payload.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "dbd/core.hpp"
#include "dbd/embedding.hpp"

namespace dbd {

inline constexpr std::array<char, 4> kEmbeddingMagic{'D', 'B', 'D', 'E'};
inline constexpr std::uint16_t kEmbeddingVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderSize = 14;

class EmbeddingFormatError : public ValidationError {
 public:
  enum class Kind { bad_magic, bad_version, truncated, trailing_bytes, dim_mismatch, io };
  EmbeddingFormatError(Kind kind, std::string message)
      : ValidationError(std::move(message)), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

namespace detail {

template <class U>
void put_le(std::vector<unsigned char>& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i)
    out.push_back(static_cast<unsigned char>((value >> (8 * i)) & 0xFFu));
}

template <class U>
U get_le(const unsigned char* p) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(U(p[i]) << (8 * i));
  return value;
}

}  // namespace detail

inline std::vector<unsigned char> encode_embeddings(const EmbeddingSet& set) {
  std::vector<unsigned char> out;
  out.reserve(kEmbeddingHeaderSize + 4 * set.data().size());
  out.insert(out.end(), kEmbeddingMagic.begin(), kEmbeddingMagic.end());
  detail::put_le<std::uint16_t>(out, kEmbeddingVersion);
  detail::put_le<std::uint32_t>(out, set.dim());
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.size()));
  for (float f : set.data()) detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

inline EmbeddingSet decode_embeddings(std::span<const unsigned char> bytes,
                                      std::optional<std::uint32_t> expected_dim = std::nullopt) {
  using K = EmbeddingFormatError::Kind;
  if (bytes.size() < kEmbeddingHeaderSize)
    throw EmbeddingFormatError(K::truncated, "embedding file shorter than its header");
  if (std::memcmp(bytes.data(), kEmbeddingMagic.data(), 4) != 0)
    throw EmbeddingFormatError(K::bad_magic, "embedding file has bad magic");
  const auto version = detail::get_le<std::uint16_t>(bytes.data() + 4);
  if (version != kEmbeddingVersion)
    throw EmbeddingFormatError(K::bad_version,
                               "unsupported embedding file version " + std::to_string(version));
  const auto dim = detail::get_le<std::uint32_t>(bytes.data() + 6);
  const auto count = detail::get_le<std::uint32_t>(bytes.data() + 10);
  if (dim == 0 && count > 0)
    throw EmbeddingFormatError(K::dim_mismatch, "embedding file declares rows of width 0");
  const std::uint64_t payload = 4ull * dim * count;
  const std::uint64_t available = bytes.size() - kEmbeddingHeaderSize;
  if (available < payload)
    throw EmbeddingFormatError(K::truncated, "embedding payload truncated: expected " +
                                                 std::to_string(payload) + " bytes, found " +
                                                 std::to_string(available));
  if (available > payload)
    throw EmbeddingFormatError(K::trailing_bytes, "unexpected bytes after embedding payload");
  if (expected_dim && count > 0 && *expected_dim != dim)
    throw EmbeddingFormatError(K::dim_mismatch, "embedding dim " + std::to_string(dim) +
                                                    " differs from declared " +
                                                    std::to_string(*expected_dim));

  std::vector<float> data(static_cast<std::size_t>(dim) * count);
  const unsigned char* p = bytes.data() + kEmbeddingHeaderSize;
  for (std::size_t i = 0; i < data.size(); ++i, p += 4)
    data[i] = std::bit_cast<float>(detail::get_le<std::uint32_t>(p));
  return EmbeddingSet(dim, std::move(data));
}

inline void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  const auto bytes = encode_embeddings(set);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw EmbeddingFormatError(EmbeddingFormatError::Kind::io, "cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw EmbeddingFormatError(EmbeddingFormatError::Kind::io, "write failed: " + path.string());
}

inline EmbeddingSet read_embeddings(const std::filesystem::path& path,
                                    std::optional<std::uint32_t> expected_dim = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw EmbeddingFormatError(EmbeddingFormatError::Kind::io, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_embeddings(bytes, expected_dim);
}

}  // namespace dbd
