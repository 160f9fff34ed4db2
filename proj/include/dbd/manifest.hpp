#pragma once

// Partition manifests: which embedding row belongs to which image crop or
// caption span.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dbd/core.hpp"

namespace dbd {

enum class Modality { image, caption };
enum class PartitionKind { full, region, object, sentence };

inline std::string_view to_string(Modality m) { return m == Modality::image ? "image" : "caption"; }

inline std::string_view to_string(PartitionKind k) {
  switch (k) {
    case PartitionKind::full: return "full";
    case PartitionKind::region: return "region";
    case PartitionKind::object: return "object";
    case PartitionKind::sentence: return "sentence";
  }
  return "?";
}

inline Modality parse_modality(std::string_view s) {
  if (s == "image") return Modality::image;
  if (s == "caption") return Modality::caption;
  throw ValidationError("unknown modality '" + std::string(s) + "'");
}

inline PartitionKind parse_partition_kind(std::string_view s) {
  if (s == "full") return PartitionKind::full;
  if (s == "region") return PartitionKind::region;
  if (s == "object") return PartitionKind::object;
  if (s == "sentence") return PartitionKind::sentence;
  throw ValidationError("unknown partition kind '" + std::string(s) + "'");
}

/// Pixel rectangle, origin top-left.
struct BBox {
  double x = 0, y = 0, w = 0, h = 0;
  double area() const { return w * h; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Half-open character range [start, end) into a caption.
struct CharSpan {
  std::size_t start = 0, end = 0;
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct ImageDims {
  double width = 0, height = 0;
  friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

struct PartitionEntry {
  std::string id;
  Modality modality = Modality::image;
  PartitionKind kind = PartitionKind::full;
  std::optional<BBox> bbox;      // image kinds
  std::optional<CharSpan> span;  // caption kinds
  std::size_t embedding_index = 0;
  friend bool operator==(const PartitionEntry&, const PartitionEntry&) = default;
};

/// Partitions of one image/caption item. A manifest may hold one modality
/// (the sidecar of a single embedding file) or both.
struct PartitionManifest {
  std::string item_id;
  std::optional<std::uint32_t> dim;
  std::optional<ImageDims> image;
  std::vector<PartitionEntry> entries;

  std::vector<const PartitionEntry*> of(Modality m) const {
    std::vector<const PartitionEntry*> out;
    for (const auto& e : entries)
      if (e.modality == m) out.push_back(&e);
    return out;
  }
  friend bool operator==(const PartitionManifest&, const PartitionManifest&) = default;
};

/// Row counts of the embedding sets a manifest refers to. A modality left
/// unset is not checked for presence.
struct EmbeddingCounts {
  std::optional<std::size_t> image;
  std::optional<std::size_t> caption;
};

/// Returns one message per violated rule; empty means the manifest is valid.
/// Messages name the offending entry id(s).
inline std::vector<std::string> validate_manifest(const PartitionManifest& manifest,
                                                  std::optional<ImageDims> image_dims,
                                                  const EmbeddingCounts& counts) {
  std::vector<std::string> out;
  const auto dims = image_dims ? image_dims : manifest.image;

  for (Modality m : {Modality::image, Modality::caption}) {
    const auto entries = manifest.of(m);
    const auto count = m == Modality::image ? counts.image : counts.caption;
    if (entries.empty() && !count) continue;

    std::map<std::size_t, const PartitionEntry*> by_index;
    std::size_t fulls = 0;
    for (const PartitionEntry* e : entries) {
      const bool image_kind = e->kind != PartitionKind::sentence;
      if (m == Modality::image && e->kind == PartitionKind::sentence)
        out.push_back("entry '" + e->id + "': kind sentence is not an image kind");
      if (m == Modality::caption &&
          (e->kind == PartitionKind::region || e->kind == PartitionKind::object))
        out.push_back("entry '" + e->id + "': kind " + std::string(to_string(e->kind)) +
                      " is not a caption kind");
      if (e->kind == PartitionKind::full) ++fulls;

      auto [it, inserted] = by_index.emplace(e->embedding_index, e);
      if (!inserted)
        out.push_back("entries '" + it->second->id + "' and '" + e->id +
                      "' share embedding_index " + std::to_string(e->embedding_index));
      if (count && e->embedding_index >= *count)
        out.push_back("entry '" + e->id + "': embedding_index " +
                      std::to_string(e->embedding_index) + " out of range (" +
                      std::to_string(*count) + " rows)");

      if (m == Modality::image && image_kind) {
        if (!e->bbox) {
          out.push_back("entry '" + e->id + "': image partition without bbox");
        } else if (dims) {
          const BBox& b = *e->bbox;
          if (b.x < 0 || b.y < 0 || b.w <= 0 || b.h <= 0 || b.x + b.w > dims->width ||
              b.y + b.h > dims->height)
            out.push_back("entry '" + e->id + "': bbox outside image bounds");
        }
      }
      if (m == Modality::caption) {
        if (!e->span)
          out.push_back("entry '" + e->id + "': caption partition without char span");
        else if (e->span->end < e->span->start)
          out.push_back("entry '" + e->id + "': char span end precedes start");
      }
    }
    if (fulls != 1)
      out.push_back(std::string(to_string(m)) + " modality has " + std::to_string(fulls) +
                    " kind=full entries (expected exactly 1)");
  }
  return out;
}

}  // namespace dbd
