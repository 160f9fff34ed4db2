#pragma once

// Partition construction from region annotations and captions, and the
// object position vs. object size profile of captions.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dbd/core.hpp"
#include "dbd/manifest.hpp"

namespace dbd {

// ---------------------------------------------------------------------------
// Captions
// ---------------------------------------------------------------------------

struct CaptionSegment {
  CharSpan span;
  std::string text;
  PartitionKind kind = PartitionKind::sentence;
  friend bool operator==(const CaptionSegment&, const CaptionSegment&) = default;
};

namespace detail {

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
inline bool is_terminator(char c) { return c == '.' || c == '?' || c == '!'; }

}  // namespace detail

/// Sentences split at '.', '?' or '!' followed by whitespace or the end of
/// the text, trimmed, empty pieces dropped; the trimmed full caption comes
/// last with kind full. Spans index into `text`.
inline std::vector<CaptionSegment> segment_caption(std::string_view text) {
  std::size_t first = 0, last = text.size();
  while (first < last && detail::is_space(text[first])) ++first;
  while (last > first && detail::is_space(text[last - 1])) --last;
  if (first == last) throw InvalidArgument("segment_caption: caption is empty");

  std::vector<CaptionSegment> out;
  auto emit = [&](std::size_t begin, std::size_t end) {
    while (begin < end && detail::is_space(text[begin])) ++begin;
    while (end > begin && detail::is_space(text[end - 1])) --end;
    if (begin < end)
      out.push_back({{begin, end}, std::string(text.substr(begin, end - begin)), PartitionKind::sentence});
  };

  std::size_t start = first;
  for (std::size_t i = first; i < last; ++i) {
    if (!detail::is_terminator(text[i])) continue;
    if (i + 1 == last || detail::is_space(text[i + 1])) {
      emit(start, i + 1);
      start = i + 1;
    }
  }
  emit(start, last);
  out.push_back({{first, last}, std::string(text.substr(first, last - first)), PartitionKind::full});
  return out;
}

/// Caption-side manifest: one sentence entry per segment, then the full
/// caption; embedding indices follow entry order.
inline PartitionManifest caption_partitions(std::string_view caption, std::string item_id = {}) {
  PartitionManifest m;
  m.item_id = std::move(item_id);
  const auto segments = segment_caption(caption);
  std::size_t sentence = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    PartitionEntry e;
    e.modality = Modality::caption;
    e.kind = segments[i].kind;
    e.id = segments[i].kind == PartitionKind::full ? "full" : "sentence:" + std::to_string(sentence++);
    e.span = segments[i].span;
    e.embedding_index = i;
    m.entries.push_back(std::move(e));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Region annotations
// ---------------------------------------------------------------------------

struct AnnotatedBox {
  std::string id;
  BBox bbox;
  std::vector<std::string> names;  // object names; may be empty for regions
  std::string phrase;              // region description, optional
  friend bool operator==(const AnnotatedBox&, const AnnotatedBox&) = default;
};

struct RegionAnnotation {
  std::string image_id;
  double width = 0, height = 0;
  std::vector<AnnotatedBox> regions;
  std::vector<AnnotatedBox> objects;
  friend bool operator==(const RegionAnnotation&, const RegionAnnotation&) = default;
};

inline std::vector<std::string> validate_annotation(const RegionAnnotation& a) {
  std::vector<std::string> out;
  if (!(a.width > 0) || !(a.height > 0)) out.push_back("image '" + a.image_id + "' has no size");
  auto check = [&](const AnnotatedBox& b, const char* what, bool need_names) {
    const BBox& r = b.bbox;
    if (r.x < 0 || r.y < 0 || r.w <= 0 || r.h <= 0 || r.x + r.w > a.width || r.y + r.h > a.height)
      out.push_back(std::string(what) + " '" + b.id + "' bbox outside image bounds");
    if (need_names) {
      if (b.names.empty()) out.push_back(std::string(what) + " '" + b.id + "' has no names");
      for (const auto& n : b.names)
        if (n.empty()) out.push_back(std::string(what) + " '" + b.id + "' has an empty name");
    }
  };
  for (const auto& r : a.regions) check(r, "region", false);
  for (const auto& o : a.objects) check(o, "object", true);
  return out;
}

/// Image-side manifest: regions (annotation order), then objects, then the
/// full image. Embedding indices follow entry order.
inline PartitionManifest build_partitions(const RegionAnnotation& annotation) {
  if (auto v = validate_annotation(annotation); !v.empty())
    throw ValidationError("invalid region annotation", std::move(v));

  PartitionManifest m;
  m.item_id = annotation.image_id;
  m.image = ImageDims{annotation.width, annotation.height};
  std::size_t index = 0;
  auto add = [&](std::string id, PartitionKind kind, BBox box) {
    PartitionEntry e;
    e.id = std::move(id);
    e.modality = Modality::image;
    e.kind = kind;
    e.bbox = box;
    e.embedding_index = index++;
    m.entries.push_back(std::move(e));
  };
  for (const auto& r : annotation.regions) add("region:" + r.id, PartitionKind::region, r.bbox);
  for (const auto& o : annotation.objects) add("object:" + o.id, PartitionKind::object, o.bbox);
  add("full", PartitionKind::full, BBox{0, 0, annotation.width, annotation.height});
  return m;
}

// ---------------------------------------------------------------------------
// Position / size profile
// ---------------------------------------------------------------------------

/// Lowercase, edge punctuation removed, one trailing 's' removed.
inline std::string normalize_word(std::string_view word) {
  std::size_t b = 0, e = word.size();
  while (b < e && !std::isalnum(static_cast<unsigned char>(word[b]))) ++b;
  while (e > b && !std::isalnum(static_cast<unsigned char>(word[e - 1]))) --e;
  std::string out;
  out.reserve(e - b);
  for (std::size_t i = b; i < e; ++i) out += static_cast<char>(std::tolower(static_cast<unsigned char>(word[i])));
  if (out.size() > 1 && out.back() == 's') out.pop_back();
  return out;
}

inline std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && detail::is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !detail::is_space(text[j])) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

struct ProfileBin {
  std::size_t bin = 0;
  double mean_area = 0.0;  // 0 when count == 0
  std::size_t count = 0;
  friend bool operator==(const ProfileBin&, const ProfileBin&) = default;
};

/// For caption i and annotation i: every occurrence of an annotated object
/// name (normalized word sequence) contributes one sample at relative
/// position word_index / word_count, valued at the mean bbox-area / image-area
/// of all objects carrying that name.
inline std::vector<ProfileBin> position_size_profile(const std::vector<std::string>& captions,
                                                     const std::vector<RegionAnnotation>& annotations,
                                                     std::size_t bins = 10) {
  if (bins == 0) throw InvalidArgument("position_size_profile: bins must be >= 1");
  if (captions.size() != annotations.size())
    throw InvalidArgument("position_size_profile: captions and annotations differ in count");

  std::vector<double> sums(bins, 0.0);
  std::vector<std::size_t> counts(bins, 0);

  for (std::size_t c = 0; c < captions.size(); ++c) {
    const auto& ann = annotations[c];
    if (!(ann.width > 0) || !(ann.height > 0)) throw InvalidArgument("annotation without image size");
    const double image_area = ann.width * ann.height;

    // normalized name (as word sequence) -> (sum of area fractions, count)
    std::map<std::vector<std::string>, std::pair<double, std::size_t>> names;
    for (const auto& obj : ann.objects) {
      for (const auto& name : obj.names) {
        std::vector<std::string> key;
        for (const auto& w : split_words(name)) {
          auto n = normalize_word(w);
          if (!n.empty()) key.push_back(std::move(n));
        }
        if (key.empty()) continue;
        auto& slot = names[key];
        slot.first += obj.bbox.area() / image_area;
        slot.second += 1;
      }
    }

    std::vector<std::string> words;
    for (const auto& w : split_words(captions[c])) words.push_back(normalize_word(w));
    if (words.empty()) continue;

    for (std::size_t i = 0; i < words.size(); ++i) {
      for (const auto& [key, agg] : names) {
        if (i + key.size() > words.size()) continue;
        bool match = true;
        for (std::size_t j = 0; j < key.size() && match; ++j) match = words[i + j] == key[j];
        if (!match) continue;
        // floor(i / |words| * bins), in integers so bin edges are exact
        const auto bin = std::min(bins - 1, i * bins / words.size());
        sums[bin] += agg.first / static_cast<double>(agg.second);
        counts[bin] += 1;
      }
    }
  }

  std::vector<ProfileBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b)
    out[b] = {b, counts[b] ? sums[b] / static_cast<double>(counts[b]) : 0.0, counts[b]};
  return out;
}

}  // namespace dbd
