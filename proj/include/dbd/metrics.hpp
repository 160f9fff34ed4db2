#pragma once

// Proportion of top-k similar linear representation (PLR) and the
// CLIP-Recall / CLIP-Precision / CLIP-F1 metric set built on it.
//
// PLR_k(a; B) = |B_k w*| / |a|, w* = argmin_w |B_k w - a|, where the
// columns of B_k are the min(k, |B|) members of B most cosine-similar to a.
// B_k w* is the orthogonal projection of a onto span(B_k), so the value is
// well defined even when B_k is rank deficient.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dbd/core.hpp"
#include "dbd/embedding.hpp"
#include "dbd/manifest.hpp"

namespace dbd {

namespace detail {

template <class T>
double norm_of(std::span<const T> v) {
  double s = 0.0;
  for (T x : v) s += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(s);
}

template <class T>
double dot_of(std::span<const T> a, std::span<const T> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

template <class T>
void require_same_dim(std::span<const T> a, const BasicEmbeddingSet<T>& set) {
  if (set.empty()) throw InvalidArgument("embedding set is empty");
  if (a.size() != set.dim()) throw InvalidArgument("embedding dimensions differ");
}

}  // namespace detail

template <class T>
double cosine_similarity(std::span<const T> a, std::span<const T> b) {
  const double na = detail::norm_of(a);
  const double nb = detail::norm_of(b);
  if (na == 0.0 || nb == 0.0) throw ZeroNormError("cosine similarity of a zero-norm embedding");
  return detail::dot_of(a, b) / (na * nb);
}

/// Indices of the min(k, |B|) members of `set` most cosine-similar to `a`,
/// similarity descending, ties by ascending index.
template <class T>
std::vector<std::size_t> top_k_similar(std::span<const T> a, const BasicEmbeddingSet<T>& set,
                                       std::size_t k) {
  detail::require_same_dim(a, set);
  if (k == 0) throw InvalidArgument("top_k_similar: k must be >= 1");
  std::vector<double> sim(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) sim[i] = cosine_similarity(a, set[i]);

  std::vector<std::size_t> idx(set.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t take = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                    [&](std::size_t x, std::size_t y) {
                      return sim[x] != sim[y] ? sim[x] > sim[y] : x < y;
                    });
  idx.resize(take);
  return idx;
}

/// Norm of the orthogonal projection of `a` onto span of the given columns,
/// divided by |a|. Uses a column-pivoted Householder QR; the first rank
/// columns of Q span the column space.
template <class T>
double projection_ratio(std::span<const T> a, const BasicEmbeddingSet<T>& set,
                        std::span<const std::size_t> columns) {
  const double a_norm = detail::norm_of(a);
  if (a_norm == 0.0) throw ZeroNormError("PLR of a zero-norm embedding");
  if (columns.empty()) return 0.0;

  const auto rows = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd basis(rows, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto col = set[columns[c]];
    for (Eigen::Index r = 0; r < rows; ++r)
      basis(r, static_cast<Eigen::Index>(c)) = static_cast<double>(col[static_cast<std::size_t>(r)]);
  }
  Eigen::VectorXd target(rows);
  for (Eigen::Index r = 0; r < rows; ++r) target(r) = static_cast<double>(a[static_cast<std::size_t>(r)]);

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
  const Eigen::Index rank = qr.rank();
  if (rank == 0) return 0.0;
  const Eigen::VectorXd rotated = qr.householderQ().adjoint() * target;
  const double ratio = rotated.head(rank).norm() / target.norm();
  return std::min(ratio, 1.0);
}

template <class T>
double plr(std::span<const T> a, const BasicEmbeddingSet<T>& set, std::size_t k) {
  if (detail::norm_of(a) == 0.0) throw ZeroNormError("PLR of a zero-norm embedding");
  const auto top = top_k_similar(a, set, k);
  return projection_ratio(a, set, std::span<const std::size_t>(top));
}

/// Mean PLR of each row of `explained` by the rows of `basis`.
template <class T>
double mean_plr(const BasicEmbeddingSet<T>& explained, const BasicEmbeddingSet<T>& basis,
                std::size_t k) {
  if (explained.empty() || basis.empty()) throw InvalidArgument("CLIP metric over an empty set");
  if (explained.dim() != basis.dim()) throw InvalidArgument("embedding dimensions differ");
  double total = 0.0;
  for (std::size_t i = 0; i < explained.size(); ++i) total += plr(explained[i], basis, k);
  return total / static_cast<double>(explained.size());
}

/// How much of the image partitions the caption partitions explain.
template <class T>
double clip_recall(const BasicEmbeddingSet<T>& image, const BasicEmbeddingSet<T>& caption,
                   std::size_t k) {
  return mean_plr(image, caption, k);
}

/// How much of the caption partitions the image partitions explain,
/// averaged over the caption partitions.
template <class T>
double clip_precision(const BasicEmbeddingSet<T>& image, const BasicEmbeddingSet<T>& caption,
                      std::size_t k) {
  return mean_plr(caption, image, k);
}

inline double clip_f1(double recall, double precision) {
  if (recall < 0.0 || recall > 1.0 || precision < 0.0 || precision > 1.0)
    throw InvalidArgument("clip_f1 inputs must lie in [0, 1]");
  const double sum = recall + precision;
  return sum == 0.0 ? 0.0 : 2.0 * recall * precision / sum;
}

struct MetricRow {
  int k = 0;
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

struct PartitionScore {
  int k = 0;
  Modality modality = Modality::image;
  std::string id;
  double plr = 0.0;
  friend bool operator==(const PartitionScore&, const PartitionScore&) = default;
};

struct MetricReport {
  std::vector<MetricRow> rows;              // ascending k
  std::vector<PartitionScore> partitions;   // per k: image entries then caption entries

  const MetricRow* row(int k) const {
    for (const auto& r : rows)
      if (r.k == k) return &r;
    return nullptr;
  }
  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

inline const std::vector<int>& default_ks() {
  static const std::vector<int> ks{3, 5, 10};
  return ks;
}

/// Per-k metric set for one item. `manifest` selects and labels the rows of
/// both embedding sets; it must validate against them.
template <class T>
MetricReport evaluate(const BasicEmbeddingSet<T>& image_set, const BasicEmbeddingSet<T>& caption_set,
                      const PartitionManifest& manifest, std::vector<int> ks = default_ks()) {
  auto violations = validate_manifest(manifest, std::nullopt, {image_set.size(), caption_set.size()});
  if (manifest.dim && !image_set.empty() && image_set.dim() != *manifest.dim)
    violations.push_back("image embeddings have dim " + std::to_string(image_set.dim()) +
                         ", manifest declares " + std::to_string(*manifest.dim));
  if (manifest.dim && !caption_set.empty() && caption_set.dim() != *manifest.dim)
    violations.push_back("caption embeddings have dim " + std::to_string(caption_set.dim()) +
                         ", manifest declares " + std::to_string(*manifest.dim));
  if (!violations.empty()) throw ValidationError("manifest does not match embeddings", violations);
  if (image_set.dim() != caption_set.dim()) throw InvalidArgument("embedding dimensions differ");

  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (ks.empty() || ks.front() < 1) throw InvalidArgument("k values must be >= 1");

  const auto image_entries = manifest.of(Modality::image);
  const auto caption_entries = manifest.of(Modality::caption);
  std::vector<std::size_t> image_rows, caption_rows;
  for (const auto* e : image_entries) image_rows.push_back(e->embedding_index);
  for (const auto* e : caption_entries) caption_rows.push_back(e->embedding_index);
  const auto image = image_set.subset(image_rows);
  const auto caption = caption_set.subset(caption_rows);

  MetricReport report;
  for (int k : ks) {
    const auto kk = static_cast<std::size_t>(k);
    double recall_sum = 0.0, precision_sum = 0.0;
    for (std::size_t i = 0; i < image.size(); ++i) {
      const double v = plr(image[i], caption, kk);
      recall_sum += v;
      report.partitions.push_back({k, Modality::image, image_entries[i]->id, v});
    }
    for (std::size_t i = 0; i < caption.size(); ++i) {
      const double v = plr(caption[i], image, kk);
      precision_sum += v;
      report.partitions.push_back({k, Modality::caption, caption_entries[i]->id, v});
    }
    const double recall = recall_sum / static_cast<double>(image.size());
    const double precision = precision_sum / static_cast<double>(caption.size());
    report.rows.push_back({k, recall, precision, clip_f1(recall, precision)});
  }
  return report;
}

}  // namespace dbd
