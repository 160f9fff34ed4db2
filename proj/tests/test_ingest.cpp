#include <gtest/gtest.h>

#include "support.hpp"

using namespace dbdtest;

namespace {

std::vector<std::string> texts(const std::vector<CaptionSegment>& s) {
  std::vector<std::string> out;
  for (const auto& x : s) out.push_back(x.text);
  return out;
}

AnnotatedBox box(std::string id, BBox b, std::vector<std::string> names = {}) {
  return {std::move(id), b, std::move(names), {}};
}

}  // namespace

TEST(SegmentCaption, TwoSentences) {
  const auto s = segment_caption("A man. A dog.");
  EXPECT_EQ(texts(s), (std::vector<std::string>{"A man.", "A dog.", "A man. A dog."}));
  EXPECT_EQ(s.back().kind, PartitionKind::full);
  EXPECT_EQ(s[1].span, (CharSpan{7, 13}));
}

TEST(SegmentCaption, NoTerminator) {
  EXPECT_EQ(texts(segment_caption("Hello")), (std::vector<std::string>{"Hello", "Hello"}));
}

TEST(SegmentCaption, QuestionAndExclamation) {
  const auto s = segment_caption("Is it red? Yes!");
  EXPECT_EQ(texts(s), (std::vector<std::string>{"Is it red?", "Yes!", "Is it red? Yes!"}));
}

TEST(SegmentCaption, TerminatorInsideTokenDoesNotSplit) {
  EXPECT_EQ(texts(segment_caption("Price 3.50 today.  Ok")),
            (std::vector<std::string>{"Price 3.50 today.", "Ok", "Price 3.50 today.  Ok"}));
  EXPECT_THROW(segment_caption("   "), InvalidArgument);
}

TEST(SegmentCaption, SpansAreOrderedAndReconstructTheText) {
  const std::string text = "  One dog runs.\tTwo cats sit!  Three birds?\nFour.  ";
  const auto s = segment_caption(text);
  ASSERT_EQ(s.size(), 5u);
  std::string rebuilt;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    EXPECT_EQ(text.substr(s[i].span.start, s[i].span.end - s[i].span.start), s[i].text);
    if (i > 0) {
      EXPECT_GE(s[i].span.start, s[i - 1].span.end);
      rebuilt += text.substr(s[i - 1].span.end, s[i].span.start - s[i - 1].span.end);
    }
    rebuilt += s[i].text;
  }
  EXPECT_EQ(rebuilt, s.back().text);
}

TEST(CaptionPartitions, IdsAndIndices) {
  const auto m = caption_partitions("A man. A dog.", "x");
  ASSERT_EQ(m.entries.size(), 3u);
  EXPECT_EQ(m.entries[0].id, "sentence:0");
  EXPECT_EQ(m.entries[2].id, "full");
  EXPECT_EQ(m.entries[2].embedding_index, 2u);
  EXPECT_TRUE(validate_manifest(m, std::nullopt, {std::nullopt, 3}).empty());
}

TEST(BuildPartitions, NoRegionsGivesOnlyFullImage) {
  const RegionAnnotation a{"i", 100, 50, {}, {}};
  const auto m = build_partitions(a);
  ASSERT_EQ(m.entries.size(), 1u);
  EXPECT_EQ(m.entries[0].kind, PartitionKind::full);
  EXPECT_EQ(*m.entries[0].bbox, (BBox{0, 0, 100, 50}));
}

TEST(BuildPartitions, OrderIsRegionsObjectsFull) {
  const RegionAnnotation a{"i", 100, 50,
                           {box("r1", {0, 0, 10, 10}), box("r2", {5, 5, 20, 20})},
                           {box("o1", {1, 1, 3, 3}, {"cup"})}};
  const auto m = build_partitions(a);
  ASSERT_EQ(m.entries.size(), 4u);
  const std::vector<std::string> ids{"region:r1", "region:r2", "object:o1", "full"};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(m.entries[i].id, ids[i]);
    EXPECT_EQ(m.entries[i].embedding_index, i);
  }
  EXPECT_EQ(build_partitions(a), m);
  EXPECT_TRUE(validate_manifest(m, std::nullopt, {4, std::nullopt}).empty());
}

TEST(BuildPartitions, RejectsOutOfBoundsBox) {
  const RegionAnnotation a{"i", 100, 50, {box("r1", {90, 0, 20, 10})}, {}};
  EXPECT_THROW(build_partitions(a), ValidationError);
  const RegionAnnotation unnamed{"i", 100, 50, {}, {box("o", {0, 0, 1, 1})}};
  EXPECT_THROW(build_partitions(unnamed), ValidationError);
}

TEST(Words, Normalization) {
  EXPECT_EQ(normalize_word("Dogs,"), "dog");
  EXPECT_EQ(normalize_word("(Grass)"), "gras");  // naive plural rule strips one s
  EXPECT_EQ(normalize_word("s"), "s");
  EXPECT_EQ(split_words("  a  b\tc\n"), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(PositionProfile, FirstWordFullImage) {
  const RegionAnnotation a{"i", 10, 10, {}, {box("o", {0, 0, 10, 10}, {"tree"})}};
  const auto bins = position_size_profile({"Tree in a field"}, {a}, 10);
  ASSERT_EQ(bins.size(), 10u);
  EXPECT_EQ(bins[0].count, 1u);
  EXPECT_DOUBLE_EQ(bins[0].mean_area, 1.0);
  for (std::size_t b = 1; b < 10; ++b) {
    EXPECT_EQ(bins[b].count, 0u);
    EXPECT_EQ(bins[b].mean_area, 0.0);
  }
}

TEST(PositionProfile, QuarterAreaAndSharedNames) {
  const RegionAnnotation a{"i", 20, 20, {},
                           {box("o1", {0, 0, 10, 10}, {"cat"}), box("o2", {0, 0, 20, 10}, {"cat"}),
                            box("o3", {0, 0, 10, 10}, {"red ball"})}};
  // cat: mean(0.25, 0.5) = 0.375 at position 1/4; "red ball" matches at 2/4 -> 0.25
  const auto bins = position_size_profile({"two cats, red balls"}, {a}, 4);
  EXPECT_EQ(bins[1].count, 1u);
  EXPECT_DOUBLE_EQ(bins[1].mean_area, 0.375);
  EXPECT_EQ(bins[2].count, 1u);
  EXPECT_DOUBLE_EQ(bins[2].mean_area, 0.25);
  EXPECT_EQ(bins[0].count + bins[3].count, 0u);
}

TEST(PositionProfile, PlantedTrendIsStrictlyDecreasing) {
  // ten-word captions; object word i sits at position i/10 with area fraction (10 - i)/10
  std::vector<std::string> captions;
  std::vector<RegionAnnotation> annotations;
  const std::vector<std::string> names{"tree", "house", "car", "dog", "bench", "lamp", "cup", "key", "coin", "ant"};
  for (int rep = 0; rep < 3; ++rep) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      std::vector<std::string> words(10, "the");
      words[i] = names[i];
      std::string caption;
      for (const auto& w : words) caption += (caption.empty() ? "" : " ") + w;
      captions.push_back(caption);
      const double side = std::sqrt((10.0 - static_cast<double>(i)) / 10.0) * 100.0;
      annotations.push_back({"img", 100, 100, {}, {box("o", {0, 0, side, side}, {names[i]})}});
    }
  }
  const auto bins = position_size_profile(captions, annotations, 10);
  for (std::size_t b = 1; b < bins.size(); ++b) EXPECT_LT(bins[b].mean_area, bins[b - 1].mean_area);
  EXPECT_THROW(position_size_profile(captions, annotations, 0), InvalidArgument);
}
