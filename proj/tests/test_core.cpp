#include <gtest/gtest.h>

#include <random>

#include "dbd/testing/oracles.hpp"
#include "support.hpp"

using namespace dbdtest;

namespace {

PartitionManifest two_sided() {
  PartitionManifest m;
  m.item_id = "img1";
  m.image = ImageDims{640, 480};
  m.entries.push_back({"full", Modality::image, PartitionKind::full, BBox{0, 0, 640, 480}, {}, 0});
  m.entries.push_back({"region:a", Modality::image, PartitionKind::region, BBox{10, 10, 100, 50}, {}, 1});
  m.entries.push_back({"sentence:0", Modality::caption, PartitionKind::sentence, {}, CharSpan{0, 6}, 0});
  m.entries.push_back({"full", Modality::caption, PartitionKind::full, {}, CharSpan{0, 13}, 1});
  return m;
}

}  // namespace

TEST(Manifest, ValidManifestHasNoViolations) {
  EXPECT_TRUE(validate_manifest(two_sided(), std::nullopt, {2, 2}).empty());
}

TEST(Manifest, FullImageBoxEqualToImageDimsIsValid) {
  PartitionManifest m;
  m.entries.push_back({"full", Modality::image, PartitionKind::full, BBox{0, 0, 320, 200}, {}, 0});
  EXPECT_TRUE(validate_manifest(m, ImageDims{320, 200}, {1, std::nullopt}).empty());
}

TEST(Manifest, DuplicateEmbeddingIndexNamesBothEntries) {
  auto m = two_sided();
  m.entries.push_back({"region:b", Modality::image, PartitionKind::region, BBox{0, 0, 5, 5}, {}, 3});
  m.entries.push_back({"object:c", Modality::image, PartitionKind::object, BBox{0, 0, 6, 6}, {}, 3});
  const auto v = validate_manifest(m, std::nullopt, {4, 2});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("region:b"), std::string::npos);
  EXPECT_NE(v[0].find("object:c"), std::string::npos);
}

TEST(Manifest, MissingCaptionFullEntry) {
  auto m = two_sided();
  m.entries.pop_back();
  const auto v = validate_manifest(m, std::nullopt, {2, 1});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("caption"), std::string::npos);
}

TEST(Manifest, OtherRules) {
  auto m = two_sided();
  m.entries[1].bbox = BBox{600, 0, 100, 10};  // spills past the right edge
  m.entries[2].span.reset();
  m.entries.push_back({"bad", Modality::caption, PartitionKind::object, {}, CharSpan{0, 1}, 7});
  const auto v = validate_manifest(m, std::nullopt, {2, 2});
  EXPECT_EQ(v.size(), 4u);  // bounds, missing span, wrong kind, index out of range
}

TEST(Candidate, IncrementalMeanMatchesRecomputation) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = dbd::testing::random_candidate(rng, 1 + trial % 20, 1 + trial % 9);
    const auto fresh = c.recompute_norm_mean();
    ASSERT_EQ(fresh.size(), c.norm_mean().size());
    for (std::size_t i = 0; i < fresh.size(); ++i) EXPECT_NEAR(fresh[i], c.norm_mean()[i], 1e-9);
  }
}

TEST(Candidate, ExtendKeepsValueSemantics) {
  const Candidate base = Candidate::empty(3, 2);
  const Candidate one = base.extended(TokenId{4}, -0.5, {3, 4}, TokenId{9});
  EXPECT_TRUE(base.empty());
  EXPECT_EQ(one.size(), 1u);
  EXPECT_EQ(one.context(), 3u);
  EXPECT_DOUBLE_EQ(one.logprob(), -0.5);
  EXPECT_DOUBLE_EQ(one.norm_mean()[0], 0.6);
  EXPECT_DOUBLE_EQ(one.norm_mean()[1], 0.8);
  EXPECT_FALSE(one.finished());
  const Candidate done = one.extended(TokenId{9}, -1.0, {1, 0}, TokenId{9});
  EXPECT_TRUE(done.finished());
  EXPECT_EQ(done.content_tokens(), std::vector<TokenId>{TokenId{4}});
  EXPECT_THROW(done.extended(TokenId{1}, -1.0, {1, 0}, TokenId{9}), InvalidArgument);
}

TEST(Candidate, RejectsBadAppends) {
  const Candidate c = Candidate::empty(1, 2);
  EXPECT_THROW(c.extended(TokenId{0}, 0.1, {1, 0}, TokenId{9}), InvalidArgument);
  EXPECT_THROW(c.extended(TokenId{0}, std::nan(""), {1, 0}, TokenId{9}), InvalidArgument);
  EXPECT_THROW(c.extended(TokenId{0}, -1, {1, 0, 0}, TokenId{9}), InvalidArgument);
  EXPECT_THROW(c.extended(TokenId{0}, -1, {INFINITY, 0}, TokenId{9}), InvalidArgument);
}

TEST(Candidate, ZeroNormHiddenIsFlagged) {
  const Candidate c = Candidate::empty(1, 2).extended(TokenId{0}, -1, {0, 0}, TokenId{9});
  EXPECT_TRUE(c.has_zero_norm_hidden());
}

TEST(Candidate, FromPartsChecksStoredMean) {
  const std::vector<HiddenVector> h{{1, 0}, {0, 2}};
  EXPECT_NO_THROW(Candidate::from_parts(1, {TokenId{1}, TokenId{2}}, {-1, -1}, h, false, HiddenVector{0.5, 0.5}));
  EXPECT_THROW(Candidate::from_parts(1, {TokenId{1}, TokenId{2}}, {-1, -1}, h, false, HiddenVector{0.5, 0.4}),
               ValidationError);
  EXPECT_THROW(Candidate::from_parts(1, {TokenId{1}}, {-1, -1}, h, false), ValidationError);
}

TEST(Config, Validation) {
  EXPECT_TRUE(validate(SearchConfig{}).empty());
  SearchConfig bad;
  bad.beams = 0;
  bad.top_k = 0;
  bad.alpha_schedule = {{std::nullopt, 1.0}, {3, -1.0}};
  EXPECT_EQ(validate(bad).size(), 4u);
  EXPECT_TRUE(validate(SelectionConfig{}).empty());
  EXPECT_EQ(validate(SelectionConfig{-1.0, 0}).size(), 2u);
}
