#include <gtest/gtest.h>

#include "support.hpp"

using namespace dbdtest;

TEST(AlphaFlag, TwoPhase) {
  const auto s = parse_alpha_schedule("10:3,5");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0], (AlphaSegment{3, 10.0}));
  EXPECT_EQ(s[1], (AlphaSegment{std::nullopt, 5.0}));
  EXPECT_EQ(format_alpha_schedule(s), "10:3,5");
}

TEST(AlphaFlag, ConstantAndMultiSegment) {
  EXPECT_EQ(parse_alpha_schedule("4"), (AlphaSchedule{{std::nullopt, 4.0}}));
  const auto s = parse_alpha_schedule("8:2,4.5:6,0.25");
  EXPECT_EQ(s.size(), 3u);
  EXPECT_EQ(format_alpha_schedule(s), "8:2,4.5:6,0.25");
  EXPECT_EQ(parse_alpha_schedule(format_alpha_schedule(s)), s);
}

TEST(AlphaFlag, Rejects) {
  for (const char* bad : {"", "10:3", "x", "10:3,", "10:a,5", "10:3,5:2,1", "-1", "10:0,5", "5,4"})
    EXPECT_THROW(parse_alpha_schedule(bad), ValidationError) << "'" << bad << "'";
}

TEST(Profiles, PublishedValues) {
  const auto llava = find_profile("llava-1.5");
  ASSERT_TRUE(llava);
  EXPECT_EQ(llava->search.beams, 5);
  EXPECT_EQ(llava->search.top_k, 6);
  EXPECT_EQ(llava->search.alpha_schedule, parse_alpha_schedule("10:3,5"));
  EXPECT_EQ(llava->selection, (SelectionConfig{5.0, 10}));
  EXPECT_FALSE(llava->direct_fact_suffix);

  const auto mini = find_profile("minigpt-4");
  ASSERT_TRUE(mini);
  EXPECT_EQ(mini->search.beams, 7);
  EXPECT_EQ(mini->search.top_k, 7);
  EXPECT_EQ(mini->search.alpha_schedule, parse_alpha_schedule("4"));
  EXPECT_EQ(mini->selection, (SelectionConfig{5.0, 10}));
  EXPECT_TRUE(mini->direct_fact_suffix);

  EXPECT_TRUE(find_profile("mplug-owl2"));
  EXPECT_FALSE(find_profile("gpt"));
  EXPECT_EQ(SearchConfig{}.alpha_schedule, llava->search.alpha_schedule);
}
