#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace dbdtest;

namespace {

// 4-token order-1 spec: token 3 is eos.
ToyModelSpec four_token_spec() {
  ToyModelSpec s;
  s.vocab_size = 4;
  s.eos = TokenId{3};
  s.order = 1;
  s.hidden_dim = 2;
  s.hidden = {{1, 0}, {0, 1}, {1, 1}, {-1, 0}};
  s.transitions.push_back({{std::nullopt}, log_row({0.5, 0.3, 0.15, 0.05})});
  s.transitions.push_back({{TokenId{0}}, log_row({0.1, 0.6, 0.2, 0.1})});
  s.transitions.push_back({{TokenId{1}}, log_row({0.2, 0.1, 0.3, 0.4})});
  s.transitions.push_back({{TokenId{2}}, log_row({0.25, 0.25, 0.25, 0.25})});
  s.transitions.push_back({{TokenId{3}}, log_row({0.25, 0.25, 0.25, 0.25})});
  s.words = {"red", "ball", "grass", "</s>"};
  return s;
}

}  // namespace

TEST(ToyModel, FullWidthExpansionIsSortedAndExhaustive) {
  ToyModel m(four_token_spec());
  const auto ctx = m.open("p", "");
  const auto e = m.expand(ctx, Candidate::empty(ctx.id, 2), 4);
  ASSERT_EQ(e.size(), 4u);
  EXPECT_EQ(e[0].token, TokenId{0});
  EXPECT_EQ(e[1].token, TokenId{1});
  EXPECT_EQ(e[2].token, TokenId{2});
  EXPECT_EQ(e[3].token, TokenId{3});
  double mass = 0.0;
  for (const auto& item : e) mass += std::exp(item.logprob);
  EXPECT_NEAR(mass, 1.0, 1e-9);
  EXPECT_NO_THROW(check_expansion(e, 4, ctx.info));
}

TEST(ToyModel, UniformTiesBreakByAscendingId) {
  ToyModelSpec s = unigram_spec({0.25, 0.25, 0.25, 0.25}, 3);
  ToyModel m(s);
  const auto ctx = m.open("", "");
  const auto e = m.expand(ctx, Candidate::empty(ctx.id, 2), 3);
  ASSERT_EQ(e.size(), 3u);
  for (std::uint32_t i = 0; i < 3; ++i) {
    EXPECT_EQ(e[i].token, TokenId{i});
    EXPECT_NEAR(e[i].logprob, -std::log(4.0), 1e-15);
    EXPECT_EQ(e[i].hidden, s.hidden[i]);
  }
}

TEST(ToyModel, ExpansionIsDeterministic) {
  ToyModel m(four_token_spec());
  const auto ctx = m.open("", "");
  const auto c = Candidate::empty(ctx.id, 2).extended(TokenId{0}, std::log(0.5), {1, 0}, TokenId{3});
  EXPECT_EQ(m.expand(ctx, c, 3), m.expand(ctx, c, 3));
  EXPECT_EQ(json(m.expand(ctx, c, 3)[0].hidden).dump(), json(m.expand(ctx, c, 3)[0].hidden).dump());
}

TEST(ToyModel, KOneIsArgmax) {
  const auto spec = random_toy_spec(5, {24, 2, 6, 2.0, 0.0});
  ToyModel m(spec);
  const auto ctx = m.open("", "");
  Candidate c = Candidate::empty(ctx.id, spec.hidden_dim);
  for (int step = 0; step < 6 && !c.finished(); ++step) {
    const auto& row = m.distribution(c.tokens());
    const auto best = static_cast<std::uint32_t>(std::max_element(row.begin(), row.end()) - row.begin());
    const auto e = m.expand(ctx, c, 1);
    ASSERT_EQ(e.size(), 1u);
    EXPECT_EQ(e[0].token, TokenId{best});
    c = c.extended(e[0].token, e[0].logprob, e[0].hidden, spec.eos);
  }
}

TEST(ToyModel, ForeignContextIsRejected) {
  ToyModel m(four_token_spec());
  const auto a = m.open("a", "");
  const auto b = m.open("b", "");
  EXPECT_NE(a.id, b.id);
  EXPECT_THROW(m.expand(b, Candidate::empty(a.id, 2), 2), ContextMismatch);
}

TEST(ToyModel, RejectsFinishedAndOutOfVocab) {
  ToyModel m(four_token_spec());
  const auto ctx = m.open("", "");
  const auto done = Candidate::empty(ctx.id, 2).extended(TokenId{3}, -1, {-1, 0}, TokenId{3});
  EXPECT_THROW(m.expand(ctx, done, 1), InvalidArgument);
  const auto odd = Candidate::empty(ctx.id, 2).extended(TokenId{7}, -1, {1, 0}, TokenId{3});
  EXPECT_THROW(m.expand(ctx, odd, 1), InvalidArgument);
  EXPECT_THROW(m.detokenize(std::vector<TokenId>{TokenId{9}}), InvalidArgument);
}

TEST(ToyModel, InvalidSpecsListViolations) {
  auto s = four_token_spec();
  s.transitions[0].logprobs[0] = std::log(0.6);  // mass 1.1
  s.hidden[2] = {0, 0};
  try {
    ToyModel m(s);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.violations().size(), 2u);
  }
  auto missing = four_token_spec();
  missing.transitions.pop_back();
  EXPECT_THROW(ToyModel{missing}, ValidationError);
}

TEST(ToyModel, Detokenize) {
  ToyModel m(four_token_spec());
  EXPECT_EQ(m.detokenize(std::vector<TokenId>{TokenId{0}, TokenId{1}, TokenId{3}}), "red ball");
  ToyModel plain(unigram_spec({0.5, 0.5}, 1));
  EXPECT_EQ(plain.detokenize(std::vector<TokenId>{TokenId{0}, TokenId{0}}), "w0 w0");
}

TEST(SequenceLogprob, EmptyIsZero) { EXPECT_EQ(sequence_logprob(Candidate::empty(1, 2)), 0.0); }

TEST(SequenceLogprob, Additive) {
  const auto c = Candidate::empty(1, 2)
                     .extended(TokenId{0}, -0.5, {1, 0}, TokenId{9})
                     .extended(TokenId{1}, -1.0, {0, 1}, TokenId{9});
  EXPECT_EQ(sequence_logprob(c), -1.5);
  EXPECT_EQ(c.logprob(), -1.5);
}

TEST(SequenceLogprob, ToyChainMatchesTableRescoring) {
  const auto spec = four_token_spec();
  ToyModel m(spec);
  const auto ctx = m.open("", "");
  Candidate c = Candidate::empty(ctx.id, 2);
  const std::vector<std::uint32_t> path{0, 1, 2, 0, 3};
  for (auto t : path) {
    const auto e = m.expand(ctx, c, 4);
    const auto it = std::find_if(e.begin(), e.end(), [&](const ExpansionItem& x) { return x.token.value == t; });
    c = c.extended(it->token, it->logprob, it->hidden, spec.eos);
  }
  // Re-score straight from the transition rows, previous token as context.
  double expected = 0.0;
  std::optional<TokenId> prev;
  for (auto t : path) {
    for (const auto& row : spec.transitions)
      if (row.context.front() == prev) expected += row.logprobs[t];
    prev = TokenId{t};
  }
  EXPECT_EQ(sequence_logprob(c), expected);
  EXPECT_EQ(c.logprob(), expected);
}

TEST(GreedyDecode, StopsAtEosOrLimit) {
  ToyModel m(four_token_spec());
  const auto ctx = m.open("", "");
  const auto g = greedy_decode(m, ctx, 10);
  // 0 -> 1 -> 3(eos)
  EXPECT_EQ(g.tokens(), (std::vector<TokenId>{TokenId{0}, TokenId{1}, TokenId{3}}));
  EXPECT_TRUE(g.finished());
  EXPECT_EQ(greedy_decode(m, ctx, 2).size(), 2u);
}

TEST(CheckExpansion, CatchesContractBreaks) {
  const ModelInfo info{4, TokenId{3}, 2, false, false};
  Expansion good{{TokenId{1}, -0.5, {1, 0}}, {TokenId{0}, -0.9, {0, 1}}};
  EXPECT_NO_THROW(check_expansion(good, 2, info));
  EXPECT_THROW(check_expansion(good, 3, info), ModelError);
  Expansion unsorted{{TokenId{1}, -0.9, {1, 0}}, {TokenId{0}, -0.5, {0, 1}}};
  EXPECT_THROW(check_expansion(unsorted, 2, info), ModelError);
  Expansion tie_wrong{{TokenId{1}, -0.5, {1, 0}}, {TokenId{0}, -0.5, {0, 1}}};
  EXPECT_THROW(check_expansion(tie_wrong, 2, info), ModelError);
  Expansion width{{TokenId{1}, -0.5, {1, 0, 0}}};
  EXPECT_THROW(check_expansion(width, 1, info), ModelError);
}
