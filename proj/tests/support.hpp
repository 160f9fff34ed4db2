#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "dbd/dbd.hpp"

namespace dbdtest {

using namespace dbd;

inline std::vector<double> uniform_row(std::uint32_t v) { return std::vector<double>(v, -std::log(double(v))); }

/// Probabilities -> logprobs.
inline std::vector<double> log_row(std::vector<double> p) {
  for (double& x : p) x = std::log(x);
  return p;
}

/// Order-0 toy spec with the given next-token probabilities and 2-d hiddens.
inline ToyModelSpec unigram_spec(std::vector<double> probs, std::uint32_t eos,
                                 std::vector<HiddenVector> hidden = {}) {
  ToyModelSpec s;
  s.vocab_size = static_cast<std::uint32_t>(probs.size());
  s.eos = TokenId{eos};
  s.order = 0;
  s.hidden_dim = hidden.empty() ? 2 : hidden.front().size();
  if (hidden.empty())
    for (std::uint32_t t = 0; t < s.vocab_size; ++t)
      hidden.push_back({std::cos(0.3 * t + 0.1), std::sin(0.3 * t + 0.1)});
  s.hidden = std::move(hidden);
  s.default_logprobs = log_row(std::move(probs));
  return s;
}

/// Minimal model that echoes its prompt byte by byte, then stops. Used to
/// check that summarization really decodes through the model interface.
class EchoModel final : public Model {
 public:
  static constexpr std::uint32_t kEos = 256;

  PromptContext open(const std::string& prompt, const std::string&) override {
    prompts_.push_back(prompt);
    PromptContext ctx{prompts_.size(), info()};
    return ctx;
  }

  Expansion expand(const PromptContext& ctx, const Candidate& c, std::size_t k) const override {
    if (c.context() != ctx.id) throw ContextMismatch("echo: foreign candidate");
    const std::string& p = prompts_.at(ctx.id - 1);
    const std::uint32_t next = c.size() < p.size() ? static_cast<unsigned char>(p[c.size()]) : kEos;
    Expansion e{{TokenId{next}, 0.0, hidden_for(next)}};
    for (std::uint32_t t = 0; e.size() < k && t <= kEos; ++t)
      if (t != next) e.push_back({TokenId{t}, -50.0, hidden_for(t)});
    return e;
  }

  std::string detokenize(std::span<const TokenId> tokens) const override {
    std::string s;
    for (TokenId t : tokens)
      if (t.value < kEos) s += static_cast<char>(t.value);
    return s;
  }

  static ModelInfo info() { return ModelInfo{kEos + 1, TokenId{kEos}, 2, false, true}; }
  const std::vector<std::string>& prompts() const { return prompts_; }

 private:
  static HiddenVector hidden_for(std::uint32_t t) { return {1.0 + t, 1.0}; }
  std::vector<std::string> prompts_;
};

/// Candidate with explicit per-token logprobs and hiddens.
inline Candidate make_candidate(const std::vector<HiddenVector>& hiddens, std::vector<double> logprobs = {},
                                bool finished = false, std::uint64_t context = 1) {
  std::vector<TokenId> tokens;
  for (std::size_t i = 0; i < hiddens.size(); ++i) tokens.push_back(TokenId{static_cast<std::uint32_t>(i)});
  if (logprobs.empty()) logprobs.assign(hiddens.size(), -0.1);
  return Candidate::from_parts(context, tokens, logprobs, hiddens, finished);
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dbd_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace dbdtest
