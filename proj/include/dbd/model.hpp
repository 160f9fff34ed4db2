#pragma once

// Contract between the search and a generative model.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dbd/core.hpp"

namespace dbd {

struct ExpansionItem {
  TokenId token;
  double logprob = 0.0;
  HiddenVector hidden;
  friend bool operator==(const ExpansionItem&, const ExpansionItem&) = default;
};

/// Top-K next tokens, logprob descending, ties by ascending token id.
using Expansion = std::vector<ExpansionItem>;

struct ModelInfo {
  std::uint32_t vocab_size = 0;
  TokenId eos;
  std::size_t hidden_dim = 0;
  bool concurrent = false;    // expand may be called from several threads
  bool long_context = false;  // can condition on a summarization prompt
  friend bool operator==(const ModelInfo&, const ModelInfo&) = default;
};

/// A prompt (plus image) the model has been primed with.
struct PromptContext {
  std::uint64_t id = 0;
  ModelInfo info;
};

class Model {
 public:
  virtual ~Model() = default;

  virtual PromptContext open(const std::string& prompt, const std::string& image_path) = 0;

  /// Top-`k` continuations of `candidate` under `context`, each with the
  /// hidden state the appended token would receive. Deterministic.
  virtual Expansion expand(const PromptContext& context, const Candidate& candidate,
                           std::size_t k) const = 0;

  virtual std::string detokenize(std::span<const TokenId> tokens) const = 0;
};

/// Sentence log-likelihood: the left-to-right sum of per-token logprobs.
inline double sequence_logprob(const Candidate& candidate) {
  double total = 0.0;
  for (double lp : candidate.token_logprobs()) total += lp;
  return total;
}

/// Checks the ordering and shape contract of an expansion.
inline void check_expansion(const Expansion& expansion, std::size_t k, const ModelInfo& info) {
  const std::size_t expected = std::min<std::size_t>(k, info.vocab_size);
  if (expansion.size() != expected)
    throw ModelError("bad-expansion", "expected " + std::to_string(expected) + " items, got " +
                                          std::to_string(expansion.size()));
  for (std::size_t i = 0; i < expansion.size(); ++i) {
    const auto& item = expansion[i];
    if (item.token.value >= info.vocab_size)
      throw ModelError("bad-expansion", "token id out of vocabulary");
    if (!(item.logprob <= 0.0)) throw ModelError("bad-expansion", "logprob above zero");
    if (item.hidden.size() != info.hidden_dim)
      throw ModelError("bad-expansion", "hidden width mismatch");
    if (i > 0) {
      const auto& prev = expansion[i - 1];
      if (prev.logprob < item.logprob ||
          (prev.logprob == item.logprob && !(prev.token < item.token)))
        throw ModelError("bad-expansion", "items not sorted by logprob desc, token asc");
    }
  }
}

/// Greedy decoding through the model interface: repeatedly append the
/// argmax token until end-of-sequence or `max_tokens`.
inline Candidate greedy_decode(const Model& model, const PromptContext& context,
                               std::size_t max_tokens) {
  Candidate c = Candidate::empty(context.id, context.info.hidden_dim);
  while (!c.finished() && c.size() < max_tokens) {
    Expansion e = model.expand(context, c, 1);
    if (e.empty()) break;
    c = c.extended(e.front().token, e.front().logprob, std::move(e.front().hidden),
                   context.info.eos);
  }
  return c;
}

}  // namespace dbd
