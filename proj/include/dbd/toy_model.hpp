#pragma once

// Deterministic in-process model backed by an explicit transition table.
// Next-token distributions condition on the last `order` tokens (0, 1 or 2);
// every token has one fixed hidden vector.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dbd/core.hpp"
#include "dbd/model.hpp"

namespace dbd {

/// A context slot; nullopt marks "before the first generated token".
using ToyContextToken = std::optional<TokenId>;

struct ToyTransition {
  std::vector<ToyContextToken> context;  // oldest first, length == order
  std::vector<double> logprobs;          // one per vocabulary entry
  friend bool operator==(const ToyTransition&, const ToyTransition&) = default;
};

struct ToyModelSpec {
  std::uint32_t vocab_size = 0;
  TokenId eos;
  int order = 1;
  std::size_t hidden_dim = 0;
  std::vector<HiddenVector> hidden;                  // indexed by token id
  std::optional<std::vector<double>> default_logprobs;  // rows not listed
  std::vector<ToyTransition> transitions;
  std::vector<std::string> words;                    // optional surface forms
  bool long_context = false;
  friend bool operator==(const ToyModelSpec&, const ToyModelSpec&) = default;
};

namespace detail {

inline std::string check_distribution(std::span<const double> logprobs, std::uint32_t vocab) {
  if (logprobs.size() != vocab)
    return "has " + std::to_string(logprobs.size()) + " entries, expected " + std::to_string(vocab);
  double mass = 0.0;
  for (double lp : logprobs) {
    if (!std::isfinite(lp) || lp > 0.0) return "contains a non-finite or positive logprob";
    mass += std::exp(lp);
  }
  if (std::abs(mass - 1.0) > 1e-9) return "probabilities sum to " + std::to_string(mass);
  return {};
}

}  // namespace detail

/// Lists every violated invariant of a toy spec (empty when valid).
inline std::vector<std::string> validate_toy_spec(const ToyModelSpec& spec) {
  std::vector<std::string> out;
  if (spec.vocab_size == 0) out.emplace_back("vocab_size must be positive");
  if (spec.order < 0 || spec.order > 2) out.emplace_back("order must be 0, 1 or 2");
  if (spec.eos.value >= spec.vocab_size) out.emplace_back("eos token outside vocabulary");
  if (spec.hidden_dim == 0) out.emplace_back("hidden_dim must be positive");
  if (spec.hidden.size() != spec.vocab_size)
    out.push_back("hidden table has " + std::to_string(spec.hidden.size()) + " rows, expected " +
                  std::to_string(spec.vocab_size));
  for (std::size_t t = 0; t < spec.hidden.size(); ++t) {
    const auto& h = spec.hidden[t];
    if (h.size() != spec.hidden_dim)
      out.push_back("hidden[" + std::to_string(t) + "] has the wrong width");
    else if (!detail::all_finite(h) || detail::squared_norm(h) == 0.0)
      out.push_back("hidden[" + std::to_string(t) + "] is zero or non-finite");
  }
  if (!spec.words.empty() && spec.words.size() != spec.vocab_size)
    out.emplace_back("words table size differs from vocab_size");
  if (spec.default_logprobs) {
    auto msg = detail::check_distribution(*spec.default_logprobs, spec.vocab_size);
    if (!msg.empty()) out.push_back("default distribution " + msg);
  }
  for (std::size_t r = 0; r < spec.transitions.size(); ++r) {
    const auto& row = spec.transitions[r];
    const std::string name = "transition " + std::to_string(r);
    if (static_cast<int>(row.context.size()) != spec.order)
      out.push_back(name + " context length differs from order");
    for (const auto& c : row.context)
      if (c && c->value >= spec.vocab_size) out.push_back(name + " context token out of vocabulary");
    auto msg = detail::check_distribution(row.logprobs, spec.vocab_size);
    if (!msg.empty()) out.push_back(name + " " + msg);
  }
  return out;
}

/// Compiled toy model. Construction validates the spec and materializes a
/// dense table over all (vocab + 1)^order contexts.
class ToyModel final : public Model {
 public:
  explicit ToyModel(ToyModelSpec spec) : spec_(std::move(spec)) {
    auto violations = validate_toy_spec(spec_);
    if (!violations.empty()) throw ValidationError("invalid toy model spec", std::move(violations));

    const std::size_t symbols = spec_.vocab_size + 1;
    std::size_t rows = 1;
    for (int i = 0; i < spec_.order; ++i) rows *= symbols;
    table_.assign(rows, {});
    for (const auto& t : spec_.transitions) table_[row_index(t.context)] = t.logprobs;
    std::vector<std::string> missing;
    for (std::size_t r = 0; r < rows; ++r) {
      if (!table_[r].empty()) continue;
      if (!spec_.default_logprobs) {
        missing.push_back("no distribution for context row " + std::to_string(r));
        continue;
      }
      table_[r] = *spec_.default_logprobs;
    }
    if (!missing.empty()) throw ValidationError("incomplete toy model spec", std::move(missing));

    info_.vocab_size = spec_.vocab_size;
    info_.eos = spec_.eos;
    info_.hidden_dim = spec_.hidden_dim;
    info_.concurrent = true;
    info_.long_context = spec_.long_context;
  }

  const ToyModelSpec& spec() const noexcept { return spec_; }
  const ModelInfo& info() const noexcept { return info_; }

  PromptContext open(const std::string& /*prompt*/, const std::string& /*image*/) override {
    return PromptContext{next_context_++, info_};
  }

  Expansion expand(const PromptContext& context, const Candidate& candidate,
                   std::size_t k) const override {
    if (candidate.context() != context.id)
      throw ContextMismatch("candidate belongs to context " + std::to_string(candidate.context()) +
                            ", expanded under " + std::to_string(context.id));
    if (candidate.finished()) throw InvalidArgument("cannot expand a finished candidate");
    if (k == 0) throw InvalidArgument("expansion width must be >= 1");
    const auto& row = distribution(candidate.tokens());

    std::vector<std::uint32_t> order(spec_.vocab_size);
    std::iota(order.begin(), order.end(), 0u);
    const std::size_t take = std::min<std::size_t>(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                        return row[a] != row[b] ? row[a] > row[b] : a < b;
                      });
    Expansion out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i)
      out.push_back({TokenId{order[i]}, row[order[i]], spec_.hidden[order[i]]});
    return out;
  }

  /// Conditional distribution after `tokens` (natural-log probabilities).
  const std::vector<double>& distribution(std::span<const TokenId> tokens) const {
    std::vector<ToyContextToken> ctx(static_cast<std::size_t>(spec_.order));
    for (int i = 0; i < spec_.order; ++i) {
      const std::ptrdiff_t pos =
          static_cast<std::ptrdiff_t>(tokens.size()) - spec_.order + i;
      if (pos >= 0) {
        const TokenId t = tokens[static_cast<std::size_t>(pos)];
        if (t.value >= spec_.vocab_size) throw InvalidArgument("token out of vocabulary");
        ctx[static_cast<std::size_t>(i)] = t;
      }
    }
    for (const auto& t : tokens)
      if (t.value >= spec_.vocab_size) throw InvalidArgument("token out of vocabulary");
    return table_[row_index(ctx)];
  }

  std::string detokenize(std::span<const TokenId> tokens) const override {
    std::string text;
    for (TokenId t : tokens) {
      if (t == spec_.eos) continue;
      if (t.value >= spec_.vocab_size) throw InvalidArgument("token out of vocabulary");
      if (!text.empty()) text += ' ';
      text += spec_.words.empty() ? "w" + std::to_string(t.value) : spec_.words[t.value];
    }
    return text;
  }

 private:
  std::size_t row_index(std::span<const ToyContextToken> context) const {
    std::size_t index = 0;
    for (const auto& c : context)
      index = index * (spec_.vocab_size + 1) + (c ? c->value + 1 : 0);
    return index;
  }

  ToyModelSpec spec_;
  ModelInfo info_;
  std::vector<std::vector<double>> table_;
  std::uint64_t next_context_ = 1;
};

/// Options for `random_toy_spec`.
struct RandomToyOptions {
  std::uint32_t vocab_size = 32;
  int order = 1;
  std::size_t hidden_dim = 16;
  double logit_scale = 2.0;
  double eos_bias = 0.0;  // added to the eos logit in every row
};

/// Random but fully specified toy model (dense transition table).
inline ToyModelSpec random_toy_spec(std::uint64_t seed, const RandomToyOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  ToyModelSpec spec;
  spec.vocab_size = opt.vocab_size;
  spec.eos = TokenId{opt.vocab_size - 1};
  spec.order = opt.order;
  spec.hidden_dim = opt.hidden_dim;
  spec.hidden.resize(opt.vocab_size);
  for (auto& h : spec.hidden) {
    h.resize(opt.hidden_dim);
    do {
      for (double& x : h) x = normal(rng);
    } while (detail::squared_norm(h) == 0.0);
  }

  std::size_t rows = 1;
  for (int i = 0; i < opt.order; ++i) rows *= opt.vocab_size + 1;
  for (std::size_t r = 0; r < rows; ++r) {
    ToyTransition t;
    std::size_t rem = r;
    t.context.assign(static_cast<std::size_t>(opt.order), std::nullopt);
    for (int i = opt.order - 1; i >= 0; --i) {
      const std::size_t sym = rem % (opt.vocab_size + 1);
      rem /= opt.vocab_size + 1;
      if (sym != 0) t.context[static_cast<std::size_t>(i)] = TokenId{static_cast<std::uint32_t>(sym - 1)};
    }
    std::vector<double> logits(opt.vocab_size);
    for (double& l : logits) l = opt.logit_scale * normal(rng);
    logits.back() += opt.eos_bias;
    const double peak = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - peak);
    const double log_z = peak + std::log(z);
    for (double& l : logits) l = std::min(0.0, l - log_z);
    t.logprobs = std::move(logits);
    spec.transitions.push_back(std::move(t));
  }
  return spec;
}

}  // namespace dbd
