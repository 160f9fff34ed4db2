#pragma once

// Shared domain types for differentiated beam decoding: token ids, hidden
// vectors, search candidates, completed fact sets and the search/selection
// configuration. No algorithms live here.

#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dbd {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input data failed validation (malformed file, violated invariant).
class ValidationError : public Error {
 public:
  explicit ValidationError(std::string message, std::vector<std::string> violations = {})
      : Error(std::move(message)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// A vector with zero l2 norm was used where a direction is required.
class ZeroNormError : public Error {
 public:
  using Error::Error;
};

/// The model backend is gone (bridge process died, pipe closed, ...).
class ModelUnavailable : public Error {
 public:
  using Error::Error;
};

/// A candidate was expanded under a prompt context other than its own.
class ContextMismatch : public Error {
 public:
  using Error::Error;
};

/// The model backend answered with a structured error.
class ModelError : public Error {
 public:
  ModelError(std::string kind, const std::string& message)
      : Error(kind + ": " + message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// ---------------------------------------------------------------------------
// Tokens and vectors
// ---------------------------------------------------------------------------

/// Opaque index into a model vocabulary.
struct TokenId {
  std::uint32_t value = 0;

  constexpr TokenId() = default;
  constexpr explicit TokenId(std::uint32_t v) : value(v) {}

  friend constexpr auto operator<=>(TokenId, TokenId) = default;
};

using HiddenVector = std::vector<double>;

namespace detail {

inline double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Candidate
// ---------------------------------------------------------------------------

/// An in-progress (or finished) token sequence produced during search.
///
/// Candidates are immutable; `extended` returns a copy with one more token.
/// The running mean of unit-normalized hidden states is maintained
/// incrementally so that differential scores cost one dot product.
class Candidate {
 public:
  Candidate() = default;

  /// Empty candidate bound to a prompt context.
  static Candidate empty(std::uint64_t context_id, std::size_t hidden_dim) {
    Candidate c;
    c.context_ = context_id;
    c.norm_mean_.assign(hidden_dim, 0.0);
    return c;
  }

  /// Rebuilds a candidate from its stored parts, checking every invariant.
  /// `norm_mean` may be supplied (deserialization) or recomputed.
  static Candidate from_parts(std::uint64_t context_id, std::vector<TokenId> tokens,
                              std::vector<double> token_logprobs,
                              std::vector<HiddenVector> hiddens, bool finished,
                              std::optional<HiddenVector> norm_mean = std::nullopt,
                              std::size_t hidden_dim = 0);

  /// Appends one token. `eos` decides whether the result is finished.
  Candidate extended(TokenId token, double logprob, HiddenVector hidden, TokenId eos) const;

  std::uint64_t context() const noexcept { return context_; }
  const std::vector<TokenId>& tokens() const noexcept { return tokens_; }
  const std::vector<double>& token_logprobs() const noexcept { return token_logprobs_; }
  const std::vector<HiddenVector>& hiddens() const noexcept { return hiddens_; }
  const HiddenVector& norm_mean() const noexcept { return norm_mean_; }
  double logprob() const noexcept { return logprob_; }
  bool finished() const noexcept { return finished_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }

  /// True if some hidden state had zero norm; such candidates cannot be
  /// compared by cosine.
  bool has_zero_norm_hidden() const noexcept { return zero_norm_; }

  /// Mean of unit-normalized hiddens, recomputed from scratch.
  HiddenVector recompute_norm_mean() const;

  /// Tokens with a trailing end-of-sequence token removed.
  std::vector<TokenId> content_tokens() const {
    if (finished_ && !tokens_.empty()) return {tokens_.begin(), tokens_.end() - 1};
    return tokens_;
  }

  friend bool operator==(const Candidate&, const Candidate&) = default;

 private:
  std::uint64_t context_ = 0;
  std::vector<TokenId> tokens_;
  std::vector<double> token_logprobs_;
  std::vector<HiddenVector> hiddens_;
  HiddenVector norm_mean_;
  double logprob_ = 0.0;
  bool finished_ = false;
  bool zero_norm_ = false;
};

inline Candidate Candidate::extended(TokenId token, double logprob, HiddenVector hidden,
                                     TokenId eos) const {
  if (finished_) throw InvalidArgument("cannot extend a finished candidate");
  if (!std::isfinite(logprob) || logprob > 0.0)
    throw InvalidArgument("token logprob must be finite and <= 0");
  if (!hiddens_.empty() && hidden.size() != hiddens_.front().size())
    throw InvalidArgument("hidden vector width changed within a candidate");
  if (hiddens_.empty() && !norm_mean_.empty() && hidden.size() != norm_mean_.size())
    throw InvalidArgument("hidden vector width does not match the model hidden width");
  if (hidden.empty()) throw InvalidArgument("hidden vector is empty");
  if (!detail::all_finite(hidden)) throw InvalidArgument("hidden vector has non-finite entries");

  Candidate next = *this;
  const double norm = std::sqrt(detail::squared_norm(hidden));
  const double count = static_cast<double>(next.tokens_.size() + 1);
  if (next.norm_mean_.size() != hidden.size()) next.norm_mean_.assign(hidden.size(), 0.0);
  if (norm == 0.0) {
    next.zero_norm_ = true;
    for (double& m : next.norm_mean_) m -= m / count;
  } else {
    for (std::size_t i = 0; i < hidden.size(); ++i)
      next.norm_mean_[i] += (hidden[i] / norm - next.norm_mean_[i]) / count;
  }
  next.tokens_.push_back(token);
  next.token_logprobs_.push_back(logprob);
  next.hiddens_.push_back(std::move(hidden));
  next.logprob_ += logprob;
  next.finished_ = token == eos;
  return next;
}

inline HiddenVector Candidate::recompute_norm_mean() const {
  HiddenVector mean(norm_mean_.size(), 0.0);
  if (hiddens_.empty()) return mean;
  mean.assign(hiddens_.front().size(), 0.0);
  for (const auto& h : hiddens_) {
    const double norm = std::sqrt(detail::squared_norm(h));
    if (norm == 0.0) continue;
    for (std::size_t i = 0; i < h.size(); ++i) mean[i] += h[i] / norm;
  }
  for (double& m : mean) m /= static_cast<double>(hiddens_.size());
  return mean;
}

inline Candidate Candidate::from_parts(std::uint64_t context_id, std::vector<TokenId> tokens,
                                       std::vector<double> token_logprobs,
                                       std::vector<HiddenVector> hiddens, bool finished,
                                       std::optional<HiddenVector> norm_mean,
                                       std::size_t hidden_dim) {
  if (tokens.size() != hiddens.size() || tokens.size() != token_logprobs.size())
    throw ValidationError("candidate: tokens, logprobs and hiddens differ in length");
  if (finished && tokens.empty()) throw ValidationError("candidate: finished but empty");

  // Replaying through `extended` is the single source of truth for the
  // running sums; the eos token is only needed to set the finished flag.
  Candidate c = empty(context_id, hidden_dim != 0 ? hidden_dim
                                                  : (hiddens.empty() ? 0 : hiddens.front().size()));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const bool last = i + 1 == tokens.size();
    const TokenId eos = (last && finished) ? tokens[i] : TokenId{tokens[i].value + 1};
    try {
      c = c.extended(tokens[i], token_logprobs[i], std::move(hiddens[i]), eos);
    } catch (const InvalidArgument& e) {
      throw ValidationError(std::string("candidate: ") + e.what());
    }
  }
  if (norm_mean) {
    if (norm_mean->size() != c.norm_mean_.size())
      throw ValidationError("candidate: norm_mean width mismatch");
    const HiddenVector fresh = c.recompute_norm_mean();
    for (std::size_t i = 0; i < fresh.size(); ++i)
      if (std::abs(fresh[i] - (*norm_mean)[i]) > 1e-9)
        throw ValidationError("candidate: norm_mean inconsistent with hiddens");
    c.norm_mean_ = std::move(*norm_mean);
  }
  return c;
}

/// Completed unit facts in completion order.
struct FactSet {
  std::vector<Candidate> facts;

  std::size_t size() const noexcept { return facts.size(); }
  bool empty() const noexcept { return facts.empty(); }
  friend bool operator==(const FactSet&, const FactSet&) = default;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// One piece of a piecewise-constant differential weight: `value` applies
/// for steps t <= `until_step`; an empty `until_step` means "forever".
struct AlphaSegment {
  std::optional<int> until_step;
  double value = 0.0;
  friend bool operator==(const AlphaSegment&, const AlphaSegment&) = default;
};

using AlphaSchedule = std::vector<AlphaSegment>;

struct SearchConfig {
  int beams = 5;        // n
  int top_k = 6;        // K
  AlphaSchedule alpha_schedule{{3, 10.0}, {std::nullopt, 5.0}};
  int max_steps = 32;
  std::uint64_t seed = 0;

  friend bool operator==(const SearchConfig&, const SearchConfig&) = default;
};

struct SelectionConfig {
  double alpha_bar = 5.0;
  int n_bar = 10;
  friend bool operator==(const SelectionConfig&, const SelectionConfig&) = default;
};

inline std::vector<std::string> validate(const SearchConfig& config) {
  std::vector<std::string> out;
  if (config.beams < 1) out.emplace_back("beams must be >= 1");
  if (config.top_k < 1) out.emplace_back("top_k must be >= 1");
  if (config.max_steps < 1) out.emplace_back("max_steps must be >= 1");
  if (config.alpha_schedule.empty()) out.emplace_back("alpha schedule is empty");
  std::optional<int> previous;
  for (std::size_t i = 0; i < config.alpha_schedule.size(); ++i) {
    const auto& seg = config.alpha_schedule[i];
    if (!std::isfinite(seg.value) || seg.value < 0.0)
      out.push_back("alpha segment " + std::to_string(i) + " has a negative or non-finite value");
    if (!seg.until_step && i + 1 != config.alpha_schedule.size())
      out.push_back("alpha segment " + std::to_string(i) + " is unbounded but not last");
    if (seg.until_step) {
      if (*seg.until_step < 1)
        out.push_back("alpha segment " + std::to_string(i) + " threshold must be >= 1");
      if (previous && *seg.until_step <= *previous)
        out.push_back("alpha schedule thresholds must be strictly increasing");
      previous = seg.until_step;
    }
  }
  return out;
}

inline std::vector<std::string> validate(const SelectionConfig& config) {
  std::vector<std::string> out;
  if (config.n_bar < 1) out.emplace_back("n_bar must be >= 1");
  if (!std::isfinite(config.alpha_bar) || config.alpha_bar < 0.0)
    out.emplace_back("alpha_bar must be finite and >= 0");
  return out;
}

}  // namespace dbd
