#pragma once

// Differentiated beam decoding: parallel search for distinct unit facts,
// post-search selection, and summarization of the selected facts.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dbd/core.hpp"
#include "dbd/diffscore.hpp"
#include "dbd/model.hpp"

namespace dbd {

inline constexpr std::string_view kSearchPrompt =
    "Please generate a random fact of the image. You can describe the main object, the "
    "background, the environment, or any other detail. Please make sure the choice of the fact "
    "is random. Do not only focus on the people or the main object.";

inline constexpr std::string_view kSummaryPrompt =
    "These are the image and the facts of the image. Please summarize them and generate a "
    "detailed description of the image based on the facts and the image";

inline constexpr std::string_view kDirectFactSuffix = "Give me the fact directly without other words";

/// Differential weight for decoding step `t` (1-based; step 1 picks the
/// first token of every beam).
inline double alpha_at(const SearchConfig& config, int t) {
  if (t < 1) throw InvalidArgument("alpha_at: step must be >= 1");
  if (config.alpha_schedule.empty()) throw InvalidArgument("alpha_at: empty schedule");
  for (const auto& seg : config.alpha_schedule)
    if (!seg.until_step || t <= *seg.until_step) return seg.value;
  return config.alpha_schedule.back().value;
}

// ---------------------------------------------------------------------------
// Pick step
// ---------------------------------------------------------------------------

struct PickRecord {
  std::size_t pool_index = 0;
  bool finished = false;
  double score = 0.0;
  std::vector<std::size_t> remaining;  // eligible pool indices at pick time
};

struct PickResult {
  std::vector<Candidate> picked;     // unfinished, in pick order
  std::vector<Candidate> completed;  // finished, in pick order
  std::vector<PickRecord> log;       // every pick, finished or not
  std::vector<std::size_t> dropped;  // duplicates of completed facts
};

using TokenSequenceSet = std::set<std::vector<TokenId>>;

/// Hybrid-score pick over one sub-candidate pool.
///
/// The first pick maximizes sentence logprob; each later pick maximizes
/// logprob + alpha * sum of pairwise_diff against every earlier pick of this
/// step, finished ones included. Finished picks go to `completed` and do not
/// count toward `n`. Ties go to the lowest pool index. Pool members whose
/// tokens equal an already completed fact are dropped.
inline PickResult pick_step(std::span<const Candidate> pool, std::size_t n, double alpha,
                            const TokenSequenceSet* completed_before = nullptr) {
  if (pool.empty()) throw InvalidArgument("pick_step: empty pool");
  if (!(alpha >= 0.0)) throw InvalidArgument("pick_step: alpha must be >= 0");

  PickResult result;
  TokenSequenceSet completed;
  if (completed_before) completed = *completed_before;

  std::vector<std::size_t> remaining(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) remaining[i] = i;
  std::vector<double> diff_sum(pool.size(), 0.0);
  bool first = true;

  while (result.picked.size() < n) {
    std::erase_if(remaining, [&](std::size_t i) {
      if (!pool[i].finished() || !completed.contains(pool[i].tokens())) return false;
      result.dropped.push_back(i);
      return true;
    });
    if (remaining.empty()) break;

    std::size_t best = remaining.front();
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i : remaining) {
      const double score = first ? pool[i].logprob() : pool[i].logprob() + alpha * diff_sum[i];
      if (score > best_score) {
        best = i;
        best_score = score;
      }
    }
    result.log.push_back({best, pool[best].finished(), best_score, remaining});
    std::erase(remaining, best);
    first = false;

    if (pool[best].finished()) {
      completed.insert(pool[best].tokens());
      result.completed.push_back(pool[best]);
    } else {
      result.picked.push_back(pool[best]);
    }
    for (std::size_t i : remaining) diff_sum[i] += pairwise_diff(pool[i], pool[best]);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Search
// ---------------------------------------------------------------------------

/// Snapshot of one decoding step, handed to observers.
struct StepRecord {
  int step = 0;
  double alpha = 0.0;
  std::vector<Candidate> pool;
  std::vector<PickRecord> picks;
  std::vector<std::size_t> dropped;
  std::size_t active_after = 0;
  std::size_t facts_after = 0;
};

using StepObserver = std::function<void(const StepRecord&)>;

namespace detail {

inline std::vector<Candidate> expand_to_pool(const Model& model, const PromptContext& context,
                                             const Candidate& source, std::size_t k) {
  Expansion expansion = model.expand(context, source, k);
  check_expansion(expansion, k, context.info);
  std::vector<Candidate> out;
  out.reserve(expansion.size());
  for (auto& item : expansion)
    out.push_back(source.extended(item.token, item.logprob, std::move(item.hidden), context.info.eos));
  return out;
}

}  // namespace detail

/// Differentiated parallel search over one or more prompt contexts (several
/// contexts rotate prompts across beams). Returns completed facts; beams
/// still unfinished after `max_steps` are discarded.
inline FactSet search(const Model& model, std::span<const PromptContext> contexts,
                      const SearchConfig& config, const StepObserver& observer = {}) {
  if (auto v = validate(config); !v.empty()) throw ValidationError("invalid search config", v);
  if (contexts.empty()) throw InvalidArgument("search: no prompt context");

  std::map<std::uint64_t, const PromptContext*> by_id;
  for (const auto& c : contexts) by_id[c.id] = &c;
  const auto& context_of = [&](const Candidate& c) -> const PromptContext& {
    auto it = by_id.find(c.context());
    if (it == by_id.end()) throw ContextMismatch("candidate refers to an unknown context");
    return *it->second;
  };

  const auto n = static_cast<std::size_t>(config.beams);
  const auto k = static_cast<std::size_t>(config.top_k);
  const bool parallel = std::all_of(contexts.begin(), contexts.end(),
                                    [](const PromptContext& c) { return c.info.concurrent; });

  FactSet facts;
  TokenSequenceSet completed;
  std::vector<Candidate> active;
  for (const auto& c : contexts) active.push_back(Candidate::empty(c.id, c.info.hidden_dim));

  for (int t = 1; t <= config.max_steps && !active.empty(); ++t) {
    std::vector<std::vector<Candidate>> parts(active.size());
    if (parallel && active.size() > 1) {
      std::vector<std::future<std::vector<Candidate>>> jobs;
      jobs.reserve(active.size());
      for (const auto& a : active)
        jobs.push_back(std::async(std::launch::async, [&, src = &a] {
          return detail::expand_to_pool(model, context_of(*src), *src, k);
        }));
      for (std::size_t i = 0; i < jobs.size(); ++i) parts[i] = jobs[i].get();
    } else {
      for (std::size_t i = 0; i < active.size(); ++i)
        parts[i] = detail::expand_to_pool(model, context_of(active[i]), active[i], k);
    }
    std::vector<Candidate> pool;
    for (auto& p : parts)
      for (auto& c : p) pool.push_back(std::move(c));
    if (pool.empty()) break;

    const double alpha = alpha_at(config, t);
    PickResult picked = pick_step(pool, n, alpha, &completed);
    for (auto& f : picked.completed) {
      completed.insert(f.tokens());
      facts.facts.push_back(std::move(f));
    }
    active = std::move(picked.picked);

    if (observer) {
      StepRecord record{t,
                        alpha,
                        std::move(pool),
                        std::move(picked.log),
                        std::move(picked.dropped),
                        active.size(),
                        facts.size()};
      observer(record);
    }
  }
  return facts;
}

inline FactSet search(const Model& model, const PromptContext& context, const SearchConfig& config,
                      const StepObserver& observer = {}) {
  return search(model, std::span<const PromptContext>(&context, 1), config, observer);
}

// ---------------------------------------------------------------------------
// Post-search selection
// ---------------------------------------------------------------------------

/// Length-normalized sentence logprob.
inline double normalized_logprob(const Candidate& c) {
  if (c.empty()) throw InvalidArgument("length-normalized logprob of an empty candidate");
  return c.logprob() / static_cast<double>(c.size());
}

/// Indices into `facts` in selection order.
inline std::vector<std::size_t> select_fact_indices(const FactSet& facts,
                                                    const SelectionConfig& config) {
  if (facts.empty()) throw InvalidArgument("select_facts: no facts to select from");
  if (auto v = validate(config); !v.empty()) throw ValidationError("invalid selection config", v);

  const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(config.n_bar), facts.size());
  std::vector<std::size_t> remaining(facts.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;
  std::vector<double> diff_sum(facts.size(), 0.0);
  std::vector<std::size_t> chosen;
  chosen.reserve(want);

  while (chosen.size() < want) {
    std::size_t best = remaining.front();
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i : remaining) {
      const double base = normalized_logprob(facts.facts[i]);
      const double score = chosen.empty() ? base : base + config.alpha_bar * diff_sum[i];
      if (score > best_score) {
        best = i;
        best_score = score;
      }
    }
    chosen.push_back(best);
    std::erase(remaining, best);
    for (std::size_t i : remaining) diff_sum[i] += pairwise_diff(facts.facts[i], facts.facts[best]);
  }
  return chosen;
}

inline FactSet select_facts(const FactSet& facts, const SelectionConfig& config) {
  FactSet out;
  for (std::size_t i : select_fact_indices(facts, config)) out.facts.push_back(facts.facts[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Summarization
// ---------------------------------------------------------------------------

/// Facts one per line in the given order, followed by the instruction.
inline std::string render_summary_prompt(std::string_view instruction,
                                         std::span<const std::string> fact_texts) {
  std::string out;
  for (const auto& f : fact_texts) {
    out += f;
    out += '\n';
  }
  out += instruction;
  return out;
}

inline std::vector<std::string> fact_texts(const Model& model, const FactSet& facts) {
  std::vector<std::string> out;
  out.reserve(facts.size());
  for (const auto& f : facts.facts) {
    const auto content = f.content_tokens();
    out.push_back(model.detokenize(content));
  }
  return out;
}

struct Caption {
  std::vector<TokenId> tokens;
  std::string text;
  bool fallback = false;  // fact texts concatenated instead of decoded
  friend bool operator==(const Caption&, const Caption&) = default;
};

struct SummaryOptions {
  std::string instruction{kSummaryPrompt};
  std::string image_path;
  std::size_t max_tokens = 256;
  bool force_fallback = false;
};

/// Renders the summarization prompt and greedy-decodes a caption. Models
/// that cannot take long contexts get the fact texts joined by spaces.
inline Caption summarize(Model& model, const FactSet& selected, const SummaryOptions& options = {}) {
  if (selected.empty()) throw InvalidArgument("summarize: no facts");
  const auto texts = fact_texts(model, selected);
  const std::string prompt = render_summary_prompt(options.instruction, texts);
  PromptContext context = model.open(prompt, options.image_path);

  Caption caption;
  if (options.force_fallback || !context.info.long_context) {
    caption.fallback = true;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (texts[i].empty()) continue;
      if (!caption.text.empty()) caption.text += ' ';
      caption.text += texts[i];
      const auto content = selected.facts[i].content_tokens();
      caption.tokens.insert(caption.tokens.end(), content.begin(), content.end());
    }
    return caption;
  }
  const Candidate decoded = greedy_decode(model, context, options.max_tokens);
  caption.tokens = decoded.content_tokens();
  caption.text = model.detokenize(caption.tokens);
  return caption;
}

}  // namespace dbd
