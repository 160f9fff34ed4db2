#pragma once

// End-to-end drivers behind the command-line tool: decode (search, select,
// summarize), evaluate, and the caption position/size analysis.

#include <algorithm>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "dbd/core.hpp"
#include "dbd/embedding_file.hpp"
#include "dbd/ingest.hpp"
#include "dbd/metrics.hpp"
#include "dbd/model.hpp"
#include "dbd/profiles.hpp"
#include "dbd/search.hpp"
#include "dbd/serialize.hpp"

namespace dbd {

struct DecodeOptions {
  SearchConfig search;
  SelectionConfig selection;
  std::vector<std::string> prompts{std::string(kSearchPrompt)};
  bool rotate_prompts = false;  // one context per prompt instead of prompts[0] only
  std::string prompt_suffix;    // appended to search and summary prompts
  std::string summary_instruction{kSummaryPrompt};
  std::string image_path;
  std::size_t summary_max_tokens = 256;
};

struct DecodeArtifacts {
  FactSet facts;
  FactSet selected;
  std::vector<std::size_t> selected_indices;
  std::vector<std::string> fact_texts;
  std::vector<std::string> selected_texts;
  std::optional<Caption> caption;  // absent when the search found no facts
  std::vector<std::string> prompts_used;
};

inline std::string with_suffix(const std::string& prompt, const std::string& suffix) {
  return suffix.empty() ? prompt : prompt + " " + suffix;
}

inline DecodeArtifacts run_decode(Model& model, const DecodeOptions& options,
                                  const StepObserver& observer = {}) {
  if (options.prompts.empty()) throw InvalidArgument("decode: no search prompt");
  if (auto v = validate(options.selection); !v.empty()) throw ValidationError("invalid selection config", v);

  DecodeArtifacts out;
  std::vector<std::string> prompts = options.prompts;
  if (options.rotate_prompts) {
    std::mt19937_64 rng(options.search.seed);
    std::shuffle(prompts.begin(), prompts.end(), rng);
  } else {
    prompts.resize(1);
  }
  std::vector<PromptContext> contexts;
  for (const auto& p : prompts) {
    out.prompts_used.push_back(with_suffix(p, options.prompt_suffix));
    contexts.push_back(model.open(out.prompts_used.back(), options.image_path));
  }

  out.facts = search(model, contexts, options.search, observer);
  out.fact_texts = fact_texts(model, out.facts);
  if (out.facts.empty()) return out;

  out.selected_indices = select_fact_indices(out.facts, options.selection);
  for (std::size_t i : out.selected_indices) {
    out.selected.facts.push_back(out.facts.facts[i]);
    out.selected_texts.push_back(out.fact_texts[i]);
  }
  SummaryOptions summary;
  summary.instruction = with_suffix(options.summary_instruction, options.prompt_suffix);
  summary.image_path = options.image_path;
  summary.max_tokens = options.summary_max_tokens;
  out.caption = summarize(model, out.selected, summary);
  return out;
}

inline json decode_config_json(const DecodeOptions& options) {
  return json{{"search", options.search},
              {"alpha", format_alpha_schedule(options.search.alpha_schedule)},
              {"selection", options.selection},
              {"prompts", options.prompts},
              {"rotate_prompts", options.rotate_prompts},
              {"prompt_suffix", options.prompt_suffix},
              {"summary_instruction", options.summary_instruction},
              {"image_path", options.image_path},
              {"summary_max_tokens", options.summary_max_tokens}};
}

inline json facts_json(const FactSet& facts, const std::vector<std::string>& texts) {
  json j = facts;
  j["texts"] = texts;
  return j;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

inline std::string report_csv(const MetricReport& report) {
  std::string out = "k,clip_recall,clip_precision,clip_f1\n";
  for (const auto& r : report.rows)
    out += std::to_string(r.k) + "," + format_metric(r.recall) + "," + format_metric(r.precision) + "," +
           format_metric(r.f1) + "\n";
  return out;
}

inline std::string report_table(const MetricReport& report) {
  char line[160];
  std::string out;
  std::snprintf(line, sizeof line, "%4s  %14s  %14s  %14s\n", "k", "CLIP-Recall", "CLIP-Precision", "CLIP-F1");
  out += line;
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "%4d  %14s  %14s  %14s\n", r.k, format_metric(r.recall).c_str(),
                  format_metric(r.precision).c_str(), format_metric(r.f1).c_str());
    out += line;
  }
  return out;
}

inline std::string report_json(const MetricReport& report) { return json(report).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Position / size analysis inputs
// ---------------------------------------------------------------------------

struct CaptionRecord {
  std::string image_id;
  std::string caption;
};

/// Captions file: JSON array of {"image_id", "caption"}.
inline std::vector<CaptionRecord> parse_captions(const json& j) {
  if (!j.is_array()) throw ValidationError("captions file must be a JSON array");
  std::vector<CaptionRecord> out;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("image_id") || !item.contains("caption"))
      throw ValidationError("caption records need image_id and caption");
    const auto& id = item.at("image_id");
    out.push_back({id.is_string() ? id.get<std::string>() : id.dump(), item.at("caption").get<std::string>()});
  }
  return out;
}

/// Pairs captions with annotations by image id.
inline std::vector<ProfileBin> analyze_positions(const std::vector<CaptionRecord>& captions,
                                                 const std::vector<RegionAnnotation>& annotations,
                                                 std::size_t bins) {
  std::map<std::string, const RegionAnnotation*> by_id;
  for (const auto& a : annotations) by_id[a.image_id] = &a;
  std::vector<std::string> texts;
  std::vector<RegionAnnotation> paired;
  std::vector<std::string> missing;
  for (const auto& c : captions) {
    auto it = by_id.find(c.image_id);
    if (it == by_id.end()) {
      missing.push_back("no annotation for image '" + c.image_id + "'");
      continue;
    }
    if (auto v = validate_annotation(*it->second); !v.empty())
      missing.insert(missing.end(), v.begin(), v.end());
    texts.push_back(c.caption);
    paired.push_back(*it->second);
  }
  if (!missing.empty()) throw ValidationError("caption/annotation mismatch", missing);
  return position_size_profile(texts, paired, bins);
}

inline std::string profile_table(const std::vector<ProfileBin>& bins) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof line, "%5s  %11s  %14s  %8s\n", "bin", "position", "mean_area", "count");
  out += line;
  const double width = 1.0 / static_cast<double>(bins.size());
  for (const auto& b : bins) {
    char range[32];
    std::snprintf(range, sizeof range, "%.2f-%.2f", static_cast<double>(b.bin) * width,
                  static_cast<double>(b.bin + 1) * width);
    std::snprintf(line, sizeof line, "%5zu  %11s  %14s  %8zu\n", b.bin, range, format_metric(b.mean_area).c_str(),
                  b.count);
    out += line;
  }
  return out;
}

}  // namespace dbd
