#pragma once

// JSON forms of the domain types. Doubles are written in shortest
// round-trip form, so to_json -> from_json is the identity.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "dbd/core.hpp"
#include "dbd/ingest.hpp"
#include "dbd/manifest.hpp"
#include "dbd/metrics.hpp"
#include "dbd/search.hpp"
#include "dbd/toy_model.hpp"

namespace dbd {

using json = nlohmann::json;

inline void to_json(json& j, TokenId t) { j = t.value; }
inline void from_json(const json& j, TokenId& t) { t = TokenId{j.get<std::uint32_t>()}; }

// --- Candidate / FactSet -----------------------------------------------------

inline void to_json(json& j, const Candidate& c) {
  j = json{{"context", c.context()},
           {"tokens", c.tokens()},
           {"token_logprobs", c.token_logprobs()},
           {"logprob", c.logprob()},
           {"finished", c.finished()},
           {"hiddens", c.hiddens()},
           {"norm_mean", c.norm_mean()}};
}

inline void from_json(const json& j, Candidate& c) {
  auto norm_mean = j.at("norm_mean").get<HiddenVector>();
  const std::size_t dim = norm_mean.size();
  c = Candidate::from_parts(j.at("context").get<std::uint64_t>(),
                            j.at("tokens").get<std::vector<TokenId>>(),
                            j.at("token_logprobs").get<std::vector<double>>(),
                            j.at("hiddens").get<std::vector<HiddenVector>>(),
                            j.at("finished").get<bool>(), std::move(norm_mean), dim);
  if (j.contains("logprob") && j.at("logprob").get<double>() != c.logprob())
    throw ValidationError("candidate: logprob differs from the sum of token logprobs");
}

inline void to_json(json& j, const FactSet& f) { j = json{{"facts", f.facts}}; }
inline void from_json(const json& j, FactSet& f) {
  f.facts = j.at("facts").get<std::vector<Candidate>>();
  for (const auto& c : f.facts)
    if (!c.finished()) throw ValidationError("fact set member is not finished");
}

// --- Configuration -----------------------------------------------------------

inline void to_json(json& j, const AlphaSegment& s) {
  j = json{{"until_step", s.until_step ? json(*s.until_step) : json(nullptr)}, {"value", s.value}};
}
inline void from_json(const json& j, AlphaSegment& s) {
  const auto& u = j.at("until_step");
  s.until_step = u.is_null() ? std::nullopt : std::optional<int>(u.get<int>());
  s.value = j.at("value").get<double>();
}

inline void to_json(json& j, const SearchConfig& c) {
  j = json{{"beams", c.beams},
           {"top_k", c.top_k},
           {"alpha_schedule", c.alpha_schedule},
           {"max_steps", c.max_steps},
           {"seed", c.seed}};
}
inline void from_json(const json& j, SearchConfig& c) {
  c.beams = j.at("beams").get<int>();
  c.top_k = j.at("top_k").get<int>();
  c.alpha_schedule = j.at("alpha_schedule").get<AlphaSchedule>();
  c.max_steps = j.at("max_steps").get<int>();
  c.seed = j.value("seed", std::uint64_t{0});
}

inline void to_json(json& j, const SelectionConfig& c) {
  j = json{{"alpha_bar", c.alpha_bar}, {"n_bar", c.n_bar}};
}
inline void from_json(const json& j, SelectionConfig& c) {
  c.alpha_bar = j.at("alpha_bar").get<double>();
  c.n_bar = j.at("n_bar").get<int>();
}

// --- Manifest ----------------------------------------------------------------

inline void to_json(json& j, const BBox& b) { j = json::array({b.x, b.y, b.w, b.h}); }
inline void from_json(const json& j, BBox& b) {
  if (!j.is_array() || j.size() != 4) throw ValidationError("bbox must be [x, y, w, h]");
  b = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

inline void to_json(json& j, const CharSpan& s) { j = json::array({s.start, s.end}); }
inline void from_json(const json& j, CharSpan& s) {
  if (!j.is_array() || j.size() != 2) throw ValidationError("span must be [start, end]");
  s = {j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

inline void to_json(json& j, const PartitionEntry& e) {
  j = json{{"id", e.id},
           {"modality", to_string(e.modality)},
           {"kind", to_string(e.kind)},
           {"embedding_index", e.embedding_index}};
  if (e.bbox) j["bbox"] = *e.bbox;
  if (e.span) j["span"] = *e.span;
}
inline void from_json(const json& j, PartitionEntry& e) {
  e.id = j.at("id").get<std::string>();
  e.modality = parse_modality(j.at("modality").get<std::string>());
  e.kind = parse_partition_kind(j.at("kind").get<std::string>());
  e.embedding_index = j.at("embedding_index").get<std::size_t>();
  e.bbox = j.contains("bbox") ? std::optional<BBox>(j.at("bbox").get<BBox>()) : std::nullopt;
  e.span = j.contains("span") ? std::optional<CharSpan>(j.at("span").get<CharSpan>()) : std::nullopt;
}

inline void to_json(json& j, const PartitionManifest& m) {
  j = json{{"item_id", m.item_id}, {"entries", m.entries}};
  if (m.dim) j["dim"] = *m.dim;
  if (m.image) j["image"] = json{{"width", m.image->width}, {"height", m.image->height}};
}
inline void from_json(const json& j, PartitionManifest& m) {
  m.item_id = j.value("item_id", std::string{});
  m.entries = j.at("entries").get<std::vector<PartitionEntry>>();
  m.dim = j.contains("dim") ? std::optional<std::uint32_t>(j.at("dim").get<std::uint32_t>()) : std::nullopt;
  if (j.contains("image"))
    m.image = ImageDims{j.at("image").at("width").get<double>(), j.at("image").at("height").get<double>()};
  else
    m.image.reset();
}

/// Concatenates entries of per-modality sidecar manifests into one.
inline PartitionManifest merge_manifests(const PartitionManifest& image, const PartitionManifest& caption) {
  PartitionManifest m;
  m.item_id = image.item_id.empty() ? caption.item_id : image.item_id;
  m.dim = image.dim ? image.dim : caption.dim;
  if (image.dim && caption.dim && *image.dim != *caption.dim)
    throw ValidationError("image and caption manifests declare different dims");
  m.image = image.image;
  for (const auto& e : image.entries) m.entries.push_back(e);
  for (const auto& e : caption.entries) m.entries.push_back(e);
  return m;
}

// --- Annotations -------------------------------------------------------------

inline void to_json(json& j, const AnnotatedBox& b) {
  j = json{{"id", b.id}, {"bbox", b.bbox}, {"names", b.names}};
  if (!b.phrase.empty()) j["phrase"] = b.phrase;
}
inline void from_json(const json& j, AnnotatedBox& b) {
  b.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
  b.bbox = j.at("bbox").get<BBox>();
  b.names = j.value("names", std::vector<std::string>{});
  b.phrase = j.value("phrase", std::string{});
}

inline void to_json(json& j, const RegionAnnotation& a) {
  j = json{{"image_id", a.image_id}, {"width", a.width}, {"height", a.height},
           {"regions", a.regions}, {"objects", a.objects}};
}
inline void from_json(const json& j, RegionAnnotation& a) {
  a.image_id = j.at("image_id").is_string() ? j.at("image_id").get<std::string>() : j.at("image_id").dump();
  a.width = j.at("width").get<double>();
  a.height = j.at("height").get<double>();
  a.regions = j.value("regions", std::vector<AnnotatedBox>{});
  a.objects = j.value("objects", std::vector<AnnotatedBox>{});
}

// --- Toy model ---------------------------------------------------------------

inline void to_json(json& j, const ToyTransition& t) {
  json ctx = json::array();
  for (const auto& c : t.context) ctx.push_back(c ? json(c->value) : json(-1));
  j = json{{"context", ctx}, {"logprobs", t.logprobs}};
}
inline void from_json(const json& j, ToyTransition& t) {
  t.context.clear();
  for (const auto& c : j.at("context")) {
    const auto v = c.get<long long>();
    t.context.push_back(v < 0 ? std::nullopt : std::optional<TokenId>(TokenId{static_cast<std::uint32_t>(v)}));
  }
  t.logprobs = j.at("logprobs").get<std::vector<double>>();
}

inline void to_json(json& j, const ToyModelSpec& s) {
  j = json{{"vocab_size", s.vocab_size}, {"eos", s.eos},       {"order", s.order},
           {"hidden_dim", s.hidden_dim}, {"hidden", s.hidden}, {"transitions", s.transitions},
           {"long_context", s.long_context}};
  if (s.default_logprobs) j["default"] = *s.default_logprobs;
  if (!s.words.empty()) j["words"] = s.words;
}
inline void from_json(const json& j, ToyModelSpec& s) {
  s.vocab_size = j.at("vocab_size").get<std::uint32_t>();
  s.eos = j.at("eos").get<TokenId>();
  s.order = j.at("order").get<int>();
  s.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  s.hidden = j.at("hidden").get<std::vector<HiddenVector>>();
  s.transitions = j.value("transitions", std::vector<ToyTransition>{});
  s.long_context = j.value("long_context", false);
  s.default_logprobs = j.contains("default")
                           ? std::optional<std::vector<double>>(j.at("default").get<std::vector<double>>())
                           : std::nullopt;
  s.words = j.value("words", std::vector<std::string>{});
}

// --- Reports -----------------------------------------------------------------

inline void to_json(json& j, const MetricRow& r) {
  j = json{{"k", r.k}, {"recall", r.recall}, {"precision", r.precision}, {"f1", r.f1}};
}
inline void from_json(const json& j, MetricRow& r) {
  r = {j.at("k").get<int>(), j.at("recall").get<double>(), j.at("precision").get<double>(),
       j.at("f1").get<double>()};
}

inline void to_json(json& j, const PartitionScore& p) {
  j = json{{"k", p.k}, {"modality", to_string(p.modality)}, {"id", p.id}, {"plr", p.plr}};
}
inline void from_json(const json& j, PartitionScore& p) {
  p.k = j.at("k").get<int>();
  p.modality = parse_modality(j.at("modality").get<std::string>());
  p.id = j.at("id").get<std::string>();
  p.plr = j.at("plr").get<double>();
}

inline void to_json(json& j, const MetricReport& r) {
  j = json{{"per_k", r.rows}, {"per_partition", r.partitions}};
}
inline void from_json(const json& j, MetricReport& r) {
  r.rows = j.at("per_k").get<std::vector<MetricRow>>();
  r.partitions = j.at("per_partition").get<std::vector<PartitionScore>>();
}

inline void to_json(json& j, const ProfileBin& b) {
  j = json{{"bin", b.bin}, {"mean_area", b.mean_area}, {"count", b.count}};
}

inline void to_json(json& j, const Caption& c) {
  j = json{{"tokens", c.tokens}, {"text", c.text}, {"fallback", c.fallback}};
}
inline void from_json(const json& j, Caption& c) {
  c.tokens = j.at("tokens").get<std::vector<TokenId>>();
  c.text = j.at("text").get<std::string>();
  c.fallback = j.value("fallback", false);
}

// --- Files -------------------------------------------------------------------

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

/// Parses a JSON document into T, turning schema errors into ValidationError.
template <class T>
T parse_as(const json& j, const std::string& what) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

template <class T>
T load_json(const std::filesystem::path& path) {
  return parse_as<T>(read_json_file(path), path.string());
}

}  // namespace dbd
