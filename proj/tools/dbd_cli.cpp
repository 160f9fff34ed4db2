// dbd: differentiated beam decoding and CLIP metric command-line tool.
//
// Exit codes: 0 success, 1 usage, 2 data validation, 3 model/bridge failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dbd/dbd.hpp"
#include "dbd/testing/selfcheck.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitModel = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void print_violations(const dbd::ValidationError& e) {
  std::cerr << "error: " << e.what() << "\n";
  for (const auto& v : e.violations()) std::cerr << "  - " << v << "\n";
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    dbd::write_text_file(out_path, text);
  }
}

// --- decode ------------------------------------------------------------------

struct DecodeFlags {
  std::string model_path;
  std::string bridge;
  std::string model_id;
  std::string profile;
  std::optional<int> beams, top_k, max_steps, select_n;
  std::optional<std::string> alpha;
  std::optional<double> select_alpha;
  std::uint64_t seed = 0;
  std::vector<std::string> prompts;
  bool rotate = false;
  bool direct_suffix = false;
  std::string image;
  std::size_t summary_max_tokens = 256;
  std::string out_dir = ".";
};

int cmd_decode(const DecodeFlags& f) {
  std::unique_ptr<dbd::Model> model;
  std::string bridge = f.bridge;
  if (bridge.empty() && f.model_path.empty())
    if (const char* env = std::getenv(dbd::kBridgeEnv)) bridge = env;
  if (!f.model_path.empty() && !bridge.empty()) throw UsageError("give either --model or --bridge, not both");
  if (f.model_path.empty() && bridge.empty())
    throw UsageError(std::string("a model is required: --model <toy spec> or --bridge <command> (or $") +
                     dbd::kBridgeEnv + ")");

  dbd::DecodeProfile profile = dbd::llava_profile();
  if (!f.profile.empty()) {
    auto p = dbd::find_profile(f.profile);
    if (!p) throw UsageError("unknown profile '" + f.profile + "'");
    profile = *p;
  }
  dbd::DecodeOptions options;
  options.search = profile.search;
  options.selection = profile.selection;
  if (profile.direct_fact_suffix || f.direct_suffix) options.prompt_suffix = std::string(dbd::kDirectFactSuffix);
  if (f.beams) options.search.beams = *f.beams;
  if (f.top_k) options.search.top_k = *f.top_k;
  if (f.max_steps) options.search.max_steps = *f.max_steps;
  if (f.alpha) options.search.alpha_schedule = dbd::parse_alpha_schedule(*f.alpha);
  if (f.select_alpha) options.selection.alpha_bar = *f.select_alpha;
  if (f.select_n) options.selection.n_bar = *f.select_n;
  options.search.seed = f.seed;
  if (!f.prompts.empty()) options.prompts = f.prompts;
  options.rotate_prompts = f.rotate;
  options.image_path = f.image;
  options.summary_max_tokens = f.summary_max_tokens;
  if (auto v = dbd::validate(options.search); !v.empty()) throw dbd::ValidationError("invalid search config", v);

  if (!f.model_path.empty())
    model = std::make_unique<dbd::ToyModel>(dbd::load_json<dbd::ToyModelSpec>(f.model_path));
  else
    model = std::make_unique<dbd::BridgeModel>(bridge, f.model_id);

  dbd::json config = dbd::decode_config_json(options);
  config["model"] = f.model_path.empty() ? dbd::json{{"bridge", bridge}, {"model_id", f.model_id}}
                                         : dbd::json{{"toy_spec", f.model_path}};
  config["profile"] = profile.name;
  std::cout << config.dump(2) << "\n";

  const auto artifacts = dbd::run_decode(*model, options);
  fs::create_directories(f.out_dir);
  const fs::path dir(f.out_dir);
  dbd::write_text_file(dir / "config.json", config.dump(2) + "\n");
  dbd::write_text_file(dir / "facts.json", dbd::facts_json(artifacts.facts, artifacts.fact_texts).dump(2) + "\n");
  dbd::json selected = dbd::facts_json(artifacts.selected, artifacts.selected_texts);
  selected["indices"] = artifacts.selected_indices;
  dbd::write_text_file(dir / "selected.json", selected.dump(2) + "\n");
  dbd::json caption = artifacts.caption ? dbd::json(*artifacts.caption) : dbd::json(nullptr);
  dbd::write_text_file(dir / "caption.json", caption.dump(2) + "\n");

  std::cerr << artifacts.facts.size() << " facts, " << artifacts.selected.size() << " selected\n";
  if (artifacts.caption) std::cerr << "caption: " << artifacts.caption->text << "\n";
  return 0;
}

// --- evaluate ----------------------------------------------------------------

struct EvaluateFlags {
  std::string image_emb, caption_emb, image_manifest, caption_manifest;
  std::vector<int> ks;
  std::string format = "table";
  std::string out;
};

std::string sidecar(const std::string& emb, const std::string& given) {
  return given.empty() ? emb + ".manifest.json" : given;
}

int cmd_evaluate(const EvaluateFlags& f) {
  const auto image_manifest = dbd::load_json<dbd::PartitionManifest>(sidecar(f.image_emb, f.image_manifest));
  const auto caption_manifest = dbd::load_json<dbd::PartitionManifest>(sidecar(f.caption_emb, f.caption_manifest));
  const auto manifest = dbd::merge_manifests(image_manifest, caption_manifest);
  const auto image = dbd::read_embeddings(f.image_emb, manifest.dim);
  const auto caption = dbd::read_embeddings(f.caption_emb, manifest.dim);
  const auto report = dbd::evaluate(image, caption, manifest, f.ks.empty() ? dbd::default_ks() : f.ks);

  if (f.format == "csv") emit(dbd::report_csv(report), f.out);
  else if (f.format == "json") emit(dbd::report_json(report), f.out);
  else emit(dbd::report_table(report), f.out);
  return 0;
}

// --- analyze-positions -------------------------------------------------------

struct AnalyzeFlags {
  std::string captions, annotations;
  std::size_t bins = 10;
  std::string format = "table";
  std::string out;
};

int cmd_analyze(const AnalyzeFlags& f) {
  const auto captions = dbd::parse_captions(dbd::read_json_file(f.captions));
  const auto annotations = dbd::load_json<std::vector<dbd::RegionAnnotation>>(f.annotations);
  const auto bins = dbd::analyze_positions(captions, annotations, f.bins);
  if (f.format == "json") {
    emit(dbd::json(bins).dump(2) + "\n", f.out);
  } else if (f.format == "csv") {
    std::string text = "bin,mean_area,count\n";
    for (const auto& b : bins)
      text += std::to_string(b.bin) + "," + dbd::format_metric(b.mean_area) + "," + std::to_string(b.count) + "\n";
    emit(text, f.out);
  } else {
    emit(dbd::profile_table(bins), f.out);
  }
  return 0;
}

// --- partitions --------------------------------------------------------------

struct PartitionFlags {
  std::string caption;
  std::string annotation;
  std::string image_id;
  std::optional<std::uint32_t> dim;
  std::string out;
};

int cmd_partitions(const PartitionFlags& f) {
  if (f.caption.empty() == f.annotation.empty()) throw UsageError("give exactly one of --caption or --annotation");
  dbd::PartitionManifest manifest;
  if (!f.caption.empty()) {
    manifest = dbd::caption_partitions(f.caption, f.image_id);
  } else {
    const auto doc = dbd::read_json_file(f.annotation);
    std::vector<dbd::RegionAnnotation> all =
        doc.is_array() ? dbd::parse_as<std::vector<dbd::RegionAnnotation>>(doc, f.annotation)
                       : std::vector<dbd::RegionAnnotation>{dbd::parse_as<dbd::RegionAnnotation>(doc, f.annotation)};
    const dbd::RegionAnnotation* chosen = nullptr;
    for (const auto& a : all)
      if (f.image_id.empty() || a.image_id == f.image_id) {
        chosen = &a;
        break;
      }
    if (!chosen) throw dbd::ValidationError("no annotation for image '" + f.image_id + "'");
    manifest = dbd::build_partitions(*chosen);
  }
  manifest.dim = f.dim;
  emit(dbd::json(manifest).dump(2) + "\n", f.out);
  return 0;
}

// --- selfcheck / make-toy ----------------------------------------------------

int cmd_selfcheck(const std::string& model_path, std::uint64_t seed) {
  std::optional<dbd::ToyModelSpec> spec;
  std::vector<dbd::testing::CheckResult> results;
  if (!model_path.empty()) {
    try {
      spec = dbd::load_json<dbd::ToyModelSpec>(model_path);
    } catch (const dbd::Error& e) {
      results.push_back({"toy-spec", false, e.what()});
    }
  }
  auto checks = dbd::testing::run_selfcheck(seed, spec);
  results.insert(results.end(), checks.begin(), checks.end());
  bool ok = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
    ok = ok && r.passed;
  }
  std::cout << (ok ? "all checks passed\n" : "some checks FAILED\n");
  return ok ? 0 : kExitData;
}

struct ToyFlags {
  dbd::RandomToyOptions options;
  std::uint64_t seed = 0;
  bool long_context = false;
  std::string out;
};

int cmd_make_toy(const ToyFlags& f) {
  auto spec = dbd::random_toy_spec(f.seed, f.options);
  spec.long_context = f.long_context;
  emit(dbd::json(spec).dump() + "\n", f.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentiated beam decoding and CLIP-Recall/Precision/F1 tools"};
  app.require_subcommand(1);

  DecodeFlags decode;
  auto* d = app.add_subcommand("decode", "search unit facts, select, summarize");
  d->add_option("--model", decode.model_path, "toy model spec (JSON)");
  d->add_option("--bridge", decode.bridge, std::string("bridge command (default $") + dbd::kBridgeEnv + ")");
  d->add_option("--model-id", decode.model_id, "model id passed to the bridge");
  d->add_option("--profile", decode.profile, "llava-1.5 | mplug-owl2 | minigpt-4");
  d->add_option("--beams", decode.beams, "number of differentiated beams (n)");
  d->add_option("--topk", decode.top_k, "expansion width per beam (K)");
  d->add_option("--alpha", decode.alpha, "differential weight schedule, e.g. 10:3,5 or 4");
  d->add_option("--max-steps", decode.max_steps, "maximum decoding steps");
  d->add_option("--seed", decode.seed, "seed (prompt rotation order)");
  d->add_option("--select-alpha", decode.select_alpha, "selection differential weight");
  d->add_option("--select-n", decode.select_n, "number of selected facts");
  d->add_option("--prompt", decode.prompts, "search prompt (repeatable)");
  d->add_flag("--rotate-prompts", decode.rotate, "one prompt context per --prompt");
  d->add_flag("--direct-suffix", decode.direct_suffix, "append the direct-fact instruction to prompts");
  d->add_option("--image", decode.image, "image path forwarded to the model");
  d->add_option("--summary-max-tokens", decode.summary_max_tokens, "summary length limit");
  d->add_option("--out", decode.out_dir, "output directory");

  EvaluateFlags evaluate;
  auto* e = app.add_subcommand("evaluate", "CLIP-Recall / Precision / F1 for one image-caption pair");
  e->add_option("--image-emb", evaluate.image_emb, "image partition embeddings")->required();
  e->add_option("--caption-emb", evaluate.caption_emb, "caption partition embeddings")->required();
  e->add_option("--image-manifest", evaluate.image_manifest, "default <image-emb>.manifest.json");
  e->add_option("--caption-manifest", evaluate.caption_manifest, "default <caption-emb>.manifest.json");
  e->add_option("--k", evaluate.ks, "k values (repeatable, default 3 5 10)")->check(CLI::PositiveNumber);
  e->add_option("--format", evaluate.format, "table | csv | json")->check(CLI::IsMember({"table", "csv", "json"}));
  e->add_option("--out", evaluate.out, "output file (default stdout)");

  AnalyzeFlags analyze;
  auto* a = app.add_subcommand("analyze-positions", "object size vs. position in caption");
  a->add_option("--captions", analyze.captions, "JSON array of {image_id, caption}")->required();
  a->add_option("--annotations", analyze.annotations, "JSON array of region annotations")->required();
  a->add_option("--bins", analyze.bins, "position bins")->check(CLI::PositiveNumber);
  a->add_option("--format", analyze.format, "table | csv | json")->check(CLI::IsMember({"table", "csv", "json"}));
  a->add_option("--out", analyze.out, "output file (default stdout)");

  PartitionFlags partitions;
  auto* p = app.add_subcommand("partitions", "write a partition manifest for a caption or an annotated image");
  p->add_option("--caption", partitions.caption, "caption text");
  p->add_option("--annotation", partitions.annotation, "region annotation JSON");
  p->add_option("--image-id", partitions.image_id, "image to pick from a multi-image annotation file");
  p->add_option("--dim", partitions.dim, "embedding dimension to declare");
  p->add_option("--out", partitions.out, "output file (default stdout)");

  std::string selfcheck_model;
  std::uint64_t selfcheck_seed = 20240601;
  auto* s = app.add_subcommand("selfcheck", "run the built-in oracle checks");
  s->add_option("--model", selfcheck_model, "also validate this toy spec");
  s->add_option("--seed", selfcheck_seed, "seed for random instances");

  ToyFlags toy;
  auto* t = app.add_subcommand("make-toy", "write a random toy model spec");
  t->add_option("--vocab", toy.options.vocab_size, "vocabulary size")->check(CLI::Range(2u, 4096u));
  t->add_option("--order", toy.options.order, "context length 0, 1 or 2")->check(CLI::Range(0, 2));
  t->add_option("--hidden-dim", toy.options.hidden_dim, "hidden width")->check(CLI::PositiveNumber);
  t->add_option("--eos-bias", toy.options.eos_bias, "extra logit on the eos token");
  t->add_option("--seed", toy.seed, "generator seed");
  t->add_flag("--long-context", toy.long_context, "let the toy model decode summaries");
  t->add_option("--out", toy.out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (d->parsed()) return cmd_decode(decode);
    if (e->parsed()) return cmd_evaluate(evaluate);
    if (a->parsed()) return cmd_analyze(analyze);
    if (p->parsed()) return cmd_partitions(partitions);
    if (s->parsed()) return cmd_selfcheck(selfcheck_model, selfcheck_seed);
    if (t->parsed()) return cmd_make_toy(toy);
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const dbd::ValidationError& err) {
    print_violations(err);
    return kExitData;
  } catch (const dbd::InvalidArgument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const dbd::ModelUnavailable& err) {
    std::cerr << "model unavailable: " << err.what() << "\n";
    return kExitModel;
  } catch (const dbd::ModelError& err) {
    std::cerr << "model error: " << err.what() << "\n";
    return kExitModel;
  } catch (const dbd::ContextMismatch& err) {
    std::cerr << "model error: " << err.what() << "\n";
    return kExitModel;
  } catch (const dbd::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
