#pragma once

// Published decoding profiles and the alpha-schedule flag syntax.

#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dbd/core.hpp"

namespace dbd {

/// Parses "V1:T1,V2:T2,...,Vn": alpha V1 for t <= T1, V2 for T1 < t <= T2,
/// ..., Vn afterwards. A bare "V" is a constant schedule.
inline AlphaSchedule parse_alpha_schedule(std::string_view text) {
  auto fail = [&](const std::string& why) -> ValidationError {
    return ValidationError("alpha schedule '" + std::string(text) + "': " + why);
  };
  auto to_double = [&](std::string_view s) {
    std::string tmp(s);
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tmp, &used);
    } catch (const std::exception&) {
      throw fail("'" + tmp + "' is not a number");
    }
    if (used != tmp.size() || !std::isfinite(v)) throw fail("'" + tmp + "' is not a number");
    return v;
  };
  auto to_int = [&](std::string_view s) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw fail("'" + std::string(s) + "' is not a step");
    return v;
  };

  AlphaSchedule schedule;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string_view piece = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    if (piece.empty()) throw fail("empty segment");
    const std::size_t colon = piece.find(':');
    AlphaSegment seg;
    if (colon == std::string_view::npos) {
      seg.value = to_double(piece);
    } else {
      seg.value = to_double(piece.substr(0, colon));
      seg.until_step = to_int(piece.substr(colon + 1));
    }
    schedule.push_back(seg);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (schedule.back().until_step) throw fail("last segment must not have a step bound");
  SearchConfig probe;
  probe.alpha_schedule = schedule;
  if (auto v = validate(probe); !v.empty()) throw ValidationError("alpha schedule '" + std::string(text) + "' invalid", v);
  return schedule;
}

/// Inverse of parse_alpha_schedule.
inline std::string format_alpha_schedule(const AlphaSchedule& schedule) {
  std::string out;
  for (const auto& seg : schedule) {
    if (!out.empty()) out += ',';
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, seg.value);
    out.append(buf, p);
    if (seg.until_step) out += ':' + std::to_string(*seg.until_step);
  }
  return out;
}

struct DecodeProfile {
  std::string name;
  SearchConfig search;
  SelectionConfig selection;
  bool direct_fact_suffix = false;  // append the "give me the fact directly" instruction
};

/// 5 beams, top-k 6, alpha 10 for t <= 3 then 5.
inline DecodeProfile llava_profile() {
  DecodeProfile p;
  p.name = "llava-1.5";
  p.search.beams = 5;
  p.search.top_k = 6;
  p.search.alpha_schedule = {{3, 10.0}, {std::nullopt, 5.0}};
  p.selection = {5.0, 10};
  return p;
}

inline DecodeProfile mplug_profile() {
  DecodeProfile p = llava_profile();
  p.name = "mplug-owl2";
  return p;
}

/// 7 beams, top-k 7, constant alpha 4, direct-fact suffix on prompts.
inline DecodeProfile minigpt4_profile() {
  DecodeProfile p;
  p.name = "minigpt-4";
  p.search.beams = 7;
  p.search.top_k = 7;
  p.search.alpha_schedule = {{std::nullopt, 4.0}};
  p.selection = {5.0, 10};
  p.direct_fact_suffix = true;
  return p;
}

inline std::vector<DecodeProfile> published_profiles() {
  return {llava_profile(), mplug_profile(), minigpt4_profile()};
}

inline std::optional<DecodeProfile> find_profile(std::string_view name) {
  for (auto& p : published_profiles())
    if (p.name == name) return p;
  return std::nullopt;
}

}  // namespace dbd
