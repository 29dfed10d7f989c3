#include "stepplan/scorer.hpp"

#include <cmath>

#include "stepplan/error.hpp"

namespace stepplan {

std::string_view to_string(MethodKind kind) {
  switch (kind) {
    case MethodKind::greedy: return "greedy";
    case MethodKind::beam: return "beam";
    case MethodKind::nucleus: return "nucleus";
  }
  return "greedy";
}

MethodKind method_kind_from_string(std::string_view text) {
  if (text == "greedy") return MethodKind::greedy;
  if (text == "beam") return MethodKind::beam;
  if (text == "nucleus") return MethodKind::nucleus;
  throw ValidationError("unknown decoding method \"" + std::string(text) + "\"");
}

DecodingMethod DecodingMethod::greedy(std::uint64_t seed) {
  DecodingMethod m;
  m.kind = MethodKind::greedy;
  m.seed = seed;
  return m;
}

DecodingMethod DecodingMethod::beam(int width, std::uint64_t seed) {
  DecodingMethod m;
  m.kind = MethodKind::beam;
  m.beam_width = width;
  m.seed = seed;
  return m;
}

DecodingMethod DecodingMethod::nucleus(double top_p, double temperature, std::uint64_t seed) {
  DecodingMethod m;
  m.kind = MethodKind::nucleus;
  m.top_p = top_p;
  m.temperature = temperature;
  m.seed = seed;
  return m;
}

void DecodingMethod::validate() const {
  switch (kind) {
    case MethodKind::greedy:
      if (beam_width || top_p || temperature)
        throw ValidationError("greedy method takes no beam_width/top_p/temperature");
      break;
    case MethodKind::beam:
      if (!beam_width || *beam_width < 1) throw ValidationError("beam method requires beam_width >= 1");
      if (top_p || temperature) throw ValidationError("beam method takes no top_p/temperature");
      break;
    case MethodKind::nucleus:
      if (!top_p || !(*top_p > 0.0 && *top_p <= 1.0))
        throw ValidationError("nucleus method requires top_p in (0, 1]");
      if (!temperature || !(*temperature > 0.0) || !std::isfinite(*temperature))
        throw ValidationError("nucleus method requires temperature > 0");
      if (beam_width) throw ValidationError("nucleus method takes no beam_width");
      break;
  }
}

}  // namespace stepplan
