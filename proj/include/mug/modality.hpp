#pragma once

#include <string_view>

namespace mug {

enum class Modality { Audio, Visual };

inline constexpr std::string_view modality_code(Modality m) { return m == Modality::Audio ? "a" : "v"; }
inline constexpr Modality other(Modality m) { return m == Modality::Audio ? Modality::Visual : Modality::Audio; }

}  // namespace mug
