#pragma once

// Three-video metrics fixture shared by several test binaries. Scores are
// frozen from tests/oracles/metrics_fixture.py (exact fractions).

#include <filesystem>

#ifndef MUG_FIXTURE_DIR
#error "MUG_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace mug::fixture {

inline const std::filesystem::path kMetricsDir = std::filesystem::path(MUG_FIXTURE_DIR) / "metrics";
inline constexpr std::size_t kSegments = 10;
inline constexpr std::size_t kClasses = 3;

// A, V, AV, Type@AV, Event@AV
inline constexpr double kSegment[5] = {214.0 / 315.0, 97.0 / 104.0, 29.0 / 42.0, 75431.0 / 98280.0, 8402.0 / 10695.0};
inline constexpr double kEvent[5] = {1.0 / 2.0, 8.0 / 9.0, 1.0 / 3.0, 31.0 / 54.0, 47.0 / 63.0};

}  // namespace mug::fixture
