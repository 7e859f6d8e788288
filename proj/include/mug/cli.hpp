#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mug::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;  // bad input, failed check, mug::Error
inline constexpr int kExitInternal = 2;

// `args` excludes the program name, e.g. {"synth", "--seed", "7", "--out", "d"}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mug::cli
