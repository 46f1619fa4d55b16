#pragma once

namespace markov {

inline constexpr const char* kVersion = "markov 0.1.0";

}  // namespace markov
