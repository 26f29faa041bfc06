#pragma once
#include <cstdint>
#include <string>
#include <string_view>

namespace wrgsim {

// Shortest round-trip decimal form; identical bytes on every run.
std::string format_double(double v);
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace wrgsim
