#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vseg {

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// Shortest representation that round-trips exactly.
std::string format_double(double v);
/// Fixed notation with `digits` decimals, for CSV columns.
std::string format_fixed(double v, int digits);

double parse_double(std::string_view s);
long long parse_int(std::string_view s);
bool parse_bool(std::string_view s);

/// splitmix64 step, used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace vseg
