#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace stratroute {

// 64-bit FNV-1a. `seed` perturbs the offset basis so that independent
// hash families can be derived from the same byte stream.
uint64_t fnv1a64(std::string_view bytes, uint64_t seed = 0);

uint64_t splitmix64(uint64_t x);

// Mixes two 64-bit values into one (order-sensitive).
uint64_t hash_combine(uint64_t a, uint64_t b);

// Maps a hash to [0, 1) using the top 53 bits.
double unit_double(uint64_t h);

// Shortest round-trip decimal encoding.
std::string format_double(double v);

std::string read_text_file(const std::filesystem::path& path);

// Writes to a temp file in the same directory, then renames into place.
// A failed write never leaves a partial file at `path`.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string lowercase_ascii(std::string_view s);
std::string_view trim_view(std::string_view s);

}  // namespace stratroute
