#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace saia {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

/// Splits one CSV line on commas. No quoting: ids and numbers never contain commas.
std::vector<std::string_view> split_csv_line(std::string_view line);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

/// 64-bit FNV-1a, stable across platforms; used for manifests and seed derivation.
std::uint64_t fnv1a64(std::string_view bytes);

/// SplitMix64 finalizer; combines a base seed with a stream index.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace saia
