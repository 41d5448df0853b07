#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "kanneal/run_config.hpp"

namespace kanneal {

/// Flat dotted-key configuration, e.g. `cooling.E = 1.5`. Keys sort
/// lexicographically, which is also the canonical order.
using ConfigMap = std::map<std::string, std::string>;

/// Parses `key = value` lines; `#` starts a comment. Throws UsageError with
/// the line number on malformed input or a repeated key.
ConfigMap parse_config_text(std::string_view text);

/// Applies one `key=value` assignment (as given to --set).
void apply_assignment(ConfigMap& cfg, std::string_view assignment);

/// `key = value\n` per entry, in key order.
std::string canonical_text(const ConfigMap& cfg);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// True for keys that some part of the tool reads.
bool is_declared_key(std::string_view key);

/// Builds a RunConfig; keys of other sections (sweep.*, depth.*) are ignored,
/// anything undeclared is rejected. Throws UsageError naming the key.
RunConfig run_config_from(const ConfigMap& cfg);

/// Inverse of run_config_from on the effective configuration.
ConfigMap to_config_map(const RunConfig& cfg);

/// FNV-1a of canonical_text(to_config_map(cfg)).
std::uint64_t config_hash(const RunConfig& cfg);

std::string hex64(std::uint64_t v);

/// Shortest round-trip decimal form ('.' separator, locale independent).
std::string format_shortest(double v);

/// 17 significant digits ('.' separator, locale independent).
std::string format_fixed17(double v);

double parse_double(std::string_view key, std::string_view text);
std::uint64_t parse_u64(std::string_view key, std::string_view text);
std::vector<double> parse_double_list(std::string_view key, std::string_view text);
std::vector<std::string> parse_string_list(std::string_view text);

}  // namespace kanneal
