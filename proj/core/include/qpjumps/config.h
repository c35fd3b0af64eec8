#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "qpjumps/params.h"

namespace qpj {

// Scenario files are flat `key = value` text with `#` comments. Values are SI
// unless a unit suffix is given (`us`, `ms`, `MHz`, `mK`, ...). Only `rng_seed`
// and `duration` are required; everything else has a documented default.
//
// `overrides` are extra `key = value` lines applied after the file, replacing
// earlier values. Throws ConfigError naming the key on any problem.
ScenarioConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {});

// As parse_config, with `base` lines applied first. File keys may repeat base
// keys without error, so named presets sit below the file and the overrides.
// `adjust` runs on the parsed values just before validation.
ScenarioConfig parse_config_layered(const std::vector<std::string>& base, std::string_view text,
                                    const std::vector<std::string>& overrides = {},
                                    const std::function<void(ScenarioConfig&)>& adjust = {});

// Canonical text form. parse_config(serialize_config(c)) reproduces c, except
// that kappa and chi (written as kappa/2pi, chi/2pi) may move by one ulp; the
// text is a fixed point of parse-then-serialize.
std::string serialize_config(const ScenarioConfig& config);

// FNV-1a 64 of the canonical text, as 16 lowercase hex digits.
std::string config_hash(const ScenarioConfig& config);

// FNV-1a 64 of arbitrary bytes, as 16 lowercase hex digits.
std::string fnv1a64_hex(std::string_view bytes);

// Markdown table of every recognised key with its unit, default and meaning.
std::string config_reference_markdown();

// Parses a single value with an optional unit suffix, e.g. "4.7 MHz" -> 4.7e6.
// `dimension` is one of "time", "frequency", "temperature", "current",
// "voltage" or "" (no suffix accepted).
double parse_quantity(std::string_view text, std::string_view dimension, const std::string& key);

}  // namespace qpj
