#pragma once

// Run manifest written next to every output set, last and atomically.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qpj {

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr std::string_view kManifestName = "manifest.json";

struct ManifestOutput {
  std::string path;  // relative to the output directory
  std::string hash;  // FNV-1a 64 of the file bytes
  std::uint64_t bytes = 0;
};

struct RunManifest {
  std::string tool_version{kToolVersion};
  std::string command;
  std::string config_hash;
  std::uint64_t rng_seed = 0;
  std::vector<std::string> inputs;
  std::vector<ManifestOutput> outputs;
  double wall_clock_s = 0.0;
  std::vector<std::pair<std::string, std::uint64_t>> counts;  // per-stage record counts
};

std::string manifest_json(const RunManifest& manifest);

// Throws FormatError on malformed JSON or missing fields.
RunManifest parse_manifest(std::string_view json);

// Checks every listed output under `dir` against its recorded hash. Returns the
// relative paths that are missing or differ.
std::vector<std::string> verify_outputs(const RunManifest& manifest, const std::filesystem::path& dir);

}  // namespace qpj
