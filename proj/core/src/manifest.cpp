#include "qpjumps/manifest.h"

#include <exception>

#include <json.hpp>

#include "qpjumps/config.h"
#include "qpjumps/errors.h"
#include "qpjumps/io.h"

namespace qpj {

std::string manifest_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["tool_version"] = m.tool_version;
  j["command"] = m.command;
  j["config_hash"] = m.config_hash;
  j["rng_seed"] = m.rng_seed;
  j["inputs"] = m.inputs;
  auto outputs = nlohmann::ordered_json::array();
  for (const auto& o : m.outputs) {
    outputs.push_back({{"path", o.path}, {"hash", o.hash}, {"bytes", o.bytes}});
  }
  j["outputs"] = outputs;
  j["wall_clock_s"] = m.wall_clock_s;
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.counts) counts[k] = v;
  j["counts"] = counts;
  return j.dump(2) + "\n";
}

RunManifest parse_manifest(std::string_view text) {
  RunManifest m;
  try {
    const auto j = nlohmann::ordered_json::parse(text);
    m.tool_version = j.at("tool_version").get<std::string>();
    m.command = j.at("command").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    m.inputs = j.at("inputs").get<std::vector<std::string>>();
    for (const auto& o : j.at("outputs")) {
      m.outputs.push_back({o.at("path").get<std::string>(), o.at("hash").get<std::string>(),
                           o.at("bytes").get<std::uint64_t>()});
    }
    m.wall_clock_s = j.at("wall_clock_s").get<double>();
    for (const auto& [k, v] : j.at("counts").items()) m.counts.emplace_back(k, v.get<std::uint64_t>());
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(e.byte, std::string("manifest: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(0, std::string("manifest: ") + e.what());
  }
  return m;
}

std::vector<std::string> verify_outputs(const RunManifest& manifest, const std::filesystem::path& dir) {
  std::vector<std::string> bad;
  for (const auto& o : manifest.outputs) {
    try {
      const std::string bytes = io::read_file(dir / o.path);
      if (bytes.size() != o.bytes || fnv1a64_hex(bytes) != o.hash) bad.push_back(o.path);
    } catch (const std::exception&) {
      bad.push_back(o.path);
    }
  }
  return bad;
}

}  // namespace qpj
