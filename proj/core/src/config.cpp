#include "qpjumps/config.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "qpjumps/errors.h"
#include "qpjumps/units.h"

namespace qpj {
namespace {

struct Suffix {
  std::string_view text;
  std::string_view dimension;
  double scale;
};

constexpr Suffix kSuffixes[] = {
    {"s", "time", 1.0},          {"ms", "time", 1e-3},       {"us", "time", 1e-6},
    {"ns", "time", 1e-9},        {"Hz", "frequency", 1.0},   {"kHz", "frequency", 1e3},
    {"MHz", "frequency", 1e6},   {"GHz", "frequency", 1e9},  {"K", "temperature", 1.0},
    {"mK", "temperature", 1e-3}, {"A", "current", 1.0},      {"uA", "current", 1e-6},
    {"nA", "current", 1e-9},     {"V", "voltage", 1.0},      {"mV", "voltage", 1e-3},
    {"uV", "voltage", 1e-6},
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Shortest text that reads back to the same double.
std::string format_double(double v) {
  char buf[40];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::int64_t parse_integer(std::string_view text, const std::string& key) {
  text = trim(text);
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(key, "expected an integer, got '" + std::string(text) + "'");
  }
  return out;
}

std::uint64_t parse_unsigned(std::string_view text, const std::string& key) {
  text = trim(text);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(key, "expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return out;
}

bool parse_bool(std::string_view text, const std::string& key) {
  text = trim(text);
  if (text == "on" || text == "true" || text == "yes" || text == "1") return true;
  if (text == "off" || text == "false" || text == "no" || text == "0") return false;
  throw ConfigError(key, "expected on/off, got '" + std::string(text) + "'");
}

using Setter = std::function<void(ScenarioConfig&, std::string_view, const std::string&)>;
using Getter = std::function<std::optional<std::string>(const ScenarioConfig&)>;

struct KeyDef {
  std::string_view name;
  std::string_view dimension;  // suffix family, "" for none
  std::string_view unit;       // SI unit shown in the reference page
  std::string_view description;
  Setter set;
  Getter get;
};

ThermalParams& thermal(ScenarioConfig& c) {
  if (!c.thermal) c.thermal.emplace();
  return *c.thermal;
}
GModulation& modulation(ScenarioConfig& c) {
  if (!c.modulation) c.modulation.emplace();
  return *c.modulation;
}
PulseTrain& train(ScenarioConfig& c) {
  if (!c.pulse_train) c.pulse_train.emplace();
  return *c.pulse_train;
}

// A plain double field reachable from the config through `access`.
template <typename Access>
KeyDef number_key(std::string_view name, std::string_view dim, std::string_view unit,
                  std::string_view description, Access access) {
  return KeyDef{
      name, dim, unit, description,
      [access, dim](ScenarioConfig& c, std::string_view v, const std::string& key) {
        access(c) = parse_quantity(v, dim, key);
      },
      [access](const ScenarioConfig& c) -> std::optional<std::string> {
        auto& cc = const_cast<ScenarioConfig&>(c);
        return format_double(access(cc));
      }};
}

// Same, for fields inside an optional section: omitted from output when the
// section is absent.
template <typename Present, typename Access>
KeyDef section_key(std::string_view name, std::string_view dim, std::string_view unit,
                   std::string_view description, Present present, Access access) {
  return KeyDef{
      name, dim, unit, description,
      [access, dim](ScenarioConfig& c, std::string_view v, const std::string& key) {
        access(c) = parse_quantity(v, dim, key);
      },
      [present, access](const ScenarioConfig& c) -> std::optional<std::string> {
        if (!present(c)) return std::nullopt;
        auto& cc = const_cast<ScenarioConfig&>(c);
        return format_double(access(cc));
      }};
}

template <typename Access>
KeyDef optional_thermal_key(std::string_view name, std::string_view unit, std::string_view description,
                            Access access) {
  return KeyDef{
      name, "", unit, description,
      [access](ScenarioConfig& c, std::string_view v, const std::string& key) {
        access(thermal(c)) = parse_quantity(v, "", key);
      },
      [access](const ScenarioConfig& c) -> std::optional<std::string> {
        if (!c.thermal) return std::nullopt;
        auto& t = const_cast<ThermalParams&>(*c.thermal);
        const std::optional<double>& field = access(t);
        if (!field) return std::nullopt;
        return format_double(*field);
      }};
}

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = [] {
    auto has_thermal = [](const ScenarioConfig& c) { return c.thermal.has_value(); };
    auto has_mod = [](const ScenarioConfig& c) { return c.modulation.has_value(); };
    auto has_train = [](const ScenarioConfig& c) { return c.pulse_train.has_value(); };
    std::vector<KeyDef> t;
    t.push_back({"rng_seed", "", "-", "Seed of the 64-bit random source (required).",
                 [](ScenarioConfig& c, std::string_view v, const std::string& k) { c.rng_seed = parse_unsigned(v, k); },
                 [](const ScenarioConfig& c) -> std::optional<std::string> { return std::to_string(c.rng_seed); }});
    t.push_back(number_key("duration", "time", "s", "Total simulated time (required).",
                           [](ScenarioConfig& c) -> double& { return c.duration; }));
    t.push_back(number_key("f_ge", "frequency", "Hz", "Qubit transition frequency.",
                           [](ScenarioConfig& c) -> double& { return c.qubit.f_ge; }));
    t.push_back(number_key("f_gap", "frequency", "Hz", "Superconducting gap Delta/h (default from V_2Delta = 0.4 mV).",
                           [](ScenarioConfig& c) -> double& { return c.qubit.f_gap; }));
    t.push_back(number_key("f_EL", "frequency", "Hz",
                           "Inductive energy E_L/h. Assumed value, chosen so x_qp = 4e-8 gives T1 ~ 100 us.",
                           [](ScenarioConfig& c) -> double& { return c.qubit.f_EL; }));
    t.push_back(number_key("gamma_other", "", "1/s", "Background (non-QP) relaxation rate.",
                           [](ScenarioConfig& c) -> double& { return c.qubit.gamma_other; }));
    t.push_back(number_key("T_eff", "temperature", "K", "Effective bath temperature setting upward jumps.",
                           [](ScenarioConfig& c) -> double& { return c.qubit.T_eff; }));
    t.push_back(number_key("readout_gamma_factor", "", "-",
                           "Multiplier on the relaxation rate under readout drive (1 = no effect).",
                           [](ScenarioConfig& c) -> double& { return c.qubit.readout_gamma_factor; }));
    t.push_back(number_key("n_bar", "", "-", "Mean readout cavity photon number.",
                           [](ScenarioConfig& c) -> double& { return c.meas.n_bar; }));
    t.push_back(KeyDef{"kappa_2pi", "frequency", "Hz", "Cavity linewidth kappa/2pi (stored as angular).",
                       [](ScenarioConfig& c, std::string_view v, const std::string& k) {
                         c.meas.kappa = units::angular_from_hz(parse_quantity(v, "frequency", k));
                       },
                       [](const ScenarioConfig& c) -> std::optional<std::string> {
                         return format_double(units::hz_from_angular(c.meas.kappa));
                       }});
    t.push_back(KeyDef{"chi_2pi", "frequency", "Hz", "Dispersive shift chi/2pi (stored as angular).",
                       [](ScenarioConfig& c, std::string_view v, const std::string& k) {
                         c.meas.chi = units::angular_from_hz(parse_quantity(v, "frequency", k));
                       },
                       [](const ScenarioConfig& c) -> std::optional<std::string> {
                         return format_double(units::hz_from_angular(c.meas.chi));
                       }});
    t.push_back(number_key("T_m", "time", "s", "Integration time per I/Q sample.",
                           [](ScenarioConfig& c) -> double& { return c.meas.T_m; }));
    t.push_back(number_key("eta", "", "-", "Total measurement efficiency, 0 < eta <= 1.",
                           [](ScenarioConfig& c) -> double& { return c.meas.eta; }));
    t.push_back(number_key("g", "", "1/s", "QP generation coefficient.",
                           [](ScenarioConfig& c) -> double& { return c.kinetics.g; }));
    t.push_back(number_key("s", "", "1/s", "Single-QP trapping/diffusion rate.",
                           [](ScenarioConfig& c) -> double& { return c.kinetics.s; }));
    t.push_back(number_key("r", "", "1/s", "Recombination coefficient acting on x_qp^2.",
                           [](ScenarioConfig& c) -> double& { return c.kinetics.r; }));
    t.push_back(number_key("N_cp", "", "-",
                           "Cooper pairs in the array. Derived: 1.5 QPs at x_qp = 4e-8.",
                           [](ScenarioConfig& c) -> double& { return c.kinetics.N_cp; }));
    t.push_back(KeyDef{"initial_qp", "", "-", "Initial QP count (default: nearest integer to the steady-state mean).",
                       [](ScenarioConfig& c, std::string_view v, const std::string& k) { c.initial_qp = parse_integer(v, k); },
                       [](const ScenarioConfig& c) -> std::optional<std::string> {
                         if (!c.initial_qp) return std::nullopt;
                         return std::to_string(*c.initial_qp);
                       }});
    t.push_back(number_key("dead_time", "time", "s", "Readout blanking after each pulse.",
                           [](ScenarioConfig& c) -> double& { return c.dead_time; }));

    t.push_back(KeyDef{"thermal", "", "-", "Enable substrate heating by pulses (on/off).",
                       [](ScenarioConfig& c, std::string_view v, const std::string& k) {
                         if (parse_bool(v, k)) {
                           thermal(c);
                         } else {
                           c.thermal.reset();
                         }
                       },
                       [](const ScenarioConfig& c) -> std::optional<std::string> {
                         if (!c.thermal) return std::nullopt;
                         return std::string("on");
                       }});
    auto th = [](auto member) {
      return [member](ScenarioConfig& c) -> double& { return thermal(c).*member; };
    };
    t.push_back(section_key("P_diss", "", "W", "Power dissipated in the antenna junctions during a pulse.", has_thermal,
                            th(&ThermalParams::P_diss)));
    t.push_back(section_key("C_heat", "", "J/(g K)", "Substrate specific heat.", has_thermal, th(&ThermalParams::C_heat)));
    t.push_back(section_key("mass", "", "g", "Substrate mass.", has_thermal, th(&ThermalParams::mass)));
    t.push_back(section_key("tau_th", "time", "s", "Substrate thermal equilibration time.", has_thermal,
                            th(&ThermalParams::tau_th)));
    t.push_back(optional_thermal_key("cond_G", "W/(m K)", "Substrate heat conductivity (optional).",
                                     [](ThermalParams& p) -> std::optional<double>& { return p.cond_G; }));
    t.push_back(optional_thermal_key("area_A", "m^2", "Contact cross-section to the sink (optional).",
                                     [](ThermalParams& p) -> std::optional<double>& { return p.area_A; }));
    t.push_back(optional_thermal_key("length_l", "m", "Distance to the thermal sink (optional).",
                                     [](ThermalParams& p) -> std::optional<double>& { return p.length_l; }));
    t.push_back(section_key("I_c", "current", "A", "Antenna junction critical current.", has_thermal,
                            th(&ThermalParams::I_c)));
    t.push_back(section_key("V_2Delta", "voltage", "V", "Gap voltage 2 Delta / e.", has_thermal,
                            th(&ThermalParams::V_2Delta)));
    t.push_back(section_key("capture_fraction", "", "-",
                            "Fraction of generated QPs captured by the array (calibration knob).", has_thermal,
                            th(&ThermalParams::capture_fraction)));

    t.push_back(KeyDef{"g_modulation", "", "-", "Enable the slow two-state telegraph on g (on/off).",
                       [](ScenarioConfig& c, std::string_view v, const std::string& k) {
                         if (parse_bool(v, k)) {
                           modulation(c);
                         } else {
                           c.modulation.reset();
                         }
                       },
                       [](const ScenarioConfig& c) -> std::optional<std::string> {
                         if (!c.modulation) return std::nullopt;
                         return std::string("on");
                       }});
    auto md = [](auto member) {
      return [member](ScenarioConfig& c) -> double& { return modulation(c).*member; };
    };
    t.push_back(section_key("g_low_factor", "", "-", "Multiplier on g in the low (quiet) state.", has_mod,
                            md(&GModulation::low_factor)));
    t.push_back(section_key("g_high_factor", "", "-", "Multiplier on g in the high (noisy) state.", has_mod,
                            md(&GModulation::high_factor)));
    t.push_back(section_key("g_mean_low", "time", "s", "Mean dwell of the modulator in the low state.", has_mod,
                            md(&GModulation::mean_low_s)));
    t.push_back(section_key("g_mean_high", "time", "s", "Mean dwell of the modulator in the high state.", has_mod,
                            md(&GModulation::mean_high_s)));
    t.push_back(KeyDef{"g_start_high", "", "-", "Modulator starts in the high state (on/off).",
                       [](ScenarioConfig& c, std::string_view v, const std::string& k) {
                         modulation(c).start_high = parse_bool(v, k);
                       },
                       [](const ScenarioConfig& c) -> std::optional<std::string> {
                         if (!c.modulation) return std::nullopt;
                         return std::string(c.modulation->start_high ? "on" : "off");
                       }});

    auto tr = [](auto member) {
      return [member](ScenarioConfig& c) -> double& { return train(c).*member; };
    };
    t.push_back(KeyDef{"pulse_train_count", "", "-", "Number of periodic QP generation pulses.",
                       [](ScenarioConfig& c, std::string_view v, const std::string& k) {
                         train(c).count = parse_integer(v, k);
                       },
                       [](const ScenarioConfig& c) -> std::optional<std::string> {
                         if (!c.pulse_train) return std::nullopt;
                         return std::to_string(c.pulse_train->count);
                       }});
    t.push_back(section_key("pulse_train_start", "time", "s", "Start of the first periodic pulse.", has_train,
                            tr(&PulseTrain::first_start)));
    t.push_back(section_key("pulse_train_period", "time", "s", "Pulse repetition period.", has_train,
                            tr(&PulseTrain::period)));
    t.push_back(section_key("pulse_train_length", "time", "s", "Pulse length t_G.", has_train,
                            tr(&PulseTrain::length)));
    t.push_back(KeyDef{"pulse_train_qp", "", "-",
                       "Mean QPs injected per periodic pulse (default: from thermal parameters).",
                       [](ScenarioConfig& c, std::string_view v, const std::string& k) {
                         train(c).qp_count = parse_quantity(v, "", k);
                       },
                       [](const ScenarioConfig& c) -> std::optional<std::string> {
                         if (!c.pulse_train || !c.pulse_train->qp_count) return std::nullopt;
                         return format_double(*c.pulse_train->qp_count);
                       }});
    return t;
  }();
  return table;
}

const KeyDef* find_key(std::string_view name) {
  for (const auto& k : key_table()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

Pulse parse_pulse(std::string_view value, const std::string& key) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = value.find(',', pos);
    parts.push_back(trim(value.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (parts.size() != 3) throw ConfigError(key, "expected 'start, length, qp_count'");
  Pulse p;
  p.start = parse_quantity(parts[0], "time", key);
  p.length = parse_quantity(parts[1], "time", key);
  p.qp_count = parse_quantity(parts[2], "", key);
  return p;
}

struct Line {
  std::string key;
  std::string value;
  std::size_t line_no;
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      const std::size_t eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError("", "line " + std::to_string(line_no) + ": expected 'key = value'");
      }
      out.push_back({std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), line_no});
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

}  // namespace

double parse_quantity(std::string_view text, std::string_view dimension, const std::string& key) {
  text = trim(text);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr == text.data()) {
    throw ConfigError(key, "expected a number, got '" + std::string(text) + "'");
  }
  const std::string_view suffix = trim(std::string_view(ptr, text.data() + text.size() - ptr));
  if (suffix.empty()) return value;
  for (const auto& s : kSuffixes) {
    if (s.text == suffix) {
      if (dimension.empty() || s.dimension != dimension) {
        throw ConfigError(key, "unit '" + std::string(suffix) + "' not allowed here");
      }
      return value * s.scale;
    }
  }
  throw ConfigError(key, "unknown unit '" + std::string(suffix) + "'");
}

ScenarioConfig parse_config(std::string_view text, const std::vector<std::string>& overrides) {
  return parse_config_layered({}, text, overrides);
}

ScenarioConfig parse_config_layered(const std::vector<std::string>& base, std::string_view text,
                                    const std::vector<std::string>& overrides,
                                    const std::function<void(ScenarioConfig&)>& adjust) {
  ScenarioConfig cfg;
  std::set<std::string> seen;
  auto apply = [&](const Line& line, bool is_override) {
    if (line.key == "pulse") {
      cfg.pulses.push_back(parse_pulse(line.value, line.key));
      return;
    }
    const KeyDef* def = find_key(line.key);
    if (def == nullptr) throw ConfigError(line.key, "unknown key");
    if (!is_override && seen.count(line.key) != 0) throw ConfigError(line.key, "given more than once");
    seen.insert(line.key);
    if (line.value.empty()) throw ConfigError(line.key, "missing value");
    def->set(cfg, line.value, line.key);
  };
  auto apply_overrides = [&](const std::vector<std::string>& list) {
    for (const auto& o : list) {
      auto lines = split_lines(o);
      if (lines.size() != 1) throw ConfigError("", "override '" + o + "' is not a single 'key = value'");
      apply(lines.front(), true);
    }
  };
  apply_overrides(base);
  std::set<std::string> from_base;
  from_base.swap(seen);
  for (const auto& line : split_lines(text)) apply(line, false);
  seen.insert(from_base.begin(), from_base.end());
  apply_overrides(overrides);
  for (const char* required : {"rng_seed", "duration"}) {
    if (seen.count(required) == 0) throw ConfigError(required, "required key missing");
  }
  if (adjust) adjust(cfg);
  cfg.validate();
  return cfg;
}

std::string serialize_config(const ScenarioConfig& config) {
  std::ostringstream out;
  for (const auto& k : key_table()) {
    if (auto v = k.get(config)) out << k.name << " = " << *v << '\n';
  }
  for (const auto& p : config.pulses) {
    out << "pulse = " << format_double(p.start) << ", " << format_double(p.length) << ", "
        << format_double(p.qp_count) << '\n';
  }
  return out.str();
}

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const ScenarioConfig& config) { return fnv1a64_hex(serialize_config(config)); }

std::string config_reference_markdown() {
  ScenarioConfig defaults;
  defaults.thermal.emplace();
  defaults.modulation.emplace();
  defaults.pulse_train.emplace();
  std::ostringstream out;
  out << "# Scenario configuration keys\n\n"
      << "One `key = value` per line, `#` starts a comment. Values are SI unless a unit suffix is given.\n"
      << "Accepted suffixes: time `s ms us ns`, frequency `Hz kHz MHz GHz`, temperature `K mK`, "
      << "current `A uA nA`, voltage `V mV uV`.\n"
      << "Setting any key of an optional section (thermal, g modulation, pulse train) enables that section.\n\n"
      << "| key | unit | suffixes | default | meaning |\n|---|---|---|---|---|\n";
  for (const auto& k : key_table()) {
    std::string def = "-";
    if (k.name == "rng_seed" || k.name == "duration") {
      def = "required";
    } else if (auto v = k.get(defaults)) {
      def = *v;
    }
    out << "| `" << k.name << "` | " << k.unit << " | " << (k.dimension.empty() ? "-" : k.dimension) << " | "
        << def << " | " << k.description << " |\n";
  }
  out << "| `pulse` | s, s, - | time, time, - | - | Repeatable: `start, length, qp_count` of one pulse. |\n";
  return out.str();
}

}  // namespace qpj
