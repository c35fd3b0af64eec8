#include "qpjumps/io.h"

#include <algorithm>
#include <array>
#include <optional>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "qpjumps/errors.h"

namespace qpj::io {
namespace {

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.append(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::string_view in, std::size_t offset) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), in.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    out.push_back(trim(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::string opt(const std::optional<double>& v) {
  return v ? format_value(*v) : std::string("nan");
}

}  // namespace

std::string encode_iq_record(const IQRecord& record) {
  std::string out;
  out.reserve(kIqHeaderSize + record.size() * 16);
  out.append("QJIQ", 4);
  put_le<std::uint32_t>(out, kIqFormatVersion);
  put_le<double>(out, record.T_m);
  put_le<std::uint64_t>(out, record.size());
  for (std::size_t k = 0; k < record.size(); ++k) {
    put_le<double>(out, record.I[k]);
    put_le<double>(out, record.Q[k]);
  }
  return out;
}

IQRecord decode_iq_record(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != "QJIQ") throw FormatError(0, "bad magic, expected 'QJIQ'");
  if (bytes.size() < kIqHeaderSize) throw FormatError(bytes.size(), "truncated header");
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kIqFormatVersion) throw FormatError(4, "unsupported version " + std::to_string(version));
  IQRecord rec;
  rec.T_m = get_le<double>(bytes, 8);
  if (!(rec.T_m > 0.0) || !std::isfinite(rec.T_m)) throw FormatError(8, "sample period must be positive");
  const auto n = get_le<std::uint64_t>(bytes, 16);
  const std::uint64_t payload = bytes.size() - kIqHeaderSize;
  if (n > payload / 16 || payload != n * 16) {
    throw FormatError(16, "sample count " + std::to_string(n) + " does not match " + std::to_string(payload) +
                              " payload bytes");
  }
  rec.I.resize(n);
  rec.Q.resize(n);
  for (std::uint64_t k = 0; k < n; ++k) {
    rec.I[k] = get_le<double>(bytes, kIqHeaderSize + 16 * k);
    rec.Q[k] = get_le<double>(bytes, kIqHeaderSize + 16 * k + 8);
  }
  return rec;
}

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string truth_csv(const TruthTrace& truth) {
  std::string out = "time_s,state,N\n";
  for (const auto& e : truth.entries) {
    out += format_value(e.time);
    out += ',';
    out += state_char(e.state);
    out += ',';
    out += std::to_string(e.N);
    out += '\n';
  }
  return out;
}

std::string qp_trace_csv(const QpEventTrace& trace) {
  std::string out = "time_s,event,N\n";
  out += "0," + std::string("initial") + "," + std::to_string(trace.initial_N) + "\n";
  for (const auto& e : trace.events) {
    out += format_value(e.time) + "," + std::string(to_string(e.kind)) + "," + std::to_string(e.N) + "\n";
  }
  return out;
}

std::string ode_csv(std::span<const double> t, std::span<const double> x) {
  std::string out = "time_s,x_qp\n";
  for (std::size_t i = 0; i < t.size() && i < x.size(); ++i) out += format_value(t[i]) + "," + format_value(x[i]) + "\n";
  return out;
}

std::string states_csv(const StateEstimate& est) {
  std::string out = "t_s,state\n";
  for (std::size_t k = 0; k < est.size(); ++k) {
    out += format_value(static_cast<double>(k) * est.T_m);
    out += ',';
    out += est.valid[k] ? state_char(est.states[k]) : 'x';
    out += '\n';
  }
  return out;
}

std::string histogram_csv(const DwellHistogram& hist, std::span<const double> predicted) {
  std::string out = "bin_lo_s,bin_hi_s,M,P\n";
  for (std::size_t i = 0; i < hist.bins(); ++i) {
    out += format_value(hist.edges[i]) + "," + format_value(hist.edges[i + 1]) + "," + format_value(hist.counts[i]) +
           "," + format_value(i < predicted.size() ? predicted[i] : std::nan("")) + "\n";
  }
  return out;
}

std::string report_csv(const std::vector<WindowStats>& windows) {
  std::string out = "t_s,tau_g_s,tau_e_s,F,one_minus_F,sigma_z\n";
  for (const auto& w : windows) {
    out += format_value(w.t_start) + "," + opt(w.tau_g) + "," + opt(w.tau_e) + "," + opt(w.F_g) + "," +
           opt(w.one_minus_F_g) + "," + opt(w.sigma_z) + "\n";
  }
  return out;
}

std::string key_value_csv(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::string out = "key,value\n";
  for (const auto& [k, v] : rows) out += k + "," + v + "\n";
  return out;
}

const std::vector<double>& CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return columns[i];
  }
  throw FormatError(1, "missing column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split(line, ',');
    if (table.header.empty()) {
      for (auto f : fields) table.header.emplace_back(f);
      table.columns.resize(fields.size());
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw FormatError(line_no, "expected " + std::to_string(table.header.size()) + " fields");
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const std::string_view f = fields[i];
      double v = std::nan("");
      if (!f.empty() && f != "nan" && f != "NaN") {
        auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
        if (ec != std::errc() || ptr != f.data() + f.size()) {
          throw FormatError(line_no, "non-numeric field '" + std::string(f) + "'");
        }
      }
      table.columns[i].push_back(v);
    }
  }
  if (table.header.empty()) throw FormatError(0, "empty CSV");
  return table;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::system_error(errno, std::generic_category(), "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace qpj::io
