#pragma once

// File formats: the binary I/Q record, CSV tables, and atomic file output.
//
// I/Q record layout, little-endian:
//   offset 0   char[4] magic "QJIQ"
//   offset 4   u32     version (1)
//   offset 8   f64     T_m, seconds
//   offset 16  u64     sample count n
//   offset 24  f64[2n] interleaved I, Q

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "qpjumps/analysis.h"
#include "qpjumps/jump_sim.h"
#include "qpjumps/kinetics.h"

namespace qpj::io {

inline constexpr std::uint32_t kIqFormatVersion = 1;
inline constexpr std::size_t kIqHeaderSize = 24;

std::string encode_iq_record(const IQRecord& record);
// Throws FormatError carrying the byte offset of the first bad field.
IQRecord decode_iq_record(std::string_view bytes);

// "%.9g"; NaN prints as "nan".
std::string format_value(double v);

std::string truth_csv(const TruthTrace& truth);              // time_s,state,N
std::string qp_trace_csv(const QpEventTrace& trace);         // time_s,event,N
std::string ode_csv(std::span<const double> t, std::span<const double> x);  // time_s,x_qp
std::string states_csv(const StateEstimate& est);            // t_s,state (x = blanked)
std::string histogram_csv(const DwellHistogram& hist, std::span<const double> predicted);  // bin_lo_s,bin_hi_s,M,P
std::string report_csv(const std::vector<WindowStats>& windows);  // t_s,tau_g_s,tau_e_s,F,one_minus_F,sigma_z

// `key,value` lines.
std::string key_value_csv(const std::vector<std::pair<std::string, std::string>>& rows);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  const std::vector<double>& column(std::string_view name) const;
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

// Numeric CSV with a header row. "nan" and empty fields read as NaN. Throws
// FormatError with the line number on malformed rows.
CsvTable parse_csv(std::string_view text);

std::string read_file(const std::filesystem::path& path);

// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace qpj::io
