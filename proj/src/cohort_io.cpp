#include "lvef/cohort_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "lvef/errors.hpp"

namespace lvef {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_number(std::string_view text, std::string_view column, std::size_t line) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw Error(ErrorCode::row,
                "line " + std::to_string(line) + ": column " + std::string(column) +
                    ": cannot parse '" + std::string(text) + "' as a finite number",
                line);
  }
  return value;
}

[[noreturn]] void row_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::row, "line " + std::to_string(line) + ": " + what, line);
}

bool on_grid(double value, double grid) {
  const double q = value / grid;
  return std::abs(q - std::round(q)) < 1e-6;
}

}  // namespace

CohortData parse_cohort_csv(std::istream& in) {
  CohortData data;
  std::string line;
  std::size_t line_no = 0;

  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!trim(line).empty()) {
      for (auto f : split_fields(line)) header.emplace_back(f);
      break;
    }
  }
  if (header.empty()) throw Error(ErrorCode::schema, "cohort CSV has no header row");

  constexpr std::array<std::string_view, 5> required{"patient_id", "visual_lvef", "simpson_lvef",
                                                     "time_days", "event"};
  std::array<std::size_t, 5> col{};
  for (std::size_t r = 0; r < required.size(); ++r) {
    const auto it = std::find(header.begin(), header.end(), required[r]);
    if (it == header.end()) {
      throw Error(ErrorCode::schema, "cohort CSV is missing column '" +
                                         std::string(required[r]) + "'");
    }
    col[r] = static_cast<std::size_t>(it - header.begin());
  }
  std::optional<std::size_t> true_col;
  if (const auto it = std::find(header.begin(), header.end(), "true_lvef"); it != header.end()) {
    true_col = static_cast<std::size_t>(it - header.begin());
  }

  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      row_error(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                             std::to_string(fields.size()));
    }
    PairedMeasurement m;
    m.patient_id = std::string(fields[col[0]]);
    if (m.patient_id.empty()) row_error(line_no, "empty patient_id");
    m.visual_lvef = parse_number(fields[col[1]], "visual_lvef", line_no);
    m.simpson_lvef = parse_number(fields[col[2]], "simpson_lvef", line_no);
    m.time_days = parse_number(fields[col[3]], "time_days", line_no);
    const double event = parse_number(fields[col[4]], "event", line_no);

    if (!(m.visual_lvef >= 0.0 && m.visual_lvef <= 100.0)) {
      row_error(line_no, "visual_lvef outside [0, 100]");
    }
    if (!(m.simpson_lvef >= 0.0 && m.simpson_lvef <= 100.0)) {
      row_error(line_no, "simpson_lvef outside [0, 100]");
    }
    if (!(m.time_days > 0.0)) row_error(line_no, "time_days must be > 0");
    if (event != 0.0 && event != 1.0) row_error(line_no, "event must be 0 or 1");
    m.event = event == 1.0;

    if (!seen.insert(m.patient_id).second) {
      throw Error(ErrorCode::duplicate,
                  "line " + std::to_string(line_no) + ": duplicate patient_id '" + m.patient_id +
                      "'",
                  line_no);
    }
    if (!on_grid(m.visual_lvef, 5.0)) {
      data.warnings.push_back("line " + std::to_string(line_no) + ": visual_lvef " +
                              format_fixed4(m.visual_lvef) + " for patient " + m.patient_id +
                              " is off the 5% reporting grid used for visual estimates");
    }
    if (true_col) data.true_lvef.push_back(parse_number(fields[*true_col], "true_lvef", line_no));
    data.records.push_back(std::move(m));
  }
  if (data.records.empty()) data.warnings.push_back("cohort CSV contains no data rows");
  return data;
}

CohortData read_cohort_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open cohort file " + path.string());
  return parse_cohort_csv(in);
}

std::string format_fixed4(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  // Avoid emitting "-0.0000".
  if (std::string_view(buf) == "-0.0000") return "0.0000";
  return buf;
}

void write_cohort_csv(std::ostream& out, std::span<const PairedMeasurement> records,
                      std::span<const double> true_lvef) {
  const bool with_truth = !true_lvef.empty();
  if (with_truth && true_lvef.size() != records.size()) {
    throw Error(ErrorCode::invalid_parameter, "true_lvef length does not match records");
  }
  out << kCohortHeader << (with_truth ? ",true_lvef" : "") << '\n';
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& m = records[i];
    out << m.patient_id << ',' << format_fixed4(m.visual_lvef) << ','
        << format_fixed4(m.simpson_lvef) << ',' << format_fixed4(m.time_days) << ','
        << (m.event ? 1 : 0);
    if (with_truth) out << ',' << format_fixed4(true_lvef[i]);
    out << '\n';
  }
}

void write_fused_csv(std::ostream& out, std::span<const PairedMeasurement> records,
                     std::span<const FusedEstimate> fused) {
  if (records.size() != fused.size()) {
    throw Error(ErrorCode::invalid_parameter, "fused estimates do not align with records");
  }
  out << kCohortHeader << ",theta,theta_sigma\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& m = records[i];
    out << m.patient_id << ',' << format_fixed4(m.visual_lvef) << ','
        << format_fixed4(m.simpson_lvef) << ',' << format_fixed4(m.time_days) << ','
        << (m.event ? 1 : 0) << ',' << format_fixed4(fused[i].theta) << ','
        << format_fixed4(fused[i].theta_sigma) << '\n';
  }
}

void write_km_band_csv(std::ostream& out, const PropagationSummary& summary) {
  out << "source,stratum,time_days,lower,mean,upper\n";
  for (Stratum s : kStrata) {
    const auto& band = summary.km_bands[static_cast<std::size_t>(s)];
    if (!band) continue;
    for (std::size_t i = 0; i < band->times.size(); ++i) {
      if (!(band->lower[i] <= band->mean[i] && band->mean[i] <= band->upper[i])) {
        throw Error(ErrorCode::invalid_state,
                    "band nesting violated for stratum " + std::string(to_string(s)) +
                        " at t = " + format_fixed4(band->times[i]));
      }
      out << to_string(summary.source) << ',' << to_string(s) << ','
          << format_fixed4(band->times[i]) << ',' << format_fixed4(band->lower[i]) << ','
          << format_fixed4(band->mean[i]) << ',' << format_fixed4(band->upper[i]) << '\n';
    }
  }
}

void write_km_band_csv(const std::filesystem::path& destination,
                       const PropagationSummary& summary) {
  std::ofstream out(destination);
  if (!out) throw Error(ErrorCode::io, "cannot open " + destination.string() + " for writing");
  write_km_band_csv(out, summary);
  out.flush();
  if (!out) throw Error(ErrorCode::io, "failed writing " + destination.string());
}

}  // namespace lvef
