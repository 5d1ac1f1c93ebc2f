#pragma once

// CSV for sampled data and JSON for fit results.

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "bmzi/experiment.hpp"
#include "bmzi/fringe_fit.hpp"

namespace bmzi {

/// Malformed data file.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kCountsHeader = "temperature_K,singles4,singles5,coincidences";
inline constexpr std::string_view kRatesHeader = "temperature_K,R4,R5,R45";

/// Shortest decimal form that parses back to the same double.
inline std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline void write_csv_row(std::ostream& out, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) out << ',';
    out << format_number(v);
    first = false;
  }
  out << '\n';
}

inline void write_counts_csv(std::ostream& out, const FringeDataset& data) {
  out << kCountsHeader << '\n';
  for (const auto& p : data.points) write_csv_row(out, {p.temperature_K, p.singles4, p.singles5, p.coincidences});
}

inline void write_rates_csv(std::ostream& out, const std::vector<RateRow>& rows) {
  out << kRatesHeader << '\n';
  for (const auto& r : rows) write_csv_row(out, {r.temperature_K, r.rates.R4, r.rates.R5, r.rates.R45});
}

namespace detail {

inline std::string_view trim_line(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

inline std::vector<double> parse_csv_numbers(std::string_view line, std::size_t expected, std::size_t line_no) {
  std::vector<double> v;
  std::size_t field = 1;
  while (true) {
    const auto comma = line.find(',');
    const std::string_view cell = trim_line(line.substr(0, comma));
    double x = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), x);
    if (cell.empty() || res.ec != std::errc{} || res.ptr != cell.data() + cell.size() || !std::isfinite(x))
      throw DataError("line " + std::to_string(line_no) + ", field " + std::to_string(field) +
                      ": not a finite number: '" + std::string(cell) + "'");
    v.push_back(x);
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
    ++field;
  }
  if (v.size() != expected)
    throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(expected) + " fields, got " +
                    std::to_string(v.size()));
  return v;
}

}  // namespace detail

inline FringeDataset read_counts_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError("line 1: empty file");
  ++line_no;
  if (detail::trim_line(line) != kCountsHeader)
    throw DataError("line 1: expected header '" + std::string(kCountsHeader) + "'");
  FringeDataset d;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim_line(line);
    if (body.empty()) continue;
    const auto v = detail::parse_csv_numbers(body, 4, line_no);
    for (int k = 1; k < 4; ++k)
      if (v[k] < 0.0) throw DataError("line " + std::to_string(line_no) + ": counts must be >= 0");
    if (!d.points.empty() && !(v[0] > d.points.back().temperature_K))
      throw DataError("line " + std::to_string(line_no) + ": temperatures must be strictly increasing");
    d.points.push_back({v[0], v[1], v[2], v[3]});
  }
  if (d.points.empty()) throw DataError("no data rows");
  return d;
}

inline FringeDataset read_counts_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file: " + path);
  try {
    return read_counts_csv(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

inline nlohmann::ordered_json fit_result_to_json(const FitResult& r) {
  using json = nlohmann::ordered_json;
  auto number_or_null = [](double x) { return std::isfinite(x) ? json(x) : json(); };
  json j;
  j["model"] = {{"kind", to_string(r.kind)},
                {"axes", to_string(r.axes)},
                {"delta_rad", r.model.rotation_angle_rad},
                {"reference_temperature_K", r.model.reference_temperature_K},
                {"crystal_length_mm", r.crystal_length_mm},
                {"wavelength_nm", r.wavelength_nm}};
  json params = json::array();
  std::vector<std::string> names;
  for (const auto& p : r.parameters) {
    const bool known = p.status != ParameterStatus::unidentifiable && p.status != ParameterStatus::excluded;
    params.push_back({{"name", p.name},
                      {"estimate", known ? number_or_null(p.estimate) : json()},
                      {"std_error", known ? number_or_null(p.std_error) : json()},
                      {"status", to_string(p.status)}});
    names.push_back(p.name);
  }
  j["parameters"] = params;
  json derived = json::object();
  for (Axis a : {Axis::y, Axis::z}) {
    const auto k = r.dk_dT(a);
    const auto n = r.dn_dT(a);
    const std::string s = to_string(a);
    derived["dk" + s + "_dT_rad_per_mm_K"] = {{"value", k.identifiable ? json(k.value) : json()},
                                              {"std_error", k.identifiable ? json(k.std_error) : json()}};
    derived["dn" + s + "_dT_per_K"] = {{"value", n.identifiable ? json(n.value) : json()},
                                       {"std_error", n.identifiable ? json(n.std_error) : json()}};
  }
  j["derived"] = derived;
  json matrix = json::array();
  for (Eigen::Index a = 0; a < r.covariance.rows(); ++a) {
    json row = json::array();
    for (Eigen::Index b = 0; b < r.covariance.cols(); ++b) row.push_back(number_or_null(r.covariance(a, b)));
    matrix.push_back(row);
  }
  j["covariance"] = {{"parameters", names}, {"matrix", matrix}};
  j["residual_norm"] = number_or_null(r.residual_norm);
  j["reduced_chi2"] = number_or_null(r.reduced_chi2);
  j["degrees_of_freedom"] = r.degrees_of_freedom;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["stop_reason"] = r.stop_reason;
  j["status"] = r.status();
  j["warnings"] = r.warnings;
  return j;
}

/// Serialized text of a fit result (stable key order, trailing newline).
inline std::string fit_result_text(const FitResult& r) { return fit_result_to_json(r).dump(2) + "\n"; }

}  // namespace bmzi
