#pragma once

// CSV formats:
//   dataset      duration,event,censor_time,x0,...,x{p-1}   (censor_time may be empty)
//   score curve  time,score,effective_n                     (missing score is an empty field)
//   truth        t_star,c_star                              (t_star = inf beyond the grid)
//   matrix       header of grid times, one row per subject
// Numbers are written in shortest round-trip form.

#include "adminbrier/core.hpp"
#include "adminbrier/metrics.hpp"

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace adminbrier {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, std::string_view what) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s == "inf" || s == "Inf" || s == "+inf") return kInfinity;
  if (s == "-inf") return -kInfinity;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError(std::string(what) + ": cannot parse number '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

namespace detail {

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

inline void finish_output(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dataset CSV
// ---------------------------------------------------------------------------

inline void write_dataset_csv(std::ostream& out, const RightCensoredDataset& data) {
  out << "duration,event,censor_time";
  for (std::size_t k = 0; k < data.covariate_dim(); ++k) out << ",x" << k;
  out << '\n';
  for (const auto& r : data.records()) {
    out << format_double(r.duration) << ',' << (r.event ? 1 : 0) << ',';
    if (r.admin_censor_time) out << format_double(*r.admin_censor_time);
    for (double x : r.covariates) out << ',' << format_double(x);
    out << '\n';
  }
}

inline void write_dataset_csv(const std::filesystem::path& path, const RightCensoredDataset& data) {
  auto out = detail::open_output(path);
  write_dataset_csv(out, data);
  detail::finish_output(out, path);
}

inline RightCensoredDataset read_dataset_csv(std::istream& in, std::string_view source = "dataset") {
  std::string line;
  if (!std::getline(in, line)) throw DataError(std::string(source) + ": empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "duration" || header[1] != "event" || header[2] != "censor_time")
    throw DataError(std::string(source) + ": header must start with duration,event,censor_time");
  const std::size_t p = header.size() - 3;
  for (std::size_t k = 0; k < p; ++k)
    if (header[3 + k] != "x" + std::to_string(k))
      throw DataError(std::string(source) + ": covariate column " + std::to_string(k) + " must be named x" +
                      std::to_string(k));
  std::vector<SubjectRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    const std::string where = std::string(source) + " line " + std::to_string(line_no);
    if (f.size() != header.size()) throw DataError(where + ": expected " + std::to_string(header.size()) + " fields");
    SubjectRecord r;
    r.duration = parse_double(f[0], where);
    if (f[1] == "1") r.event = true;
    else if (f[1] == "0") r.event = false;
    else throw DataError(where + ": event must be 0 or 1");
    if (!f[2].empty()) r.admin_censor_time = parse_double(f[2], where);
    r.covariates.reserve(p);
    for (std::size_t k = 0; k < p; ++k) r.covariates.push_back(parse_double(f[3 + k], where));
    records.push_back(std::move(r));
  }
  return RightCensoredDataset(std::move(records), p);
}

inline RightCensoredDataset read_dataset_csv(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_dataset_csv(in, path.string());
}

// ---------------------------------------------------------------------------
// Score curves
// ---------------------------------------------------------------------------

inline void write_score_curve_csv(std::ostream& out, const ScoreCurve& curve) {
  out << "time,score,effective_n\n";
  for (std::size_t j = 0; j < curve.grid.size(); ++j) {
    out << format_double(curve.grid[j]) << ',';
    if (curve.score[j]) out << format_double(*curve.score[j]);
    out << ',' << format_double(curve.effective_n[j]) << '\n';
  }
}

inline void write_score_curve_csv(const std::filesystem::path& path, const ScoreCurve& curve) {
  auto out = detail::open_output(path);
  write_score_curve_csv(out, curve);
  detail::finish_output(out, path);
}

inline ScoreCurve read_score_curve_csv(std::istream& in, std::string_view source = "score curve") {
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string_view>{"time", "score", "effective_n"})
    throw DataError(std::string(source) + ": header must be time,score,effective_n");
  std::vector<double> times;
  std::vector<std::optional<double>> scores;
  std::vector<double> eff;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw DataError(std::string(source) + ": expected 3 fields per row");
    times.push_back(parse_double(f[0], source));
    scores.push_back(f[1].empty() ? std::nullopt : std::optional<double>(parse_double(f[1], source)));
    eff.push_back(parse_double(f[2], source));
  }
  ScoreCurve curve{TimeGrid(std::move(times))};
  curve.score = std::move(scores);
  curve.effective_n = std::move(eff);
  return curve;
}

inline ScoreCurve read_score_curve_csv(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_score_curve_csv(in, path.string());
}

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

struct GroundTruth {
  std::vector<double> t_star;
  std::vector<double> c_star;
};

inline void write_truth_csv(const std::filesystem::path& path, std::span<const double> t_star,
                            std::span<const double> c_star) {
  if (t_star.size() != c_star.size()) throw DataError("truth: t_star and c_star differ in length");
  auto out = detail::open_output(path);
  out << "t_star,c_star\n";
  for (std::size_t i = 0; i < t_star.size(); ++i) out << format_double(t_star[i]) << ',' << format_double(c_star[i]) << '\n';
  detail::finish_output(out, path);
}

inline GroundTruth read_truth_csv(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string_view>{"t_star", "c_star"})
    throw DataError(path.string() + ": header must be t_star,c_star");
  GroundTruth g;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 2) throw DataError(path.string() + ": expected 2 fields per row");
    g.t_star.push_back(parse_double(f[0], path.string()));
    g.c_star.push_back(parse_double(f[1], path.string()));
  }
  return g;
}

inline void write_prediction_csv(const std::filesystem::path& path, const SurvivalPrediction& pred) {
  auto out = detail::open_output(path);
  const auto t = pred.grid().times();
  for (std::size_t j = 0; j < t.size(); ++j) out << (j ? "," : "") << format_double(t[j]);
  out << '\n';
  for (std::size_t i = 0; i < pred.subjects(); ++i) {
    for (std::size_t j = 0; j < t.size(); ++j) out << (j ? "," : "") << format_double(pred(i, j));
    out << '\n';
  }
  detail::finish_output(out, path);
}

inline SurvivalPrediction read_prediction_csv(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  std::vector<double> times;
  for (auto f : split_csv_line(line)) times.push_back(parse_double(f, path.string()));
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != times.size()) throw DataError(path.string() + ": ragged matrix row");
    for (auto v : f) values.push_back(parse_double(v, path.string()));
    ++rows;
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(times.size()));
  std::copy(values.begin(), values.end(), m.data());
  return SurvivalPrediction(TimeGrid(std::move(times)), std::move(m));
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = detail::open_output(path);
  out << j.dump(2) << '\n';
  detail::finish_output(out, path);
}

}  // namespace adminbrier
