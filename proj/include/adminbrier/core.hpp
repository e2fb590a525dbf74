#pragma once

// Shared domain types for right-censored survival data: time grids, subject
// records, step survival curves and prediction matrices.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace adminbrier {

/// Malformed or inconsistent input data (bad CSV, broken invariants, shape mismatch).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite losses, zero censoring survival with unbounded weights, and similar.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major n x m matrix; rows are subjects, columns are grid times.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// TimeGrid
// ---------------------------------------------------------------------------

/// Strictly increasing, non-negative, non-empty list of time points.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> times) : times_(std::move(times)) {
    if (times_.empty()) throw DataError("time grid: empty");
    for (std::size_t j = 0; j < times_.size(); ++j) {
      if (!std::isfinite(times_[j]) || times_[j] < 0.0)
        throw DataError("time grid: times must be finite and >= 0");
      if (j > 0 && !(times_[j] > times_[j - 1]))
        throw DataError("time grid: times must be strictly increasing");
    }
  }

  /// `count` equidistant points end*j/count, j = 1..count (so the grid is on (0, end]).
  static TimeGrid equidistant(double end, std::size_t count) {
    if (count == 0 || !(end > 0.0)) throw DataError("time grid: need end > 0 and count >= 1");
    std::vector<double> t(count);
    for (std::size_t j = 0; j < count; ++j)
      t[j] = end * static_cast<double>(j + 1) / static_cast<double>(count);
    return TimeGrid(std::move(t));
  }

  std::size_t size() const noexcept { return times_.size(); }
  double operator[](std::size_t j) const noexcept { return times_[j]; }
  double front() const noexcept { return times_.front(); }
  double back() const noexcept { return times_.back(); }
  std::span<const double> times() const noexcept { return times_; }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  std::vector<double> times_;
};

struct GridIndex {
  std::size_t index = 0;
  bool clamped = false;  // t was beyond the last grid time
};

/// Right-endpoint mapping: the smallest j with grid[j] >= t. Durations past
/// the end of the grid clamp to the last index and set `clamped`.
inline GridIndex discretize_duration(double t, const TimeGrid& grid) {
  if (!(t >= 0.0)) throw DataError("discretize_duration: negative or NaN duration");
  auto times = grid.times();
  auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end()) return {grid.size() - 1, true};
  return {static_cast<std::size_t>(it - times.begin()), false};
}

// ---------------------------------------------------------------------------
// Subject records and datasets
// ---------------------------------------------------------------------------

struct SubjectRecord {
  double duration = 0.0;                    // T = min(T*, C*)
  bool event = false;                       // D = 1{T* <= C*}
  std::optional<double> admin_censor_time;  // C*, when administratively known
  std::vector<double> covariates;
};

struct Violation {
  std::size_t record = 0;
  std::string rule;
};

/// A list of subject records with a common covariate dimension. Either every
/// record carries an administrative censoring time or none does.
class RightCensoredDataset {
 public:
  RightCensoredDataset(std::vector<SubjectRecord> records, std::size_t covariate_dim)
      : records_(std::move(records)), covariate_dim_(covariate_dim) {
    std::size_t with_admin = 0;
    for (std::size_t i = 0; i < records_.size(); ++i) {
      const auto& r = records_[i];
      if (r.covariates.size() != covariate_dim_)
        throw DataError("dataset: record " + std::to_string(i) + " has " +
                        std::to_string(r.covariates.size()) + " covariates, expected " +
                        std::to_string(covariate_dim_));
      if (!std::isfinite(r.duration))
        throw DataError("dataset: record " + std::to_string(i) + " has non-finite duration");
      if (r.admin_censor_time) ++with_admin;
    }
    if (with_admin != 0 && with_admin != records_.size())
      throw DataError("dataset: admin censoring time present for some records but not all");
    admin_complete_ = !records_.empty() && with_admin == records_.size();
  }

  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  std::size_t covariate_dim() const noexcept { return covariate_dim_; }
  bool admin_complete() const noexcept { return admin_complete_; }
  const SubjectRecord& operator[](std::size_t i) const noexcept { return records_[i]; }
  std::span<const SubjectRecord> records() const noexcept { return records_; }

  std::vector<double> durations() const {
    std::vector<double> out(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) out[i] = records_[i].duration;
    return out;
  }

  std::vector<int> events() const {
    std::vector<int> out(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) out[i] = records_[i].event ? 1 : 0;
    return out;
  }

  /// Covariates as a (covariate_dim x n) column-per-subject matrix, optionally
  /// restricted to a subset of columns.
  Eigen::MatrixXd feature_matrix(std::span<const std::size_t> columns = {}) const {
    std::vector<std::size_t> cols(columns.begin(), columns.end());
    if (cols.empty())
      for (std::size_t c = 0; c < covariate_dim_; ++c) cols.push_back(c);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(cols.size()),
                      static_cast<Eigen::Index>(records_.size()));
    for (std::size_t i = 0; i < records_.size(); ++i)
      for (std::size_t k = 0; k < cols.size(); ++k) {
        if (cols[k] >= covariate_dim_) throw DataError("feature column out of range");
        x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
            records_[i].covariates[cols[k]];
      }
    return x;
  }

 private:
  std::vector<SubjectRecord> records_;
  std::size_t covariate_dim_ = 0;
  bool admin_complete_ = false;
};

/// Record-level checks. Ties between event and censoring resolve to the event,
/// so an event exactly at C* is valid.
inline std::vector<Violation> validate_dataset(const RightCensoredDataset& d) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& r = d[i];
    if (!(r.duration >= 0.0)) out.push_back({i, "negative duration"});
    for (double x : r.covariates)
      if (!std::isfinite(x)) {
        out.push_back({i, "non-finite covariate"});
        break;
      }
    if (!r.admin_censor_time) continue;
    const double c = *r.admin_censor_time;
    if (!(c >= 0.0) || !std::isfinite(c)) {
      out.push_back({i, "invalid admin censoring time"});
      continue;
    }
    if (r.event && r.duration > c) out.push_back({i, "event after admin censoring"});
    if (!r.event && r.duration < c) out.push_back({i, "censored before admin time"});
    if (!r.event && r.duration > c) out.push_back({i, "censored after admin time"});
  }
  return out;
}

// ---------------------------------------------------------------------------
// StepSurvival
// ---------------------------------------------------------------------------

/// Right-continuous, nonincreasing step function starting at 1. Used for
/// Kaplan-Meier output and for known administrative censoring 1{C* > t}.
class StepSurvival {
 public:
  StepSurvival() = default;  // constant 1

  StepSurvival(std::vector<double> jump_times, std::vector<double> values,
               double support_end = kInfinity)
      : jumps_(std::move(jump_times)), values_(std::move(values)), support_end_(support_end) {
    if (jumps_.size() != values_.size())
      throw DataError("step survival: jump times and values differ in length");
    double prev = 1.0;
    for (std::size_t k = 0; k < jumps_.size(); ++k) {
      if (!std::isfinite(jumps_[k]) || jumps_[k] < 0.0)
        throw DataError("step survival: jump times must be finite and >= 0");
      if (k > 0 && !(jumps_[k] > jumps_[k - 1]))
        throw DataError("step survival: jump times must be strictly increasing");
      if (!(values_[k] >= 0.0 && values_[k] <= prev))
        throw DataError("step survival: values must be nonincreasing within [0, 1]");
      prev = values_[k];
    }
  }

  /// f(t), right-continuous.
  double at(double t) const noexcept {
    auto it = std::upper_bound(jumps_.begin(), jumps_.end(), t);
    if (it == jumps_.begin()) return 1.0;
    return values_[static_cast<std::size_t>(it - jumps_.begin()) - 1];
  }

  /// lim_{s -> t-} f(s). Returns 1 at t = 0.
  double left_limit(double t) const noexcept {
    auto it = std::lower_bound(jumps_.begin(), jumps_.end(), t);
    if (it == jumps_.begin()) return 1.0;
    return values_[static_cast<std::size_t>(it - jumps_.begin()) - 1];
  }

  /// Last time covered by the data the curve was fitted on; beyond it the
  /// curve is extrapolated as constant.
  double support_end() const noexcept { return support_end_; }

  std::span<const double> jump_times() const noexcept { return jumps_; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::vector<double> jumps_;
  std::vector<double> values_;
  double support_end_ = kInfinity;
};

inline double eval_right(const StepSurvival& f, double t) { return f.at(t); }
inline double eval_left(const StepSurvival& f, double t) { return f.left_limit(t); }

// ---------------------------------------------------------------------------
// SurvivalPrediction
// ---------------------------------------------------------------------------

/// Survival estimates pi_i(t_j) for n subjects on a grid. Rows need not be
/// monotone (binary-classifier predictions are not).
class SurvivalPrediction {
 public:
  SurvivalPrediction(TimeGrid grid, Matrix values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.cols()) != grid_.size())
      throw DataError("survival prediction: column count does not match grid size");
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
      const double v = values_.data()[i];
      if (!(v >= 0.0 && v <= 1.0)) throw DataError("survival prediction: value outside [0, 1]");
    }
  }

  const TimeGrid& grid() const noexcept { return grid_; }
  const Matrix& values() const noexcept { return values_; }
  std::size_t subjects() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  TimeGrid grid_;
  Matrix values_;
};

}  // namespace adminbrier
