#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seatrade/error.hpp"

namespace seatrade {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/// Dense row-major design matrix with named columns. NaN marks a missing entry.
class FeatureMatrix {
public:
  FeatureMatrix() = default;

  FeatureMatrix(std::vector<std::string> names, std::size_t rows)
      : names_(std::move(names)), rows_(rows), data_(rows * names_.size(), kMissing) {}

  FeatureMatrix(std::vector<std::string> names, std::size_t rows, std::vector<double> data)
      : names_(std::move(names)), rows_(rows), data_(std::move(data)) {
    if (data_.size() != rows_ * names_.size()) throw DataError("feature matrix size mismatch");
  }

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return names_.size(); }
  [[nodiscard]] const std::vector<std::string>& names() const { return names_; }

  [[nodiscard]] double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

  [[nodiscard]] std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols(), cols());
  }

private:
  std::vector<std::string> names_;
  std::size_t rows_ = 0;
  std::vector<double> data_;
};

}  // namespace seatrade
