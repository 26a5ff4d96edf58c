#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace geann::forecast {

/// Panel of N target series of length T with d time-varying and m_s static
/// covariates. Arrays are row-major: targets[i*T + t],
/// covariates[(i*T + t)*d + c], statics[i*m_s + c].
///
/// A forecast issued at creation time t sees indices [t-C, t) and predicts
/// index t + h - 1 for each horizon h >= 1.
struct TimeSeriesDataset {
  std::size_t num_series = 0;
  std::size_t length = 0;
  std::size_t num_covariates = 0;
  std::size_t num_static = 0;
  std::size_t context_length = 1;
  std::vector<std::size_t> horizons;
  std::vector<double> quantiles{0.5, 0.9};

  std::vector<double> targets;
  std::vector<double> covariates;
  std::vector<double> statics;
  /// 1 where the target is a valid demand observation (0 before a launch or
  /// inside a stock-out window). Unobserved targets never enter a loss.
  std::vector<std::uint8_t> observed;

  double y(std::size_t i, std::size_t t) const { return targets[i * length + t]; }
  double x(std::size_t i, std::size_t t, std::size_t c) const {
    return covariates[(i * length + t) * num_covariates + c];
  }
  bool is_observed(std::size_t i, std::size_t t) const { return observed[i * length + t] != 0; }
  std::size_t max_horizon() const;

  /// Throws std::invalid_argument when array sizes, C, horizons or quantiles
  /// are inconsistent.
  void validate() const;

  friend bool operator==(const TimeSeriesDataset&, const TimeSeriesDataset&) = default;
};

/// Allocates zeroed arrays (all targets observed) for the given dimensions.
TimeSeriesDataset make_dataset(std::size_t n, std::size_t t, std::size_t d, std::size_t m_s,
                               std::size_t context, std::vector<std::size_t> horizons,
                               std::vector<double> quantiles = {0.5, 0.9});

/// Binary little-endian container, layout in README.md.
void save_dataset(std::ostream& out, const TimeSeriesDataset& ds);
TimeSeriesDataset load_dataset(std::istream& in);
void save_dataset_file(const std::string& path, const TimeSeriesDataset& ds);
TimeSeriesDataset load_dataset_file(const std::string& path);

}  // namespace geann::forecast
