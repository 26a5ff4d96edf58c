#pragma once

#include <cstddef>
#include <vector>

#include "geann/forecast/dataset.hpp"

namespace geann::forecast {

/// Pinball loss q (d - f)_+ + (1 - q)(f - d)_+. Throws for q outside (0,1).
double quantile_loss(double demand, double forecast, double q);

/// Forecast values indexed by (series, creation time, horizon, quantile).
/// `horizons` and `quantiles` are positions into the dataset's lists.
struct QuantileForecast {
  std::vector<std::size_t> series;
  std::vector<std::size_t> creation_times;
  std::size_t num_horizons = 0;
  std::size_t num_quantiles = 0;
  std::vector<double> values;

  QuantileForecast() = default;
  QuantileForecast(std::vector<std::size_t> series_ids, std::vector<std::size_t> times,
                   std::size_t horizons, std::size_t quantiles);

  std::size_t index(std::size_t s, std::size_t f, std::size_t h, std::size_t q) const {
    return ((s * creation_times.size() + f) * num_horizons + h) * num_quantiles + q;
  }
  double& at(std::size_t s, std::size_t f, std::size_t h, std::size_t q) {
    return values[index(s, f, h, q)];
  }
  double at(std::size_t s, std::size_t f, std::size_t h, std::size_t q) const {
    return values[index(s, f, h, q)];
  }
};

/// Sum of quantile losses over every (series, creation time, horizon,
/// quantile) in `forecasts`. Throws std::out_of_range when a target lies past
/// the end of the series or is unobserved.
double dataset_loss(const TimeSeriesDataset& ds, const QuantileForecast& forecasts);

}  // namespace geann::forecast
