#include "geann/forecast/loss.hpp"

#include <stdexcept>
#include <string>

namespace geann::forecast {

double quantile_loss(double demand, double forecast, double q) {
  if (!(q > 0.0 && q < 1.0)) {
    throw std::invalid_argument("quantile_loss: q=" + std::to_string(q) + " outside (0,1)");
  }
  const double diff = demand - forecast;
  return diff > 0.0 ? q * diff : (q - 1.0) * diff;
}

QuantileForecast::QuantileForecast(std::vector<std::size_t> series_ids,
                                   std::vector<std::size_t> times, std::size_t horizons,
                                   std::size_t quantiles)
    : series(std::move(series_ids)),
      creation_times(std::move(times)),
      num_horizons(horizons),
      num_quantiles(quantiles),
      values(series.size() * creation_times.size() * horizons * quantiles, 0.0) {}

double dataset_loss(const TimeSeriesDataset& ds, const QuantileForecast& fc) {
  if (fc.num_horizons != ds.horizons.size() || fc.num_quantiles != ds.quantiles.size()) {
    throw std::invalid_argument("dataset_loss: forecast horizon/quantile counts differ from dataset");
  }
  if (fc.values.size() !=
      fc.series.size() * fc.creation_times.size() * fc.num_horizons * fc.num_quantiles) {
    throw std::invalid_argument("dataset_loss: forecast value count mismatch");
  }
  double total = 0.0;
  for (std::size_t s = 0; s < fc.series.size(); ++s) {
    const std::size_t i = fc.series[s];
    if (i >= ds.num_series) throw std::out_of_range("dataset_loss: series out of range");
    for (std::size_t f = 0; f < fc.creation_times.size(); ++f) {
      for (std::size_t h = 0; h < fc.num_horizons; ++h) {
        const std::size_t target = fc.creation_times[f] + ds.horizons[h] - 1;
        if (target >= ds.length || !ds.is_observed(i, target)) {
          throw std::out_of_range("dataset_loss: missing target for series " + std::to_string(i) +
                                  " at time " + std::to_string(target));
        }
        for (std::size_t q = 0; q < fc.num_quantiles; ++q) {
          total += quantile_loss(ds.y(i, target), fc.at(s, f, h, q), ds.quantiles[q]);
        }
      }
    }
  }
  return total;
}

}  // namespace geann::forecast
