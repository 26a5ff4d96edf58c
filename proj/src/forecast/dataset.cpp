#include "geann/forecast/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace geann::forecast {

namespace {

constexpr char kMagic[8] = {'G', 'E', 'A', 'N', 'N', 'D', 'S', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("dataset file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  const std::uint64_t bits = get_u64(in);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

std::uint64_t checked_count(std::istream& in, std::uint64_t limit, const char* what) {
  const std::uint64_t v = get_u64(in);
  if (v > limit) throw std::runtime_error(std::string("dataset file: implausible ") + what);
  return v;
}

}  // namespace

std::size_t TimeSeriesDataset::max_horizon() const {
  return horizons.empty() ? 0 : *std::max_element(horizons.begin(), horizons.end());
}

void TimeSeriesDataset::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("dataset: " + what); };
  if (num_series == 0 || length == 0) fail("empty panel");
  if (targets.size() != num_series * length) fail("targets size mismatch");
  if (covariates.size() != num_series * length * num_covariates) fail("covariates size mismatch");
  if (statics.size() != num_series * num_static) fail("statics size mismatch");
  if (observed.size() != num_series * length) fail("observed mask size mismatch");
  if (context_length < 1) fail("context length must be >= 1");
  if (horizons.empty()) fail("no horizons");
  for (std::size_t h : horizons) {
    if (h < 1) fail("horizons must be positive");
  }
  if (context_length + 1 > length) fail("context length leaves no forecast creation time");
  if (quantiles.empty()) fail("no quantiles");
  for (std::size_t q = 0; q < quantiles.size(); ++q) {
    if (!(quantiles[q] > 0.0 && quantiles[q] < 1.0)) fail("quantiles must lie in (0,1)");
    if (q > 0 && !(quantiles[q] > quantiles[q - 1])) fail("quantiles must be strictly increasing");
  }
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(targets) || !finite(covariates) || !finite(statics)) fail("non-finite values");
}

TimeSeriesDataset make_dataset(std::size_t n, std::size_t t, std::size_t d, std::size_t m_s,
                               std::size_t context, std::vector<std::size_t> horizons,
                               std::vector<double> quantiles) {
  TimeSeriesDataset ds;
  ds.num_series = n;
  ds.length = t;
  ds.num_covariates = d;
  ds.num_static = m_s;
  ds.context_length = context;
  ds.horizons = std::move(horizons);
  ds.quantiles = std::move(quantiles);
  ds.targets.assign(n * t, 0.0);
  ds.covariates.assign(n * t * d, 0.0);
  ds.statics.assign(n * m_s, 0.0);
  ds.observed.assign(n * t, 1);
  return ds;
}

void save_dataset(std::ostream& out, const TimeSeriesDataset& ds) {
  ds.validate();
  out.write(kMagic, 8);
  put_u64(out, ds.num_series);
  put_u64(out, ds.length);
  put_u64(out, ds.num_covariates);
  put_u64(out, ds.num_static);
  put_u64(out, ds.context_length);
  put_u64(out, ds.horizons.size());
  for (std::size_t h : ds.horizons) put_u64(out, h);
  put_u64(out, ds.quantiles.size());
  for (double q : ds.quantiles) put_f64(out, q);
  for (double v : ds.targets) put_f64(out, v);
  for (double v : ds.covariates) put_f64(out, v);
  for (double v : ds.statics) put_f64(out, v);
  out.write(reinterpret_cast<const char*>(ds.observed.data()),
            static_cast<std::streamsize>(ds.observed.size()));
}

TimeSeriesDataset load_dataset(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("not a dataset file (bad magic)");
  }
  constexpr std::uint64_t kLimit = 1ULL << 32;
  TimeSeriesDataset ds;
  ds.num_series = checked_count(in, kLimit, "N");
  ds.length = checked_count(in, kLimit, "T");
  ds.num_covariates = checked_count(in, 4096, "d");
  ds.num_static = checked_count(in, 4096, "m_s");
  ds.context_length = checked_count(in, kLimit, "C");
  ds.horizons.resize(checked_count(in, 4096, "horizon count"));
  for (auto& h : ds.horizons) h = get_u64(in);
  ds.quantiles.resize(checked_count(in, 4096, "quantile count"));
  for (auto& q : ds.quantiles) q = get_f64(in);
  ds.targets.resize(ds.num_series * ds.length);
  for (auto& v : ds.targets) v = get_f64(in);
  ds.covariates.resize(ds.num_series * ds.length * ds.num_covariates);
  for (auto& v : ds.covariates) v = get_f64(in);
  ds.statics.resize(ds.num_series * ds.num_static);
  for (auto& v : ds.statics) v = get_f64(in);
  ds.observed.resize(ds.num_series * ds.length);
  if (!in.read(reinterpret_cast<char*>(ds.observed.data()),
               static_cast<std::streamsize>(ds.observed.size()))) {
    throw std::runtime_error("dataset file truncated");
  }
  ds.validate();
  return ds;
}

void save_dataset_file(const std::string& path, const TimeSeriesDataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  save_dataset(out, ds);
}

TimeSeriesDataset load_dataset_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  return load_dataset(in);
}

}  // namespace geann::forecast
