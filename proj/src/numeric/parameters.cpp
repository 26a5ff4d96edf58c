#include "geann/numeric/parameters.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>

namespace geann::numeric {

namespace {

constexpr char kMagic[8] = {'G', 'E', 'A', 'N', 'N', 'P', 'S', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) {
    throw std::runtime_error("parameter file truncated");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  write_u64(out, bits);
}

double read_f64(std::istream& in) {
  const std::uint64_t bits = read_u64(in);
  double d;
  std::memcpy(&d, &bits, sizeof d);
  return d;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, const std::string& label) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL + h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Parameter& ParameterStore::add(const std::string& name, Tensor value) {
  if (params_.count(name)) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  Tensor grad(value.shape(), 0.0);
  auto [it, _] = params_.emplace(name, Parameter{std::move(value), std::move(grad)});
  return it->second;
}

Parameter& ParameterStore::add_glorot(const std::string& name, Shape shape, std::size_t fan_in,
                                      std::size_t fan_out) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::mt19937_64 rng(derive_seed(seed_, name));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.values()) v = dist(rng);
  return add(name, std::move(t));
}

Parameter& ParameterStore::add_zeros(const std::string& name, Shape shape) {
  return add(name, Tensor(std::move(shape), 0.0));
}

const Parameter& ParameterStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

Parameter& ParameterStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

const Tensor& ParameterStore::value(const std::string& name) const { return at(name).value; }
Tensor& ParameterStore::value(const std::string& name) { return at(name).value; }
const Tensor& ParameterStore::grad(const std::string& name) const { return at(name).grad; }
Tensor& ParameterStore::grad(const std::string& name) { return at(name).grad; }

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, _] : params_) out.push_back(name);
  return out;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += p.value.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [_, p] : params_) p.grad.fill(0.0);
}

bool ParameterStore::all_finite() const {
  for (const auto& [_, p] : params_) {
    if (!p.value.all_finite()) return false;
  }
  return true;
}

void ParameterStore::save(std::ostream& out) const {
  out.write(kMagic, sizeof kMagic);
  write_u64(out, seed_);
  write_u64(out, params_.size());
  for (const auto& [name, p] : params_) {
    write_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(out, p.value.rank());
    for (std::size_t d : p.value.shape()) write_u64(out, d);
    for (double v : p.value.values()) write_f64(out, v);
  }
}

ParameterStore ParameterStore::load(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("not a parameter file (bad magic)");
  }
  ParameterStore store(read_u64(in));
  const std::uint64_t count = read_u64(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t len = read_u64(in);
    std::string name(len, '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(len))) {
      throw std::runtime_error("parameter file truncated");
    }
    Shape shape(read_u64(in));
    for (auto& d : shape) d = read_u64(in);
    Tensor t(shape);
    for (double& v : t.values()) v = read_f64(in);
    store.add(name, std::move(t));
  }
  return store;
}

bool operator==(const ParameterStore& a, const ParameterStore& b) {
  if (a.params_.size() != b.params_.size()) return false;
  auto ia = a.params_.begin();
  auto ib = b.params_.begin();
  for (; ia != a.params_.end(); ++ia, ++ib) {
    if (ia->first != ib->first || !(ia->second.value == ib->second.value)) return false;
  }
  return true;
}

}  // namespace geann::numeric
