#include "degrade/rng.hpp"

#include <cmath>

namespace degrade {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Rng Rng::stream(std::uint64_t seed, std::uint64_t stream_index) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(stream_index + 1)));
}

Rng Rng::stream(std::uint64_t seed, std::string_view name, std::uint64_t index) {
  return stream(seed, fnv1a(name) ^ splitmix64(index));
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  // Rejection to avoid modulo bias.
  const std::uint64_t limit = ~0ULL - (~0ULL % n);
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

double Rng::normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_normal_ = r * std::sin(theta);
  has_spare_normal_ = true;
  return r * std::cos(theta);
}

double Rng::gamma(double shape, double scale) {
  if (shape < 1.0) {
    const double u = uniform();
    return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return d * v * scale;
    }
  }
}

double Rng::inverse_gaussian(double mean, double shape) {
  const double z = normal();
  const double nu = z * z;
  if (nu == 0.0) return mean;
  // Smaller root of the MSH quadratic in the product form
  // x = 4 m^2 lambda nu / (s + m nu)^2, which avoids the cancellation the
  // textbook m + m^2 nu/(2 lambda) - ... form suffers when m*nu >> lambda.
  const double s = std::sqrt(4.0 * mean * shape * nu + mean * mean * nu * nu);
  const double x = 4.0 * mean * mean * shape * nu / ((s + mean * nu) * (s + mean * nu));
  const double u = uniform();
  if (u <= mean / (mean + x)) return x;
  return mean * mean / x;
}

}  // namespace degrade
