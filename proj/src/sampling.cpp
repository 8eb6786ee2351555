#include "magnify/sampling.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace magnify {

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

namespace {

constexpr std::array<int, 16> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

double radical_inverse(std::uint64_t index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

double standard_normal(SplitMix64& rng) {
  // Box-Muller; 1 - u keeps the logarithm finite.
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

std::vector<Vector> sphere_points(int n, int count, std::uint64_t seed) {
  if (n < 1 || n > static_cast<int>(kPrimes.size())) {
    throw std::invalid_argument("sphere_points: dimension out of supported range");
  }
  if (count < 0) throw std::invalid_argument("sphere_points: negative count");

  SplitMix64 rng(seed);
  std::vector<double> shift(n);
  for (auto& s : shift) s = rng.uniform();

  const boost::math::normal_distribution<double> normal;
  std::vector<Vector> points;
  points.reserve(count);
  for (std::uint64_t index = 1; static_cast<int>(points.size()) < count; ++index) {
    Vector p(n);
    for (int j = 0; j < n; ++j) {
      double u = radical_inverse(index, kPrimes[j]) + shift[j];
      if (u >= 1.0) u -= 1.0;
      u = std::clamp(u, 1e-12, 1.0 - 1e-12);
      p[j] = boost::math::quantile(normal, u);
    }
    const double norm = p.norm();
    if (!(norm > 1e-12)) continue;
    points.push_back(p / norm);
  }
  return points;
}

std::vector<Vector> antipodal_sphere_points(int n, int count, std::uint64_t seed) {
  const int half = (count + 1) / 2;
  std::vector<Vector> base = sphere_points(n, half, seed);
  std::vector<Vector> points;
  points.reserve(2 * base.size());
  for (const auto& p : base) {
    points.push_back(p);
    points.push_back(-p);
  }
  return points;
}

Vector ball_point(SplitMix64& rng, const Vector& center, double radius) {
  if (!(radius >= 0.0)) throw std::invalid_argument("ball_point: negative radius");
  const auto n = center.size();
  Vector g(n);
  double norm = 0.0;
  do {
    for (Eigen::Index j = 0; j < n; ++j) g[j] = standard_normal(rng);
    norm = g.norm();
  } while (!(norm > 1e-12));
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
  return center + (r / norm) * g;
}

std::vector<Vector> ball_points(const Vector& center, double radius, int count,
                                std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<Vector> points;
  points.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) points.push_back(ball_point(rng, center, radius));
  return points;
}

std::uint64_t scale_seed(std::uint64_t seed, double scale) {
  const auto key = static_cast<std::uint64_t>(std::llround(std::log(scale) * 1e8));
  SplitMix64 mix(seed ^ (key * 0x9E3779B97F4A7C15ULL));
  return mix.next();
}

}  // namespace magnify
