#include "deal/rng.hpp"

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <cstdio>

namespace deal {

struct Rng::Impl {
  explicit Impl(std::uint64_t seed) : engine(seed) {}
  boost::random::mt19937_64 engine;
  boost::random::normal_distribution<double> normal{0.0, 1.0};
};

Rng::Rng(std::uint64_t seed) : impl_(std::make_unique<Impl>(seed)) {}
Rng::~Rng() = default;
Rng::Rng(Rng&&) noexcept = default;
Rng& Rng::operator=(Rng&&) noexcept = default;

double Rng::normal() { return impl_->normal(impl_->engine); }

double Rng::uniform(double lo, double hi) {
  boost::random::uniform_real_distribution<double> dist(lo, hi);
  return dist(impl_->engine);
}

Vector Rng::normal_vector(Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
  return v;
}

Vector Rng::uniform_vector(Eigen::Index n, double lo, double hi) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
  return v;
}

Matrix Rng::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
  // Row-major fill so the draw order does not depend on the storage order.
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = normal();
  return M;
}

Vector default_start(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  return rng.uniform_vector(n, -5.0, 5.0);
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace deal
