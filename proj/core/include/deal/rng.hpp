#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "deal/objective.hpp"

namespace deal {

/// Seeded random source with platform-independent output for a given seed.
class Rng {
public:
  explicit Rng(std::uint64_t seed);
  ~Rng();
  Rng(Rng&&) noexcept;
  Rng& operator=(Rng&&) noexcept;
  Rng(const Rng&) = delete;
  Rng& operator=(const Rng&) = delete;

  double normal();
  double uniform(double lo, double hi);
  Vector normal_vector(Eigen::Index n);
  Vector uniform_vector(Eigen::Index n, double lo, double hi);
  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols);

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Default starting point: uniform on [-5, 5]^n.
Vector default_start(Eigen::Index n, std::uint64_t seed);

/// 64-bit FNV-1a digest rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace deal
