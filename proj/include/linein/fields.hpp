#pragma once

// Seeded test data: sample points inside a safe domain and random polynomial
// fields. Polynomials are written in the scaled chart coordinates
// u_i = (x_i - center_i) / half_width_i so that coefficients in [-1, 1] give
// fields of comparable size on every background.

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "linein/metric.hpp"

namespace linein {

/// Mixes a base seed with a label and an index (FNV-1a then splitmix64), so
/// every (seed, background, point) draws from its own stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform in [lo, hi) from the top 53 bits of one draw.
  double uniform(double lo, double hi);

 private:
  std::mt19937_64 engine_;
};

/// Uniform points in the safe-domain box shrunk by 10% on every side.
std::vector<std::vector<double>> sample_points(const MetricSpec& spec, std::size_t count,
                                               std::uint64_t seed);

/// Sum over monomials of degree <= degree in the scaled coordinates.
Expr random_polynomial(const MetricSpec& spec, int degree, Rng& rng);

/// dim independent polynomials (a covector or vector field).
std::vector<Expr> random_field(const MetricSpec& spec, Rng& rng, int degree = 3);

/// dim*dim symmetric component list.
std::vector<Expr> random_symmetric(const MetricSpec& spec, Rng& rng, int degree = 3);

/// (L_V g)_ab = V^c d_c g_ab + (d_a V^c) g_cb + (d_b V^c) g_ac as expressions,
/// for a vector field V given by its components.
std::vector<Expr> lie_derivative_expressions(const MetricSpec& spec, std::span<const Expr> vector);

/// c * g_ab as expressions.
std::vector<Expr> scaled_metric_expressions(const MetricSpec& spec, double c);

}  // namespace linein
