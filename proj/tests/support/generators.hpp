#pragma once

// Hand-rolled random generators for property tests, plus a finite-difference
// comparison helper. Everything is seeded through pfid::Rng so failures
// replay exactly.

#include <algorithm>
#include <cmath>
#include <vector>

#include "pfid/numerics.hpp"
#include "pfid/pairing.hpp"
#include "pfid/rng.hpp"

namespace pfid::gen {

inline Vector gaussian_vector(Rng& rng, Eigen::Index n, double scale = 1.0) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

inline Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  }
  return m;
}

inline Vector probability_vector(Rng& rng, Eigen::Index k) {
  Vector p(k);
  for (Eigen::Index i = 0; i < k; ++i) p[i] = rng.uniform() + 1e-3;
  return p / p.sum();
}

inline Vector unit_vector(Rng& rng, Eigen::Index n) {
  Vector v = gaussian_vector(rng, n);
  return v / v.norm();
}

/// Labels in 1..k, each label used at least twice when n >= 2k.
inline std::vector<Label> labels(Rng& rng, std::size_t n, int k) {
  std::vector<Label> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = i < 2 * static_cast<std::size_t>(k) ? static_cast<Label>(i / 2) + 1
                                                  : static_cast<Label>(rng.uniform_index(static_cast<std::size_t>(k))) + 1;
  }
  rng.shuffle(std::span<Label>(out));
  return out;
}

/// Gap between the two largest entries; small gaps put an argmax-based gate
/// near a discontinuity.
inline double top_gap(const VectorRef& v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end(), std::greater<>());
  return s.size() < 2 ? 1.0 : s[0] - s[1];
}

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
};

/// Compares an analytic gradient with central differences at step h.
inline GradientCheck check_gradient(const ScalarFunction& f, const Vector& x, const Vector& analytic,
                                    double h = 1e-5) {
  const Vector numeric = finite_difference_gradient(f, x, h);
  GradientCheck out;
  out.coordinates = static_cast<std::size_t>(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out.max_relative_error = std::max(out.max_relative_error, relative_error(analytic[i], numeric[i]));
  }
  return out;
}

/// Flattens a matrix row-major into a vector and back.
inline Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }
inline Matrix unflatten(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

}  // namespace pfid::gen
