#pragma once

// Quadratic barrier h(x) = M - x^T P x and the set classification built on it.

#include <cmath>
#include <string_view>
#include <utility>

#include "szcbf/errors.hpp"
#include "szcbf/linalg.hpp"
#include "szcbf/vessel.hpp"

namespace szcbf {

class Zcbf {
 public:
  Zcbf(Matrix P, double M) : P_(std::move(P)), M_(M) {
    if (!(M > 0.0) || !std::isfinite(M)) throw InvalidInput("barrier level M must be positive");
    if (!P_.is_square() || !is_symmetric(P_, 1e-10) || !is_pos_def(P_))
      throw InvalidInput("barrier matrix P must be symmetric positive definite");
  }

  [[nodiscard]] const Matrix& P() const noexcept { return P_; }
  [[nodiscard]] double M() const noexcept { return M_; }

 private:
  Matrix P_;
  double M_;
};

inline double h(const Vector& x, const Zcbf& z) { return z.M() - quad_form(x, z.P()); }
inline double h(const ErrorState& x, const Zcbf& z) { return h(x.vec(), z); }

enum class Region {
  SafeInterior,  // h > mu
  Margin,        // 0 < h <= mu
  Unsafe,        // h <= 0
};

inline Region region_of(const ErrorState& x, const Zcbf& z, double mu) {
  if (!(mu > 0.0 && mu < z.M())) throw InvalidInput("mu must lie in (0, M)");
  const double hv = h(x, z);
  if (hv > mu) return Region::SafeInterior;
  return hv > 0.0 ? Region::Margin : Region::Unsafe;
}

inline std::string_view to_string(Region r) {
  switch (r) {
    case Region::SafeInterior: return "safe_interior";
    case Region::Margin: return "margin";
    case Region::Unsafe: return "unsafe";
  }
  return "?";
}

}  // namespace szcbf
