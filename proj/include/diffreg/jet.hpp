#pragma once

// Forward-mode dual numbers carrying N partial derivatives.
//
// Jet<N> is used in two places: Jet<6> carries pixel derivatives with respect
// to a left se(3) perturbation through the renderer, and Jet<9> carries the
// derivative of a pose parameterization with respect to its raw parameters.
// The value channel of every operation performs exactly the same floating
// point operation as the plain double code, so templated routines produce
// bit-identical values for double and Jet inputs.

#include <array>
#include <cmath>
#include <ostream>

#include <Eigen/Core>

namespace diffreg {

template <int N>
struct Jet {
  double v = 0.0;
  std::array<double, N> d{};

  constexpr Jet() = default;
  constexpr Jet(double value) : v(value) {}  // NOLINT: implicit constants
  constexpr Jet(double value, const std::array<double, N>& partials)
      : v(value), d(partials) {}

  /// A variable seeded with unit derivative in slot k.
  static Jet variable(double value, int k) {
    Jet j(value);
    j.d[k] = 1.0;
    return j;
  }

  Jet& operator+=(const Jet& o) {
    v += o.v;
    for (int k = 0; k < N; ++k) d[k] += o.d[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    v -= o.v;
    for (int k = 0; k < N; ++k) d[k] -= o.d[k];
    return *this;
  }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator/=(const Jet& o) { return *this = *this / o; }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(const Jet& a) {
    Jet r;
    r.v = -a.v;
    for (int k = 0; k < N; ++k) r.d[k] = -a.d[k];
    return r;
  }
  friend Jet operator+(const Jet& a) { return a; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    r.v = a.v * b.v;
    for (int k = 0; k < N; ++k) r.d[k] = a.d[k] * b.v + a.v * b.d[k];
    return r;
  }
  friend Jet operator/(const Jet& a, const Jet& b) {
    Jet r;
    r.v = a.v / b.v;
    const double inv = 1.0 / b.v;
    for (int k = 0; k < N; ++k) r.d[k] = (a.d[k] - r.v * b.d[k]) * inv;
    return r;
  }

  // The constant-operand overloads above would also be reached through the
  // implicit constructor; these skip the zero partials.
  friend Jet operator*(Jet a, double b) {
    a.v *= b;
    for (int k = 0; k < N; ++k) a.d[k] *= b;
    return a;
  }
  friend Jet operator*(double b, Jet a) {
    a.v = b * a.v;
    for (int k = 0; k < N; ++k) a.d[k] = b * a.d[k];
    return a;
  }
  friend Jet operator/(Jet a, double b) {
    a.v /= b;
    for (int k = 0; k < N; ++k) a.d[k] /= b;
    return a;
  }
  friend Jet operator+(Jet a, double b) {
    a.v += b;
    return a;
  }
  friend Jet operator+(double b, Jet a) {
    a.v = b + a.v;
    return a;
  }
  friend Jet operator-(Jet a, double b) {
    a.v -= b;
    return a;
  }
  friend Jet operator-(double b, const Jet& a) {
    Jet r;
    r.v = b - a.v;
    for (int k = 0; k < N; ++k) r.d[k] = -a.d[k];
    return r;
  }

  // Comparisons look at the value channel only.
  friend bool operator<(const Jet& a, const Jet& b) { return a.v < b.v; }
  friend bool operator>(const Jet& a, const Jet& b) { return a.v > b.v; }
  friend bool operator<=(const Jet& a, const Jet& b) { return a.v <= b.v; }
  friend bool operator>=(const Jet& a, const Jet& b) { return a.v >= b.v; }
  friend bool operator==(const Jet& a, const Jet& b) { return a.v == b.v; }
  friend bool operator!=(const Jet& a, const Jet& b) { return a.v != b.v; }

  friend std::ostream& operator<<(std::ostream& os, const Jet& j) {
    os << j.v << " [";
    for (int k = 0; k < N; ++k) os << (k ? ", " : "") << j.d[k];
    return os << "]";
  }
};

template <int N>
Jet<N> chain(const Jet<N>& x, double fx, double dfx) {
  Jet<N> r;
  r.v = fx;
  for (int k = 0; k < N; ++k) r.d[k] = dfx * x.d[k];
  return r;
}

template <int N>
Jet<N> sqrt(const Jet<N>& x) {
  const double s = std::sqrt(x.v);
  return chain(x, s, 0.5 / s);
}
template <int N>
Jet<N> sin(const Jet<N>& x) {
  return chain(x, std::sin(x.v), std::cos(x.v));
}
template <int N>
Jet<N> cos(const Jet<N>& x) {
  return chain(x, std::cos(x.v), -std::sin(x.v));
}
template <int N>
Jet<N> abs(const Jet<N>& x) {
  return x.v < 0.0 ? -x : x;
}
template <int N>
Jet<N> atan2(const Jet<N>& y, const Jet<N>& x) {
  const double r2 = x.v * x.v + y.v * y.v;
  Jet<N> r;
  r.v = std::atan2(y.v, x.v);
  for (int k = 0; k < N; ++k) r.d[k] = (x.v * y.d[k] - y.v * x.d[k]) / r2;
  return r;
}
template <int N>
bool isfinite(const Jet<N>& x) {
  if (!std::isfinite(x.v)) return false;
  for (double p : x.d)
    if (!std::isfinite(p)) return false;
  return true;
}

inline double value_of(double x) { return x; }
template <int N>
double value_of(const Jet<N>& x) {
  return x.v;
}

using Dual6 = Jet<6>;

}  // namespace diffreg

namespace Eigen {

template <int N>
struct NumTraits<diffreg::Jet<N>> : NumTraits<double> {
  using Real = diffreg::Jet<N>;
  using NonInteger = diffreg::Jet<N>;
  using Nested = diffreg::Jet<N>;
  using Literal = diffreg::Jet<N>;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = N + 1,
    AddCost = N + 1,
    MulCost = 3 * N + 1,
  };
};

template <int N, typename BinaryOp>
struct ScalarBinaryOpTraits<diffreg::Jet<N>, double, BinaryOp> {
  using ReturnType = diffreg::Jet<N>;
};
template <int N, typename BinaryOp>
struct ScalarBinaryOpTraits<double, diffreg::Jet<N>, BinaryOp> {
  using ReturnType = diffreg::Jet<N>;
};

}  // namespace Eigen
