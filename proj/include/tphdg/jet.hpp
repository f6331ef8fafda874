// Forward-mode dual numbers carrying d/dx, d/dy, d/dt.
#pragma once

#include <cmath>

namespace tphdg {

struct Jet {
  double v = 0.0;
  double d[3] = {0.0, 0.0, 0.0};

  Jet() = default;
  Jet(double value) : v(value) {}  // NOLINT: constants promote implicitly
  Jet(double value, int var) : v(value) { d[var] = 1.0; }

  double dx() const { return d[0]; }
  double dy() const { return d[1]; }
  double dt() const { return d[2]; }
};

inline Jet operator+(const Jet& a, const Jet& b) {
  Jet r(a.v + b.v);
  for (int i = 0; i < 3; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}
inline Jet operator-(const Jet& a, const Jet& b) {
  Jet r(a.v - b.v);
  for (int i = 0; i < 3; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}
inline Jet operator-(const Jet& a) {
  Jet r(-a.v);
  for (int i = 0; i < 3; ++i) r.d[i] = -a.d[i];
  return r;
}
inline Jet operator*(const Jet& a, const Jet& b) {
  Jet r(a.v * b.v);
  for (int i = 0; i < 3; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}
inline Jet operator/(const Jet& a, const Jet& b) {
  Jet r(a.v / b.v);
  for (int i = 0; i < 3; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) / (b.v * b.v);
  return r;
}
inline Jet& operator+=(Jet& a, const Jet& b) { return a = a + b; }
inline Jet& operator*=(Jet& a, const Jet& b) { return a = a * b; }

inline Jet sin(const Jet& a) {
  Jet r(std::sin(a.v));
  const double c = std::cos(a.v);
  for (int i = 0; i < 3; ++i) r.d[i] = c * a.d[i];
  return r;
}
inline Jet cos(const Jet& a) {
  Jet r(std::cos(a.v));
  const double s = -std::sin(a.v);
  for (int i = 0; i < 3; ++i) r.d[i] = s * a.d[i];
  return r;
}
inline Jet exp(const Jet& a) {
  Jet r(std::exp(a.v));
  for (int i = 0; i < 3; ++i) r.d[i] = r.v * a.d[i];
  return r;
}
inline Jet pow(const Jet& a, int n) {
  Jet r(1.0);
  for (int i = 0; i < n; ++i) r = r * a;
  return r;
}

}  // namespace tphdg
