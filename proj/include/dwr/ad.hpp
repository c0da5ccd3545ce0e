#pragma once

#include <cmath>

namespace dwr {

/// First-order dual number over T; nest (Dual<Dual<double>>) for second
/// derivatives. Seeds a single direction.
template <class T>
struct Dual {
  T v{};
  T d{};

  Dual() = default;
  Dual(double x) : v(x), d() {} // NOLINT: implicit by design
  Dual(T value, T deriv) : v(std::move(value)), d(std::move(deriv)) {}
};

inline double ad_value(double x) { return x; }
template <class T>
double ad_value(const Dual<T>& x) { return ad_value(x.v); }

template <class T> Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) { return {a.v + b.v, a.d + b.d}; }
template <class T> Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) { return {a.v - b.v, a.d - b.d}; }
template <class T> Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d}; }
template <class T> Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  return {a.v * b.v, a.d * b.v + a.v * b.d};
}
template <class T> Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  T q = a.v / b.v;
  return {q, (a.d - q * b.d) / b.v};
}

template <class T> Dual<T> operator+(const Dual<T>& a, double s) { return a + Dual<T>(s); }
template <class T> Dual<T> operator+(double s, const Dual<T>& a) { return Dual<T>(s) + a; }
template <class T> Dual<T> operator-(const Dual<T>& a, double s) { return a - Dual<T>(s); }
template <class T> Dual<T> operator-(double s, const Dual<T>& a) { return Dual<T>(s) - a; }
template <class T> Dual<T> operator*(const Dual<T>& a, double s) { return {a.v * s, a.d * s}; }
template <class T> Dual<T> operator*(double s, const Dual<T>& a) { return a * s; }
template <class T> Dual<T> operator/(const Dual<T>& a, double s) { return {a.v / s, a.d / s}; }
template <class T> Dual<T> operator/(double s, const Dual<T>& a) { return Dual<T>(s) / a; }

using std::exp;
using std::log;
template <class T> Dual<T> log(const Dual<T>& a) { return {log(a.v), a.d / a.v}; }
template <class T> Dual<T> exp(const Dual<T>& a) {
  T e = exp(a.v);
  return {e, a.d * e};
}

using D1 = Dual<double>;
using D2 = Dual<Dual<double>>;

/// Minimal fixed-size 2x2 matrix over an AD-able scalar.
template <class T>
struct TMat2 {
  T m[2][2]{};

  static TMat2 identity() {
    TMat2 r;
    r.m[0][0] = T(1.0);
    r.m[1][1] = T(1.0);
    return r;
  }
  T& operator()(int i, int j) { return m[i][j]; }
  const T& operator()(int i, int j) const { return m[i][j]; }

  TMat2 operator+(const TMat2& o) const {
    TMat2 r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r.m[i][j] = m[i][j] + o.m[i][j];
    return r;
  }
  TMat2 operator-(const TMat2& o) const {
    TMat2 r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r.m[i][j] = m[i][j] - o.m[i][j];
    return r;
  }
  TMat2 operator*(const TMat2& o) const {
    TMat2 r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j];
    return r;
  }
  TMat2 transposed() const {
    TMat2 r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r.m[i][j] = m[j][i];
    return r;
  }
  T trace() const { return m[0][0] + m[1][1]; }
  T det() const { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }
};

template <class T>
TMat2<T> operator*(const T& s, const TMat2<T>& a) {
  TMat2<T> r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r.m[i][j] = s * a.m[i][j];
  return r;
}

} // namespace dwr
