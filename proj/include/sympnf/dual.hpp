// dual.hpp : forward-mode differentiation scalars.
//
// Dual carries a value and a gradient with respect to a fixed set of seed
// directions; HDual additionally carries the (symmetric) Hessian.  Both are
// used to evaluate expression trees, so every elementary operation the
// expression language supports is implemented here, including the flat
// builtin flat_exp(u) = exp(-1/u^2), extended by 0 at u = 0 with all
// derivatives equal to 0.

#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace sympnf {

// derivative storage: dynamic size with a stack-allocated capacity of 8
// (phase spaces in this project have dimension 2n <= 8)
using DVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 8, 1>;
using DMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 8>;

// ---------------------------------------------------------------- flat_exp

inline double flat_exp_val(double u) {
  if (u == 0.0) return 0.0;
  double w = -1.0 / (u * u);
  // exp underflows to exact 0 for |u| small; that is the intended limit.
  return std::exp(w);
}

// first derivative: f'(u) = (2/u^3) exp(-1/u^2), 0 at u = 0
inline double flat_exp_d1(double u) {
  if (u == 0.0) return 0.0;
  double f = flat_exp_val(u);
  if (f == 0.0) return 0.0;
  return 2.0 * f / (u * u * u);
}

// second derivative: f''(u) = (4/u^6 - 6/u^4) exp(-1/u^2), 0 at u = 0
inline double flat_exp_d2(double u) {
  if (u == 0.0) return 0.0;
  double f = flat_exp_val(u);
  if (f == 0.0) return 0.0;
  double u2 = u * u;
  return (4.0 / (u2 * u2 * u2) - 6.0 / (u2 * u2)) * f;
}

// ------------------------------------------------------------------- Dual

struct Dual {
  double v = 0.0;
  DVec g;  // gradient w.r.t. seed directions

  Dual() = default;
  explicit Dual(double value) : v(value) {}
  Dual(double value, DVec grad) : v(value), g(std::move(grad)) {}

  static Dual constant(double value, Eigen::Index dim) {
    return Dual(value, DVec::Zero(dim));
  }
  static Dual variable(double value, Eigen::Index dim, Eigen::Index slot) {
    DVec g = DVec::Zero(dim);
    g(slot) = 1.0;
    return Dual(value, std::move(g));
  }
};

inline Dual operator+(const Dual& a, const Dual& b) {
  return Dual(a.v + b.v, a.g + b.g);
}
inline Dual operator-(const Dual& a, const Dual& b) {
  return Dual(a.v - b.v, a.g - b.g);
}
inline Dual operator-(const Dual& a) { return Dual(-a.v, -a.g); }
inline Dual operator*(const Dual& a, const Dual& b) {
  return Dual(a.v * b.v, a.v * b.g + b.v * a.g);
}
inline Dual operator/(const Dual& a, const Dual& b) {
  double inv = 1.0 / b.v;
  double w = a.v * inv;
  return Dual(w, (a.g - w * b.g) * inv);
}

// univariate chain rule helper
inline Dual chain(const Dual& a, double f, double fp) {
  return Dual(f, fp * a.g);
}

inline Dual exp(const Dual& a) {
  double e = std::exp(a.v);
  return chain(a, e, e);
}
inline Dual sin(const Dual& a) { return chain(a, std::sin(a.v), std::cos(a.v)); }
inline Dual cos(const Dual& a) { return chain(a, std::cos(a.v), -std::sin(a.v)); }
inline Dual sqrt(const Dual& a) {
  double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s);
}
inline Dual flat_exp(const Dual& a) {
  return chain(a, flat_exp_val(a.v), flat_exp_d1(a.v));
}
inline Dual ipow(const Dual& a, int n) {
  if (n == 0) return Dual::constant(1.0, a.g.size());
  double p = std::pow(a.v, n - 1);
  return chain(a, p * a.v, n * p);
}

// ------------------------------------------------------------------ HDual

struct HDual {
  double v = 0.0;
  DVec g;
  DMat h;  // symmetric Hessian w.r.t. seed directions

  HDual() = default;

  static HDual constant(double value, Eigen::Index dim) {
    HDual r;
    r.v = value;
    r.g = DVec::Zero(dim);
    r.h = DMat::Zero(dim, dim);
    return r;
  }
  static HDual variable(double value, Eigen::Index dim, Eigen::Index slot) {
    HDual r = constant(value, dim);
    r.g(slot) = 1.0;
    return r;
  }
};

inline HDual operator+(const HDual& a, const HDual& b) {
  HDual r;
  r.v = a.v + b.v;
  r.g = a.g + b.g;
  r.h = a.h + b.h;
  return r;
}
inline HDual operator-(const HDual& a, const HDual& b) {
  HDual r;
  r.v = a.v - b.v;
  r.g = a.g - b.g;
  r.h = a.h - b.h;
  return r;
}
inline HDual operator-(const HDual& a) {
  HDual r;
  r.v = -a.v;
  r.g = -a.g;
  r.h = -a.h;
  return r;
}
inline HDual operator*(const HDual& a, const HDual& b) {
  HDual r;
  r.v = a.v * b.v;
  r.g = a.v * b.g + b.v * a.g;
  r.h = a.v * b.h + b.v * a.h + a.g * b.g.transpose() + b.g * a.g.transpose();
  return r;
}

// univariate chain rule: f(a), with f' and f''
inline HDual chain(const HDual& a, double f, double fp, double fpp) {
  HDual r;
  r.v = f;
  r.g = fp * a.g;
  r.h = fp * a.h + fpp * (a.g * a.g.transpose());
  return r;
}

inline HDual operator/(const HDual& a, const HDual& b) {
  double inv = 1.0 / b.v;
  return a * chain(b, inv, -inv * inv, 2.0 * inv * inv * inv);
}

inline HDual exp(const HDual& a) {
  double e = std::exp(a.v);
  return chain(a, e, e, e);
}
inline HDual sin(const HDual& a) {
  double s = std::sin(a.v), c = std::cos(a.v);
  return chain(a, s, c, -s);
}
inline HDual cos(const HDual& a) {
  double s = std::sin(a.v), c = std::cos(a.v);
  return chain(a, c, -s, -c);
}
inline HDual sqrt(const HDual& a) {
  double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}
inline HDual flat_exp(const HDual& a) {
  return chain(a, flat_exp_val(a.v), flat_exp_d1(a.v), flat_exp_d2(a.v));
}
inline HDual ipow(const HDual& a, int n) {
  if (n == 0) return HDual::constant(1.0, a.g.size());
  if (n == 1) return a;
  double pm2 = std::pow(a.v, n - 2);
  return chain(a, pm2 * a.v * a.v, n * pm2 * a.v, n * (n - 1) * pm2);
}

// value extraction shared by the templated expression evaluator
inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }
inline double value_of(const HDual& x) { return x.v; }

}  // namespace sympnf
