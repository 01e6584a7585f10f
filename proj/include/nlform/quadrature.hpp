#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "nlform/errors.hpp"

namespace nlform {

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;
  bool converged = false;
  std::size_t evals = 0;
};

namespace detail {

// Gauss-Kronrod 7-15 nodes on [0,1] side (symmetric).  Index 0 is the center.
inline constexpr double kGK15Node[8] = {
    0.000000000000000000, 0.207784955007898468, 0.405845151377397167,
    0.586087235467691130, 0.741531185599394440, 0.864864423359769073,
    0.949107912342758525, 0.991455371120812639};
inline constexpr double kGK15WK[8] = {
    0.209482141084727828, 0.204432940075298892, 0.190350578064785410,
    0.169004726639267903, 0.140653259715525919, 0.104790010322250184,
    0.063092092629978553, 0.022935322010529225};
// 7-point Gauss weights sit on the odd Kronrod nodes.
inline constexpr double kGK15WG[4] = {
    0.417959183673469388, 0.381830050505118945, 0.279705391489276668,
    0.129484966168869693};

template <class F>
inline void gk15(const F& f, double a, double b, double& value, double& err) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = kGK15WK[0] * fc;
  double gauss = kGK15WG[0] * fc;
  for (int j = 1; j < 8; ++j) {
    const double dx = h * kGK15Node[j];
    const double fsum = f(c - dx) + f(c + dx);
    kron += kGK15WK[j] * fsum;
    if (j % 2 == 0) gauss += kGK15WG[j / 2] * fsum;
  }
  value = kron * h;
  const double diff = std::fabs(kron - gauss) * std::fabs(h);
  // QUADPACK-style sharpened error estimate.
  err = diff * std::sqrt(diff) * 200.0;
  if (err > diff) err = diff;
  if (err < 1e-250) err = diff;
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration of f over [a,b].
template <class F>
QuadResult integrate(const F& f, double a, double b, double abs_tol,
                     int max_segments = 2000) {
  QuadResult out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  struct Seg {
    double a, b, value, err;
  };
  std::vector<Seg> segs;
  segs.reserve(64);
  double v, e;
  detail::gk15(f, a, b, v, e);
  out.evals += 15;
  segs.push_back({a, b, v, e});
  double total_err = e;
  double total_val = v;
  while (total_err > abs_tol && static_cast<int>(segs.size()) < max_segments) {
    // Split the segment with the largest error.
    std::size_t worst = 0;
    for (std::size_t i = 1; i < segs.size(); ++i)
      if (segs[i].err > segs[worst].err) worst = i;
    const Seg s = segs[worst];
    const double m = 0.5 * (s.a + s.b);
    if (m == s.a || m == s.b) break;  // interval exhausted at machine precision
    Seg left{s.a, m, 0, 0}, right{m, s.b, 0, 0};
    detail::gk15(f, left.a, left.b, left.value, left.err);
    detail::gk15(f, right.a, right.b, right.value, right.err);
    out.evals += 30;
    segs[worst] = left;
    segs.push_back(right);
    total_err += left.err + right.err - s.err;
    total_val += left.value + right.value - s.value;
  }
  // Recompute the totals by summation to avoid drift.
  total_val = 0.0;
  total_err = 0.0;
  for (const auto& s : segs) {
    total_val += s.value;
    total_err += s.err;
  }
  out.value = total_val;
  out.abs_error = total_err;
  out.converged = total_err <= abs_tol;
  return out;
}

/// Integral of f over [a, inf), mapped to a finite interval.
template <class F>
QuadResult integrate_to_inf(const F& f, double a, double abs_tol) {
  // t = a + s/(1-s) maps [0,1) onto [a,inf); dt = ds/(1-s)^2.
  auto g = [&](double s) {
    const double om = 1.0 - s;
    const double t = a + s / om;
    return f(t) / (om * om);
  };
  return integrate(g, 0.0, 1.0, abs_tol);
}

namespace detail {
// 16-point Gauss-Legendre nodes/weights on [-1,1] (positive half).
inline constexpr double kGL16Node[8] = {
    0.095012509837637440185, 0.281603550779258913230, 0.458016777657227386342,
    0.617876244402643748447, 0.755404408355003033895, 0.865631202387831743880,
    0.944575023073232576078, 0.989400934991649932596};
inline constexpr double kGL16Weight[8] = {
    0.189450610455068496285, 0.182603415044923588867, 0.169156519395002538189,
    0.149595988816576732081, 0.124628971255533872052, 0.095158511682492784810,
    0.062253523938647892863, 0.027152459411754094852};
}  // namespace detail

/// Composite 16-point Gauss-Legendre rule with `panels` equal panels.
template <class F>
double gauss_legendre_composite(const F& f, double a, double b, int panels) {
  const double w = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double c = a + (p + 0.5) * w;
    const double h = 0.5 * w;
    double s = 0.0;
    for (int j = 0; j < 8; ++j) {
      const double dx = h * detail::kGL16Node[j];
      s += detail::kGL16Weight[j] * (f(c - dx) + f(c + dx));
    }
    sum += s * h;
  }
  return sum;
}

}  // namespace nlform
