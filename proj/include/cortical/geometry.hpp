#pragma once

// Five-dimensional cortical space Q = R^2 x S^1 x R^+ x S^1 with coordinates
// (x, y, theta, f, s): its contact one-form, the horizontal frame X1..X4, their
// Lie brackets and constant-coefficient horizontal integral curves.

#include <array>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cortical/errors.hpp"

namespace cortical {

/// Tangent vector in coordinate order (x, y, theta, f, s).
struct TangentVector5 {
  std::array<double, 5> c{};

  double dx() const { return c[0]; }
  double dy() const { return c[1]; }
  double dtheta() const { return c[2]; }
  double df() const { return c[3]; }
  double ds() const { return c[4]; }

  double& operator[](std::size_t i) { return c[i]; }
  double operator[](std::size_t i) const { return c[i]; }

  TangentVector5& operator+=(const TangentVector5& o)
  {
    for (std::size_t i = 0; i < 5; ++i) c[i] += o.c[i];
    return *this;
  }
  friend TangentVector5 operator+(TangentVector5 a, const TangentVector5& b) { return a += b; }
  friend TangentVector5 operator-(TangentVector5 a, const TangentVector5& b)
  {
    for (std::size_t i = 0; i < 5; ++i) a.c[i] -= b.c[i];
    return a;
  }
  friend TangentVector5 operator*(double s, TangentVector5 v)
  {
    for (auto& x : v.c) x *= s;
    return v;
  }
  friend bool operator==(const TangentVector5&, const TangentVector5&) = default;

  bool finite() const
  {
    for (double x : c) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  }
};

/// A point (x, y, theta, f, s) of Q. theta is reduced into [0, pi) and s into
/// [0, 2 pi) on construction; f must be positive.
class CorticalPoint {
public:
  CorticalPoint(double x, double y, double theta, double f, double s)
      : x_(x), y_(y), theta_(reduce(theta, std::numbers::pi)), f_(f), s_(reduce(s, 2 * std::numbers::pi))
  {
    detail::require(std::isfinite(x) && std::isfinite(y) && std::isfinite(theta) && std::isfinite(f) &&
                        std::isfinite(s),
                    "CorticalPoint: coordinates must be finite");
    detail::require(f > 0, "CorticalPoint: frequency f must be > 0");
  }

  double x() const { return x_; }
  double y() const { return y_; }
  double theta() const { return theta_; }
  double f() const { return f_; }
  double s() const { return s_; }

  friend bool operator==(const CorticalPoint&, const CorticalPoint&) = default;

private:
  static double reduce(double v, double period)
  {
    double r = std::fmod(v, period);
    if (r < 0) r += period;
    // fmod of a tiny negative value can round up to exactly `period`
    return r >= period ? 0.0 : r;
  }

  double x_, y_, theta_, f_, s_;
};

/// Theta(v) = -f sin(theta) dx + f cos(theta) dy - ds, evaluated at p.
inline double one_form_eval(const CorticalPoint& p, const TangentVector5& v)
{
  return -p.f() * std::sin(p.theta()) * v.dx() + p.f() * std::cos(p.theta()) * v.dy() - v.ds();
}

namespace detail {

inline std::array<TangentVector5, 4> frame_at(double theta, double f)
{
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {{
      {{c, s, 0, 0, 0}},
      {{0, 0, 1, 0, 0}},
      {{-s, c, 0, 0, f}},
      {{0, 0, 0, 1, 0}},
  }};
}

} // namespace detail

/// X1..X4 at p, spanning the kernel of the one-form.
inline std::array<TangentVector5, 4> horizontal_frame(const CorticalPoint& p)
{
  return detail::frame_at(p.theta(), p.f());
}

/// [X_i, X_j] at p for 1-based field indices. Only [X1,X2], [X2,X3] and [X3,X4]
/// (and their negatives) are nonzero.
inline TangentVector5 lie_bracket(int i, int j, const CorticalPoint& p)
{
  if (i < 1 || i > 4 || j < 1 || j > 4) {
    throw std::out_of_range("lie_bracket: field indices must lie in 1..4, got (" + std::to_string(i) + ", " +
                            std::to_string(j) + ")");
  }
  if (i > j) return -1.0 * lie_bracket(j, i, p);

  const double c = std::cos(p.theta());
  const double s = std::sin(p.theta());
  if (i == 1 && j == 2) return {{s, -c, 0, 0, 0}};
  if (i == 2 && j == 3) return {{-c, -s, 0, 0, 0}};
  if (i == 3 && j == 4) return {{0, 0, 0, 0, -1}};
  return {};
}

// ---------------------------------------------------------------------------
// Horizontal integral curves

enum class Integrator { euler, rk4 };

/// Constant coefficients of gamma' = c1 X1 + c2 X2 + c3 X3 + c4 X4.
using CurveCoefficients = std::array<double, 4>;

/// Curves whose frequency would drop to this floor are truncated.
inline constexpr double frequency_floor = 1e-6;

struct CurveSample {
  double t;
  CorticalPoint point;
  // theta and s along the universal cover, so arcs stay continuous
  double theta_unwrapped;
  double s_unwrapped;
};

struct IntegralCurve {
  std::vector<CurveSample> samples;
  CurveCoefficients coeffs{};
  double step = 0;
  bool truncated = false;

  const CurveSample& front() const { return samples.front(); }
  const CurveSample& back() const { return samples.back(); }
};

namespace detail {

using State5 = std::array<double, 5>;

inline State5 horizontal_velocity(const State5& q, const CurveCoefficients& c)
{
  const double ct = std::cos(q[2]);
  const double st = std::sin(q[2]);
  return {c[0] * ct - c[2] * st, c[0] * st + c[2] * ct, c[1], c[3], c[2] * q[3]};
}

inline State5 axpy(const State5& q, double h, const State5& v)
{
  State5 r;
  for (std::size_t i = 0; i < 5; ++i) r[i] = q[i] + h * v[i];
  return r;
}

inline State5 advance(const State5& q, const CurveCoefficients& c, double h, Integrator method)
{
  if (method == Integrator::euler) return axpy(q, h, horizontal_velocity(q, c));

  const State5 k1 = horizontal_velocity(q, c);
  const State5 k2 = horizontal_velocity(axpy(q, h / 2, k1), c);
  const State5 k3 = horizontal_velocity(axpy(q, h / 2, k2), c);
  const State5 k4 = horizontal_velocity(axpy(q, h, k3), c);
  State5 r;
  for (std::size_t i = 0; i < 5; ++i) r[i] = q[i] + h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  return r;
}

inline CurveSample make_sample(double t, const State5& q)
{
  return {t, CorticalPoint(q[0], q[1], q[2], q[3], q[4]), q[2], q[4]};
}

} // namespace detail

/// Integrates the constant-coefficient horizontal curve from `start` for
/// `duration`, sampling every `step`. Integration starts from the reduced
/// coordinates of `start`.
inline IntegralCurve integrate_curve(const CorticalPoint& start, const CurveCoefficients& coeffs, double step,
                                     double duration, Integrator method = Integrator::rk4)
{
  for (double c : coeffs) detail::require(std::isfinite(c), "integrate_curve: coefficients must be finite");
  detail::require(std::isfinite(step) && step > 0, "integrate_curve: step must be finite and > 0");
  detail::require(std::isfinite(duration) && duration > 0, "integrate_curve: duration must be finite and > 0");
  detail::require(step <= duration, "integrate_curve: step must not exceed duration");

  IntegralCurve curve;
  curve.coeffs = coeffs;
  curve.step = step;

  const auto steps = static_cast<std::size_t>(std::floor(duration / step + 1e-9));
  curve.samples.reserve(steps + 1);

  detail::State5 q{start.x(), start.y(), start.theta(), start.f(), start.s()};
  curve.samples.push_back(detail::make_sample(0.0, q));
  for (std::size_t n = 1; n <= steps; ++n) {
    const detail::State5 next = detail::advance(q, coeffs, step, method);
    bool ok = next[3] > frequency_floor;
    for (double v : next) ok = ok && std::isfinite(v);
    if (!ok) {
      curve.truncated = true;
      break;
    }
    q = next;
    curve.samples.push_back(detail::make_sample(static_cast<double>(n) * step, q));
  }
  return curve;
}

/// Which two-field family a fan sweeps: X1 + c X2 or X3 + c X4.
enum class FanFamily { x1_x2, x3_x4 };

struct FanSweep {
  FanFamily family = FanFamily::x1_x2;
  std::vector<double> values;
};

inline CurveCoefficients fan_coefficients(FanFamily family, double value)
{
  return family == FanFamily::x1_x2 ? CurveCoefficients{1, value, 0, 0} : CurveCoefficients{0, 0, 1, value};
}

inline std::vector<IntegralCurve> curve_fan(const CorticalPoint& start, const FanSweep& sweep, double step,
                                            double duration, Integrator method = Integrator::rk4)
{
  detail::require(!sweep.values.empty(), "curve_fan: coefficient list must be nonempty");
  std::vector<IntegralCurve> fan;
  fan.reserve(sweep.values.size());
  for (double v : sweep.values) {
    fan.push_back(integrate_curve(start, fan_coefficients(sweep.family, v), step, duration, method));
  }
  return fan;
}

/// CSV with header `t,x,y,theta,f,s`; theta and s are written unwrapped.
inline void write_curve_csv(std::ostream& os, const IntegralCurve& curve)
{
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << "t,x,y,theta,f,s\n" << std::setprecision(17);
  for (const auto& smp : curve.samples) {
    os << smp.t << ',' << smp.point.x() << ',' << smp.point.y() << ',' << smp.theta_unwrapped << ','
       << smp.point.f() << ',' << smp.s_unwrapped << '\n';
  }
  os.flags(flags);
  os.precision(precision);
}

} // namespace cortical
