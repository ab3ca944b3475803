#ifndef CURVCONT_GEOMETRY_HPP
#define CURVCONT_GEOMETRY_HPP

// Single-particle geometry of the constant-curvature surface of radius 1/eps:
// exponential chart at the North pole, its inverse, the pulled-back metric
// and geodesic angles between chart points.

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "errors.hpp"

namespace curvcont
{

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat32 = Eigen::Matrix<double, 3, 2>;

using ChartPoint = Vec2;
using AmbientPoint = Vec3;

/// Curvature sign and inverse radius. epsilon == 0 is the Euclidean plane.
struct CurvatureParam
{
  int sigma = 1;
  double epsilon = 0.0;

  CurvatureParam() = default;
  CurvatureParam(int s, double e) : sigma(s), epsilon(e)
  {
    if (s != 1 && s != -1)
      throw SchemaError("curvature sign must be +1 or -1, got " + std::to_string(s));
    if (!(e >= 0.0) || !std::isfinite(e))
      throw SchemaError("epsilon must be finite and nonnegative");
  }

  bool flat() const { return epsilon == 0.0; }
  double radius() const { return 1.0 / epsilon; }
  /// diag(1, 1, sigma): Gram matrix of the ambient sigma-inner product.
  Mat3 ambient_form() const { return Vec3(1.0, 1.0, double(sigma)).asDiagonal(); }
};

inline bool operator==(const CurvatureParam& a, const CurvatureParam& b)
{
  return a.sigma == b.sigma && a.epsilon == b.epsilon;
}

namespace detail
{

/// Margin kept from the cut locus when validating chart points (sigma = +1).
inline constexpr double chart_margin = 1e-6;
/// Below this value of eps*rho the removable singularities use a 4-term series.
inline constexpr double series_cutoff = 1e-4;
/// Derived radial functions (second derivatives, kinetic coefficient) lose
/// roughly eps/x^4 relative accuracy in closed form, so they switch earlier.
inline constexpr double derived_series_cutoff = 0.5;

template <std::size_t N>
inline double horner(const std::array<double, N>& c, double t)
{
  double acc = 0.0;
  for (std::size_t k = N; k-- > 0;)
    acc = acc * t + c[k];
  return acc;
}

// Taylor coefficients of 1/sin(x)^2 - 1/x^2 in powers of x^2.
inline constexpr std::array<double, 15> inv_sin2_coeffs = {
    1.0 / 3.0,
    1.0 / 15.0,
    2.0 / 189.0,
    1.0 / 675.0,
    2.0 / 10395.0,
    1382.0 / 58046625.0,
    4.0 / 1403325.0,
    3617.0 / 10854718875.0,
    87734.0 / 2292899734125.0,
    349222.0 / 80596287646875.0,
    310732.0 / 640374140030625.0,
    5.3846925685597234e-11,
    5.930254350058414e-12,
    6.489292139993081e-13,
    7.062066668463177e-14,
};

inline double factorial(int n)
{
  double f = 1.0;
  for (int k = 2; k <= n; ++k)
    f *= k;
  return f;
}

} // namespace detail

/// (C_sigma(x), S_sigma(x)): (cos, sin) on the sphere, (cosh, sinh) on the
/// hyperbolic plane.
inline std::pair<double, double> curv_trig(int sigma, double x)
{
  if (sigma > 0)
    return {std::cos(x), std::sin(x)};
  return {std::cosh(x), std::sinh(x)};
}

inline std::pair<double, double> curv_trig(const CurvatureParam& param, double x)
{
  return curv_trig(param.sigma, x);
}

/// 1 - C_sigma(x), evaluated without cancellation.
inline double one_minus_curv_cos(int sigma, double x)
{
  const double h = curv_trig(sigma, 0.5 * x).second;
  return sigma * 2.0 * h * h;
}

/// S_sigma(x)/x with the removable singularity at x = 0.
inline double sinc_sigma(int sigma, double x)
{
  if (std::abs(x) < detail::series_cutoff)
  {
    const double t = sigma * x * x;
    return 1.0 - t / 6.0 + t * t / 120.0 - t * t * t / 5040.0;
  }
  return curv_trig(sigma, x).second / x;
}

/// x/S_sigma(x), the factor appearing in the Log map.
inline double inv_sinc_sigma(int sigma, double x)
{
  if (std::abs(x) < detail::series_cutoff)
  {
    const double t = sigma * x * x;
    return 1.0 + t / 6.0 + 7.0 * t * t / 360.0 + 31.0 * t * t * t / 15120.0;
  }
  return x / curv_trig(sigma, x).second;
}

/// Radial profile functions of the chart in terms of x = eps*rho. All of
/// them are even in x and smooth at the pole.
struct RadialProfile
{
  double s = 1.0;    ///< s_sigma(rho) = S(x)/x
  double ds = 0.0;   ///< s'(rho)/rho
  double dds = 0.0;  ///< (s'(rho)/rho)'/rho
  double c = 1.0;    ///< C(x)
  double vc = 0.0;   ///< 1 - C(x)
  double beta = 0.0; ///< (1/A - 1)/rho^2 with A = s^2
  double dbeta = 0.0; ///< beta'(rho)/rho
};

inline RadialProfile radial_profile(const CurvatureParam& param, double rho)
{
  RadialProfile r;
  const double eps = param.epsilon;
  if (eps == 0.0)
    return r;
  const int sg = param.sigma;
  const double x = eps * rho;
  const double e2 = eps * eps;
  const double e4 = e2 * e2;
  const auto [C, S] = curv_trig(sg, x);
  r.s = sinc_sigma(sg, x);
  r.c = C;
  r.vc = one_minus_curv_cos(sg, x);

  if (x < detail::derived_series_cutoff)
  {
    // s = sum_k (-t)^k/(2k+1)!, t = sigma x^2
    const double t = sg * x * x;
    double g = 0.0, dg = 0.0, mt = 1.0;
    for (int j = 0; j < 12; ++j)
    {
      // g = s'(x)/x and g'(x)/x as series in (-t)
      g += -sg * (2.0 * j + 2.0) / detail::factorial(2 * j + 3) * mt;
      dg += (2.0 * j + 2.0) * (2.0 * j + 4.0) / detail::factorial(2 * j + 5) * mt;
      mt *= -t;
    }
    r.ds = e2 * g;
    r.dds = e4 * dg;

    std::array<double, 15> bc = detail::inv_sin2_coeffs;
    r.beta = e2 * sg * detail::horner(bc, t);
    std::array<double, 14> dbc{};
    for (std::size_t k = 1; k < bc.size(); ++k)
      dbc[k - 1] = 2.0 * double(k) * bc[k];
    r.dbeta = e4 * detail::horner(dbc, t);
  }
  else
  {
    const double x2 = x * x;
    const double x3 = x2 * x;
    r.ds = e2 * (x * C - S) / x3;
    r.dds = e4 * (-sg * S / x3 - 3.0 * (x * C - S) / (x3 * x2));
    r.beta = e2 * (1.0 / (S * S) - 1.0 / x2);
    r.dbeta = e4 * (-2.0 * C / (x * S * S * S) + 2.0 / (x2 * x2));
  }
  return r;
}

/// Throws unless w lies strictly inside the injectivity ball (with margin).
inline void check_chart(const CurvatureParam& param, const ChartPoint& w)
{
  if (!w.allFinite())
    throw ChartDomainError("non-finite chart point");
  if (param.sigma > 0 && param.epsilon > 0.0 &&
      param.epsilon * w.norm() > std::numbers::pi - detail::chart_margin)
    throw ChartDomainError("eps*rho = " + std::to_string(param.epsilon * w.norm()) +
                           " reaches the cut locus (pi)");
}

inline bool chart_valid(const CurvatureParam& param, const ChartPoint& w)
{
  return w.allFinite() && !(param.sigma > 0 && param.epsilon > 0.0 &&
                            param.epsilon * w.norm() > std::numbers::pi - detail::chart_margin);
}

inline void require_curved(const CurvatureParam& param, const char* op)
{
  if (param.flat())
    throw FlatLimitError(std::string(op) + " is undefined at epsilon = 0; use the identity chart");
}

/// <x, y>_sigma = x1 y1 + x2 y2 + sigma x3 y3
inline double sigma_dot(int sigma, const Vec3& x, const Vec3& y)
{
  return x(0) * y(0) + x(1) * y(1) + sigma * x(2) * y(2);
}

/// Riemannian exponential at N = (0, 0, 1/eps).
inline AmbientPoint exp_chart(const CurvatureParam& param, const ChartPoint& w)
{
  require_curved(param, "exp_chart");
  check_chart(param, w);
  const double rho = w.norm();
  const double x = param.epsilon * rho;
  const double s = sinc_sigma(param.sigma, x);
  return {w(0) * s, w(1) * s, curv_trig(param.sigma, x).first / param.epsilon};
}

/// Inverse of exp_chart. The angle psi is recovered from the horizontal
/// radius and the height together, which stays accurate near the pole.
inline ChartPoint log_chart(const CurvatureParam& param, const AmbientPoint& q)
{
  require_curved(param, "log_chart");
  const double eps = param.epsilon;
  const int sg = param.sigma;
  if (!q.allFinite())
    throw InvalidAmbientError("non-finite ambient point");
  const double residual = std::abs(eps * eps * sigma_dot(sg, q, q) - sg);
  if (residual > 1e-9)
    throw InvalidAmbientError("constraint residual " + std::to_string(residual));
  if (sg < 0 && q(2) <= 0.0)
    throw InvalidAmbientError("hyperboloid point must have Z > 0");

  const double h = std::hypot(q(0), q(1));
  double psi;
  if (sg > 0)
    psi = std::atan2(eps * h, eps * q(2));
  else
    psi = std::asinh(eps * h);
  if (sg > 0 && psi >= std::numbers::pi - 1e-8)
    throw CutLocusError("point too close to the South pole (psi = " + std::to_string(psi) + ")");
  // |(X,Y)| = S(psi)/eps, so w = psi/S(psi) (X,Y).
  const double factor = inv_sinc_sigma(sg, psi);
  return {q(0) * factor, q(1) * factor};
}

/// Pulled-back metric g = A I + (1 - A) P(w) and its inverse.
struct MetricAtPoint
{
  Mat2 g;
  Mat2 g_inv;
};

inline MetricAtPoint metric_at(const CurvatureParam& param, const ChartPoint& w)
{
  check_chart(param, w);
  if (param.flat())
    return {Mat2::Identity(), Mat2::Identity()};
  const RadialProfile r = radial_profile(param, w.norm());
  const double A = r.s * r.s;
  // (1 - A)/rho^2 = A beta and (1/A - 1)/rho^2 = beta, smooth at w = 0.
  const Mat2 wwT = w * w.transpose();
  MetricAtPoint m;
  m.g = A * Mat2::Identity() + (A * r.beta) * wwT;
  m.g_inv = (1.0 / A) * Mat2::Identity() + (-r.beta) * wwT;
  return m;
}

/// 3x2 Jacobian of exp_chart; columns are the coordinate tangent vectors.
inline Mat32 chart_jacobian(const CurvatureParam& param, const ChartPoint& w)
{
  require_curved(param, "chart_jacobian");
  check_chart(param, w);
  const RadialProfile r = radial_profile(param, w.norm());
  Mat32 J;
  J.topRows<2>() = r.s * Mat2::Identity() + r.ds * (w * w.transpose());
  J.row(2) = -param.sigma * param.epsilon * r.s * w.transpose();
  return J;
}

/// Second derivatives of exp_chart: hess[k] = d/dw_k of chart_jacobian.
inline std::array<Mat32, 2> chart_jacobian_derivative(const CurvatureParam& param, const ChartPoint& w)
{
  require_curved(param, "chart_jacobian_derivative");
  check_chart(param, w);
  const RadialProfile r = radial_profile(param, w.norm());
  const double se = param.sigma * param.epsilon;
  std::array<Mat32, 2> d;
  for (int k = 0; k < 2; ++k)
  {
    Mat32& D = d[k];
    // d/dw_k [ s delta_ij + ds w_i w_j ]
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
      {
        double v = r.ds * w(k) * (i == j ? 1.0 : 0.0);
        v += r.dds * w(k) * w(i) * w(j);
        v += r.ds * ((i == k ? w(j) : 0.0) + (j == k ? w(i) : 0.0));
        D(i, j) = v;
      }
    // d/dw_k [ -sigma eps s w_j ]
    for (int j = 0; j < 2; ++j)
      D(2, j) = -se * (r.ds * w(k) * w(j) + r.s * (j == k ? 1.0 : 0.0));
  }
  return d;
}

/// Difference exp_chart(w1) - exp_chart(w2) with the height difference
/// computed from versines so that nearby points keep full precision.
inline Vec3 ambient_difference(const CurvatureParam& param, const ChartPoint& w1, const ChartPoint& w2)
{
  const double eps = param.epsilon;
  const int sg = param.sigma;
  const double x1 = eps * w1.norm();
  const double x2 = eps * w2.norm();
  const double s1 = sinc_sigma(sg, x1);
  const double s2 = sinc_sigma(sg, x2);
  Vec3 d;
  d.head<2>() = w1 * s1 - w2 * s2;
  d(2) = (one_minus_curv_cos(sg, x2) - one_minus_curv_cos(sg, x1)) / eps;
  return d;
}

/// Geodesic angle psi = eps * d(q1, q2) between two chart points, obtained
/// from the chord: sin(psi/2) (or sinh) = eps |q1 - q2|_sigma / 2.
inline double geodesic_angle(const CurvatureParam& param, const ChartPoint& w1, const ChartPoint& w2)
{
  require_curved(param, "geodesic_angle");
  check_chart(param, w1);
  check_chart(param, w2);
  const Vec3 d = ambient_difference(param, w1, w2);
  const double chord2 = std::max(0.0, sigma_dot(param.sigma, d, d));
  const double half = 0.5 * param.epsilon * std::sqrt(chord2);
  double psi;
  if (param.sigma > 0)
  {
    if (half >= 1.0)
      throw AntipodalError("antipodal pair");
    psi = 2.0 * std::asin(half);
    if (psi > std::numbers::pi - 1e-8)
      throw AntipodalError("psi = " + std::to_string(psi) + " too close to pi");
  }
  else
  {
    psi = 2.0 * std::asinh(half);
  }
  if (psi < 1e-12)
    throw CoincidentError("coincident points (psi = " + std::to_string(psi) + ")");
  return psi;
}

/// 1 - C_sigma(psi) for the pair, without cancellation (expansion checks).
inline double one_minus_cos_angle(const CurvatureParam& param, const ChartPoint& w1, const ChartPoint& w2)
{
  require_curved(param, "one_minus_cos_angle");
  const Vec3 d = ambient_difference(param, w1, w2);
  return param.sigma * param.epsilon * param.epsilon * sigma_dot(param.sigma, d, d) / 2.0;
}

} // namespace curvcont

#endif
