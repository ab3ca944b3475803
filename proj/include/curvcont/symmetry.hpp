#ifndef CURVCONT_SYMMETRY_HPP
#define CURVCONT_SYMMETRY_HPP

// The contracted algebra g_eps with basis b1 = eps E1, b2 = eps E2, b3 = E3,
// the groups it integrates to, their action on chart points and covectors,
// and the momentum map with its coadjoint geometry.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "geometry.hpp"

namespace curvcont
{

/// Coefficients (a, b, omega) in the basis {b1, b2, b3}.
using AlgebraElement = Vec3;
/// Dual coefficients (mu1, mu2, L); pairing is the plain dot product.
using MomentumValue = Vec3;
using Covector = Vec2;

inline AlgebraElement basis_b1() { return {1.0, 0.0, 0.0}; }
inline AlgebraElement basis_b2() { return {0.0, 1.0, 0.0}; }
inline AlgebraElement basis_b3() { return {0.0, 0.0, 1.0}; }

inline double pairing(const MomentumValue& mu, const AlgebraElement& xi) { return mu.dot(xi); }

inline Mat2 rotation2(double angle)
{
  const double c = std::cos(angle), s = std::sin(angle);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

/// [x, y]_eps with [b1,b2] = sigma eps^2 b3, [b2,b3] = b1, [b3,b1] = b2.
inline AlgebraElement bracket(const CurvatureParam& param, const AlgebraElement& x, const AlgebraElement& y)
{
  const double k = param.sigma * param.epsilon * param.epsilon;
  return {x(1) * y(2) - x(2) * y(1), x(2) * y(0) - x(0) * y(2), k * (x(0) * y(1) - x(1) * y(0))};
}

/// Ambient matrix a eps E1 + b eps E2 + omega E3 acting on (X, Y, Z).
inline Mat3 algebra_matrix(const CurvatureParam& param, const AlgebraElement& xi)
{
  const double e = param.epsilon;
  const double s = param.sigma;
  Mat3 m;
  m << 0.0, -xi(2), xi(0) * e,
      xi(2), 0.0, xi(1) * e,
      -s * xi(0) * e, -s * xi(1) * e, 0.0;
  return m;
}

/// Isometry of the model surface. Curved elements are 3x3 ambient matrices;
/// flat ones are kept as (translation, angle) and act by w -> R w + t.
struct GroupElement
{
  bool flat = false;
  Mat3 mat = Mat3::Identity();
  Vec2 translation = Vec2::Zero();
  double angle = 0.0;

  static GroupElement identity(const CurvatureParam& param)
  {
    GroupElement g;
    g.flat = param.flat();
    return g;
  }

  GroupElement operator*(const GroupElement& o) const
  {
    GroupElement r;
    r.flat = flat;
    if (flat)
    {
      r.translation = translation + rotation2(angle) * o.translation;
      r.angle = angle + o.angle;
    }
    else
      r.mat = mat * o.mat;
    return r;
  }

  GroupElement inverse(const CurvatureParam& param) const
  {
    GroupElement r;
    r.flat = flat;
    if (flat)
    {
      r.angle = -angle;
      r.translation = -(rotation2(-angle) * translation);
    }
    else
    {
      // g^-1 = Gs g^T Gs for both SO(3) and SO+(2,1)
      const Mat3 gs = param.ambient_form();
      r.mat = gs * mat.transpose() * gs;
    }
    return r;
  }
};

namespace detail
{

// sin(phi)/phi and (1 - cos(phi))/phi^2 as functions of phi^2, either sign.
inline std::pair<double, double> rodrigues_coeffs(double phi2)
{
  const int sg = phi2 >= 0.0 ? 1 : -1;
  const double phi = std::sqrt(std::abs(phi2));
  const double f1 = sinc_sigma(sg, phi);
  const double h = sinc_sigma(sg, 0.5 * phi);
  return {f1, 0.5 * h * h};
}

} // namespace detail

/// exp(t xi). Uses M^3 = -theta^2 M with theta^2 = omega^2 + sigma eps^2 (a^2 + b^2),
/// so the exponential has a closed Rodrigues form on both curved groups.
inline GroupElement exp_group(const CurvatureParam& param, const AlgebraElement& xi, double t = 1.0)
{
  GroupElement g;
  if (param.flat())
  {
    g.flat = true;
    const double th = t * xi(2);
    const auto [f1, f2] = detail::rodrigues_coeffs(th * th);
    Mat2 v;
    v << f1, -f2 * th, f2 * th, f1;
    g.translation = v * (t * xi.head<2>());
    g.angle = th;
    return g;
  }
  const Mat3 m = t * algebra_matrix(param, xi);
  const double e2 = param.epsilon * param.epsilon;
  const double phi2 = t * t * (xi(2) * xi(2) + param.sigma * e2 * (xi(0) * xi(0) + xi(1) * xi(1)));
  const auto [f1, f2] = detail::rodrigues_coeffs(phi2);
  g.mat = Mat3::Identity() + f1 * m + f2 * (m * m);
  return g;
}

inline AmbientPoint act_ambient(const GroupElement& g, const AmbientPoint& q) { return g.mat * q; }

/// g * w = Log(g Exp(w)); the flat case applies the SE(2) element directly.
inline ChartPoint act_chart(const CurvatureParam& param, const GroupElement& g, const ChartPoint& w)
{
  if (param.flat())
    return rotation2(g.angle) * w + g.translation;
  return log_chart(param, g.mat * exp_chart(param, w));
}

/// Cotangent lift of the chart action: image of the covector alpha at w,
/// attached at w' = g * w. Raise with the metric, push through g, lower again.
inline std::pair<ChartPoint, Covector> act_cotangent(const CurvatureParam& param, const GroupElement& g,
                                                     const ChartPoint& w, const Covector& alpha)
{
  if (param.flat())
    return {rotation2(g.angle) * w + g.translation, rotation2(g.angle) * alpha};
  const ChartPoint w2 = act_chart(param, g, w);
  const Vec3 tangent = chart_jacobian(param, w) * (metric_at(param, w).g_inv * alpha);
  const Vec3 pushed = g.mat * tangent;
  const Covector a2 = chart_jacobian(param, w2).transpose() * (param.ambient_form() * pushed);
  return {w2, a2};
}

/// Infinitesimal generator of xi at a chart point.
inline Vec2 generator_chart(const CurvatureParam& param, const AlgebraElement& xi, const ChartPoint& w)
{
  check_chart(param, w);
  if (param.flat())
    return {xi(0) - xi(2) * w(1), xi(1) + xi(2) * w(0)};
  const Mat32 J = chart_jacobian(param, w);
  const Vec3 field = algebra_matrix(param, xi) * exp_chart(param, w);
  return metric_at(param, w).g_inv * (J.transpose() * (param.ambient_form() * field));
}

/// Jacobian d(generator_chart)/dw, column k = derivative along w_k.
inline Mat2 generator_chart_jacobian(const CurvatureParam& param, const AlgebraElement& xi, const ChartPoint& w)
{
  check_chart(param, w);
  if (param.flat())
  {
    Mat2 d;
    d << 0.0, -xi(2), xi(2), 0.0;
    return d;
  }
  const Mat3 gs = param.ambient_form();
  const Mat3 m = algebra_matrix(param, xi);
  const Mat32 J = chart_jacobian(param, w);
  const auto dJ = chart_jacobian_derivative(param, w);
  const Mat2 ginv = metric_at(param, w).g_inv;
  const Vec3 field = m * exp_chart(param, w);
  const Vec2 F = J.transpose() * (gs * field);
  Mat2 out;
  for (int k = 0; k < 2; ++k)
  {
    const Vec2 dF = dJ[k].transpose() * (gs * field) + J.transpose() * (gs * (m * J.col(k)));
    const Mat2 dG = dJ[k].transpose() * gs * J + J.transpose() * gs * dJ[k];
    out.col(k) = -ginv * dG * ginv * F + ginv * dF;
  }
  return out;
}

/// Cotangent-lifted generator on one particle's phase space (w, alpha):
/// (xi_chart(w), -(D xi_chart)^T alpha).
inline std::pair<Vec2, Vec2> generator_cotangent(const CurvatureParam& param, const AlgebraElement& xi,
                                                 const ChartPoint& w, const Covector& alpha)
{
  return {generator_chart(param, xi, w), -(generator_chart_jacobian(param, xi, w).transpose() * alpha)};
}

/// Momentum map of one particle in the contracted dual basis.
inline MomentumValue momentum_single(const CurvatureParam& param, const ChartPoint& w, const Covector& alpha)
{
  check_chart(param, w);
  if (param.flat())
    return {alpha(0), alpha(1), w(0) * alpha(1) - w(1) * alpha(0)};
  const AmbientPoint q = exp_chart(param, w);
  const Vec3 p = chart_jacobian(param, w) * (metric_at(param, w).g_inv * alpha);
  const double e = param.epsilon;
  return {e * (q(2) * p(0) - q(0) * p(2)), e * (q(2) * p(1) - q(1) * p(2)), q(0) * p(1) - q(1) * p(0)};
}

/// ad*_xi mu defined by <ad*_xi mu, eta> = <mu, [xi, eta]_eps>.
inline MomentumValue coadjoint(const CurvatureParam& param, const AlgebraElement& xi, const MomentumValue& mu)
{
  const double k = param.sigma * param.epsilon * param.epsilon;
  const double a = xi(0), b = xi(1), w = xi(2);
  return {w * mu(1) - k * b * mu(2), -w * mu(0) + k * a * mu(2), b * mu(0) - a * mu(1)};
}

/// Matrix of eta -> ad*_eta mu.
inline Mat3 coadjoint_matrix(const CurvatureParam& param, const MomentumValue& mu)
{
  Mat3 k;
  for (int j = 0; j < 3; ++j)
    k.col(j) = coadjoint(param, Vec3::Unit(j), mu);
  return k;
}

struct IsotropyInfo
{
  std::vector<AlgebraElement> basis;
  Vec3 singular_values;
  int dimension() const { return int(basis.size()); }
};

/// Orthonormal basis of {xi : ad*_xi mu = 0} from the SVD of the coadjoint
/// matrix. rank_tol is relative to the largest singular value.
inline IsotropyInfo isotropy_algebra(const CurvatureParam& param, const MomentumValue& mu, double rank_tol = 1e-10)
{
  if (mu.norm() < 1e-14)
    throw ZeroMomentumError("isotropy undefined for mu = 0");
  const Mat3 k = coadjoint_matrix(param, mu);
  Eigen::JacobiSVD<Mat3> svd(k, Eigen::ComputeFullV);
  IsotropyInfo info;
  info.singular_values = svd.singularValues();
  const double smax = info.singular_values(0);
  const double tol = rank_tol * (smax > 0.0 ? smax : 1.0);
  for (int i = 0; i < 3; ++i)
  {
    const double sv = info.singular_values(i);
    if (sv > tol / 10.0 && sv < tol * 10.0)
      throw RankAmbiguityError("singular value " + std::to_string(sv) + " within a factor 10 of threshold " +
                               std::to_string(tol));
    if (sv <= tol)
      info.basis.push_back(svd.matrixV().col(i));
  }
  return info;
}

/// One-dimensional isotropy direction that varies smoothly along a branch.
/// For eps > 0 or (mu1, mu2) != 0 this is the full isotropy algebra,
/// spanned by (mu1, mu2, sigma eps^2 L). At eps = 0 with pure angular
/// momentum the coadjoint matrix vanishes identically; there the direction
/// is taken as the limit b3 of the curved isotropy lines.
inline AlgebraElement branch_isotropy(const CurvatureParam& param, const MomentumValue& mu)
{
  if (mu.norm() < 1e-14)
    throw ZeroMomentumError("isotropy undefined for mu = 0");
  const Vec3 v(mu(0), mu(1), param.sigma * param.epsilon * param.epsilon * mu(2));
  if (v.norm() <= 1e-13 * mu.norm())
    return basis_b3();
  return v.normalized();
}

/// Rotation angle of exp(a b1) exp(b b2) exp(-a b1) exp(-b b2) read off the
/// upper-left 2x2 block.
inline double commutator_holonomy(const CurvatureParam& param, double a, double b)
{
  require_curved(param, "commutator_holonomy");
  const GroupElement g1 = exp_group(param, basis_b1(), a);
  const GroupElement g2 = exp_group(param, basis_b2(), b);
  const GroupElement g3 = exp_group(param, basis_b1(), -a);
  const GroupElement g4 = exp_group(param, basis_b2(), -b);
  const Mat3 c = g1.mat * g2.mat * g3.mat * g4.mat;
  return std::atan2(c(1, 0) - c(0, 1), c(0, 0) + c(1, 1));
}

/// Residual of the group conditions: orthogonality (or Lorentz) and det = 1.
inline double group_membership_error(const CurvatureParam& param, const GroupElement& g)
{
  if (g.flat)
    return 0.0;
  const Mat3 gs = param.ambient_form();
  double err = (g.mat.transpose() * gs * g.mat - gs).cwiseAbs().maxCoeff();
  err = std::max(err, std::abs(g.mat.determinant() - 1.0));
  if (param.sigma < 0 && g.mat(2, 2) <= 0.0)
    err = std::max(err, 1.0);
  return err;
}

} // namespace curvcont

#endif
