#ifndef CURVCONT_STATE_HPP
#define CURVCONT_STATE_HPP

// n-body phase points in the exponential chart, laid out canonically as
// z = (q_1, ..., q_n, p_1, ..., p_n) with q_i, p_i in R^2, and the diagonal
// (cotangent-lifted) group action on them.

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "symmetry.hpp"

namespace curvcont
{

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct BodySystem
{
  std::vector<double> masses;

  BodySystem() = default;
  explicit BodySystem(std::vector<double> m) : masses(std::move(m))
  {
    if (masses.size() < 2)
      throw SchemaError("masses: need at least two bodies");
    for (std::size_t i = 0; i < masses.size(); ++i)
      if (!(masses[i] > 0.0) || !std::isfinite(masses[i]))
        throw SchemaError("masses[" + std::to_string(i) + "] must be positive");
  }

  int n() const { return int(masses.size()); }
  double total_mass() const
  {
    double s = 0.0;
    for (double m : masses)
      s += m;
    return s;
  }
};

struct ChartState
{
  Vec z;

  ChartState() = default;
  explicit ChartState(int n) : z(Vec::Zero(4 * n)) {}
  explicit ChartState(Vec v) : z(std::move(v))
  {
    if (z.size() % 4 != 0)
      throw SchemaError("state length must be a multiple of 4");
  }

  int n() const { return int(z.size() / 4); }
  Vec2 q(int i) const { return z.segment<2>(2 * i); }
  Vec2 p(int i) const { return z.segment<2>(2 * n() + 2 * i); }
  void set_q(int i, const Vec2& v) { z.segment<2>(2 * i) = v; }
  void set_p(int i, const Vec2& v) { z.segment<2>(2 * n() + 2 * i) = v; }
  auto positions() const { return z.head(2 * n()); }
  auto momenta() const { return z.tail(2 * n()); }
};

inline constexpr double default_collision_tol = 1e-8;

inline double min_pair_distance(const ChartState& s)
{
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < s.n(); ++i)
    for (int j = i + 1; j < s.n(); ++j)
      d = std::min(d, (s.q(i) - s.q(j)).norm());
  return d;
}

inline void check_state(const CurvatureParam& param, const ChartState& s,
                        double collision_tol = default_collision_tol)
{
  if (!s.z.allFinite())
    throw ChartDomainError("non-finite phase point");
  for (int i = 0; i < s.n(); ++i)
    check_chart(param, s.q(i));
  if (min_pair_distance(s) <= collision_tol)
    throw CollisionError("bodies closer than " + std::to_string(collision_tol));
}

/// Canonical symplectic matrix [[0, I], [-I, 0]] of size 4n.
inline Mat canonical_omega(int n)
{
  Mat om = Mat::Zero(4 * n, 4 * n);
  om.topRightCorner(2 * n, 2 * n) = Mat::Identity(2 * n, 2 * n);
  om.bottomLeftCorner(2 * n, 2 * n) = -Mat::Identity(2 * n, 2 * n);
  return om;
}

inline MomentumValue momentum_nbody(const CurvatureParam& param, const ChartState& s)
{
  MomentumValue mu = MomentumValue::Zero();
  for (int i = 0; i < s.n(); ++i)
    mu += momentum_single(param, s.q(i), s.p(i));
  return mu;
}

/// 3 x 4n derivative of the momentum map, analytic.
inline Mat momentum_jacobian(const CurvatureParam& param, const ChartState& s)
{
  // <J(z), xi> = sum_i alpha_i . xi_chart(w_i): differentiate along each basis xi.
  const int n = s.n();
  Mat d(3, 4 * n);
  for (int k = 0; k < 3; ++k)
  {
    const AlgebraElement xi = Vec3::Unit(k);
    for (int i = 0; i < n; ++i)
    {
      const Vec2 w = s.q(i), a = s.p(i);
      d.block<1, 2>(k, 2 * i) = (generator_chart_jacobian(param, xi, w).transpose() * a).transpose();
      d.block<1, 2>(k, 2 * n + 2 * i) = generator_chart(param, xi, w).transpose();
    }
  }
  return d;
}

/// Lifted generator field xi_M on the full phase space.
inline Vec generator_phase(const CurvatureParam& param, const AlgebraElement& xi, const ChartState& s)
{
  const int n = s.n();
  Vec out(4 * n);
  for (int i = 0; i < n; ++i)
  {
    const auto [dq, dp] = generator_cotangent(param, xi, s.q(i), s.p(i));
    out.segment<2>(2 * i) = dq;
    out.segment<2>(2 * n + 2 * i) = dp;
  }
  return out;
}

/// Diagonal cotangent-lifted action g * z.
inline ChartState act_state(const CurvatureParam& param, const GroupElement& g, const ChartState& s)
{
  ChartState out(s.n());
  for (int i = 0; i < s.n(); ++i)
  {
    const auto [w, a] = act_cotangent(param, g, s.q(i), s.p(i));
    out.set_q(i, w);
    out.set_p(i, a);
  }
  return out;
}

/// Distance between two states modulo a rotation about the chart origin:
/// min over gamma of |R_gamma z1 - z2|, gamma from the 2D Procrustes formula.
inline double orbit_distance(const ChartState& a, const ChartState& b)
{
  double dot = 0.0, cross = 0.0;
  const int m = int(a.z.size() / 2);
  for (int k = 0; k < m; ++k)
  {
    const Vec2 x = a.z.segment<2>(2 * k), y = b.z.segment<2>(2 * k);
    dot += x.dot(y);
    cross += x(0) * y(1) - x(1) * y(0);
  }
  const Mat2 r = rotation2(std::atan2(cross, dot));
  double d2 = 0.0;
  for (int k = 0; k < m; ++k)
    d2 += (r * a.z.segment<2>(2 * k) - b.z.segment<2>(2 * k)).squaredNorm();
  return std::sqrt(d2);
}

} // namespace curvcont

#endif
