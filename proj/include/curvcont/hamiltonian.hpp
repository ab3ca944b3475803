#ifndef CURVCONT_HAMILTONIAN_HPP
#define CURVCONT_HAMILTONIAN_HPP

// Curved Newtonian n-body Hamiltonian in exponential coordinates, its flat
// limit, the first curvature correction H2 and the analytic gradient.

#include <concepts>
#include <numbers>

#include "state.hpp"

namespace curvcont
{

/// Anything the integrators and solvers can drive: an energy and its
/// gradient dH/dz in the canonical layout.
template <class M>
concept HamiltonianModel = requires(const M& m, const CurvatureParam& c, const ChartState& s) {
  { m.energy(c, s) } -> std::convertible_to<double>;
  { m.gradient(c, s) } -> std::convertible_to<Vec>;
  { m.bodies() } -> std::convertible_to<int>;
};

inline constexpr double default_psi_min = 1e-8;

inline double kinetic(const CurvatureParam& param, const BodySystem& sys, const ChartState& s)
{
  double k = 0.0;
  for (int i = 0; i < s.n(); ++i)
  {
    check_chart(param, s.q(i));
    const Vec2 q = s.q(i), p = s.p(i);
    double e = p.squaredNorm();
    if (!param.flat())
    {
      const double l = q(0) * p(1) - q(1) * p(0);
      e += radial_profile(param, q.norm()).beta * l * l;
    }
    k += e / (2.0 * sys.masses[i]);
  }
  return k;
}

namespace detail
{

inline double pair_angle(const CurvatureParam& param, const Vec2& a, const Vec2& b, double psi_min)
{
  double psi;
  try
  {
    psi = geodesic_angle(param, a, b);
  }
  catch (const CoincidentError& e)
  {
    throw CollisionError(e.what());
  }
  if (psi < psi_min)
    throw CollisionError("pair angle " + std::to_string(psi) + " below " + std::to_string(psi_min));
  if (param.sigma > 0 && psi > std::numbers::pi - psi_min)
    throw AntipodalError("pair angle " + std::to_string(psi) + " near pi");
  return psi;
}

} // namespace detail

inline double potential(const CurvatureParam& param, const BodySystem& sys, const ChartState& s,
                        double psi_min = default_psi_min)
{
  double u = 0.0;
  const auto& m = sys.masses;
  for (int i = 0; i < s.n(); ++i)
    for (int j = i + 1; j < s.n(); ++j)
    {
      if (param.flat())
      {
        const double r = (s.q(i) - s.q(j)).norm();
        if (r < psi_min)
          throw CollisionError("pair distance " + std::to_string(r));
        u -= m[i] * m[j] / r;
      }
      else
      {
        const double psi = detail::pair_angle(param, s.q(i), s.q(j), psi_min);
        const auto [c, sn] = curv_trig(param, psi);
        u -= m[i] * m[j] * param.epsilon * c / sn;
      }
    }
  return u;
}

inline double hamiltonian(const CurvatureParam& param, const BodySystem& sys, const ChartState& s)
{
  return kinetic(param, sys, s) + potential(param, sys, s);
}

/// First curvature correction: H = H0 + sigma eps^2 H2 + O(eps^4).
inline double h2_correction(const BodySystem& sys, const ChartState& s)
{
  double h = 0.0;
  const auto& m = sys.masses;
  for (int i = 0; i < s.n(); ++i)
  {
    const Vec2 q = s.q(i), p = s.p(i);
    h += (q.squaredNorm() * p.squaredNorm() - std::pow(q.dot(p), 2)) / (6.0 * m[i]);
  }
  for (int i = 0; i < s.n(); ++i)
    for (int j = i + 1; j < s.n(); ++j)
    {
      const Vec2 a = s.q(i), b = s.q(j);
      const double r = (a - b).norm();
      if (r < default_collision_tol)
        throw CollisionError("pair distance " + std::to_string(r));
      const double A = a.squaredNorm() * b.squaredNorm() - std::pow(a.dot(b), 2);
      h += m[i] * m[j] * (r / 3.0 - A / (6.0 * r * r * r));
    }
  return h;
}

/// dH/dz in the canonical layout (dH/dq_1, ..., dH/dq_n, dH/dp_1, ...).
inline Vec grad_hamiltonian(const CurvatureParam& param, const BodySystem& sys, const ChartState& s,
                            bool with_potential = true)
{
  const int n = s.n();
  const auto& m = sys.masses;
  Vec g = Vec::Zero(4 * n);
  for (int i = 0; i < n; ++i)
  {
    check_chart(param, s.q(i));
    const Vec2 q = s.q(i), p = s.p(i);
    Vec2 dq = Vec2::Zero(), dp = p;
    if (!param.flat())
    {
      const RadialProfile r = radial_profile(param, q.norm());
      const double l = q(0) * p(1) - q(1) * p(0);
      dp += r.beta * l * Vec2(-q(1), q(0));
      dq = 0.5 * r.dbeta * l * l * q + r.beta * l * Vec2(p(1), -p(0));
    }
    g.segment<2>(2 * i) += dq / m[i];
    g.segment<2>(2 * n + 2 * i) = dp / m[i];
  }
  if (!with_potential)
    return g;

  const Mat3 gs = param.ambient_form();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
    {
      const Vec2 a = s.q(i), b = s.q(j);
      if (param.flat())
      {
        const Vec2 d = a - b;
        const double r = d.norm();
        if (r < default_psi_min)
          throw CollisionError("pair distance " + std::to_string(r));
        const Vec2 f = m[i] * m[j] * d / (r * r * r);
        g.segment<2>(2 * i) += f;
        g.segment<2>(2 * j) -= f;
        continue;
      }
      const double psi = detail::pair_angle(param, a, b, default_psi_min);
      const Vec3 delta = ambient_difference(param, a, b);
      const double chord = std::sqrt(std::max(0.0, sigma_dot(param.sigma, delta, delta)));
      const double sn = curv_trig(param, psi).second;
      const double chalf = curv_trig(param, 0.5 * psi).first;
      // dU/dpsi * dpsi/dchord / chord
      const double coef = m[i] * m[j] * param.epsilon / (sn * sn) * param.epsilon / chalf / chord;
      const Vec3 v = gs * delta;
      g.segment<2>(2 * i) += coef * (chart_jacobian(param, a).transpose() * v);
      g.segment<2>(2 * j) -= coef * (chart_jacobian(param, b).transpose() * v);
    }
  return g;
}

/// Hamiltonian vector field (dH/dp, -dH/dq).
inline Vec symplectic_gradient(const Vec& grad)
{
  const Eigen::Index h = grad.size() / 2;
  Vec x(grad.size());
  x.head(h) = grad.tail(h);
  x.tail(h) = -grad.head(h);
  return x;
}

/// The shipped Newtonian instance of HamiltonianModel.
struct NewtonianModel
{
  BodySystem sys;
  bool with_potential = true; ///< false leaves the free (kinetic-only) flow

  NewtonianModel() = default;
  explicit NewtonianModel(BodySystem s, bool pot = true) : sys(std::move(s)), with_potential(pot) {}

  int bodies() const { return sys.n(); }
  double energy(const CurvatureParam& c, const ChartState& s) const
  {
    return with_potential ? hamiltonian(c, sys, s) : kinetic(c, sys, s);
  }
  Vec gradient(const CurvatureParam& c, const ChartState& s) const
  {
    return grad_hamiltonian(c, sys, s, with_potential);
  }
};

static_assert(HamiltonianModel<NewtonianModel>);

template <HamiltonianModel Model>
Vec vector_field(const Model& model, const CurvatureParam& param, const ChartState& s)
{
  return symplectic_gradient(model.gradient(param, s));
}

inline Vec vector_field(const CurvatureParam& param, const BodySystem& sys, const ChartState& s)
{
  return vector_field(NewtonianModel(sys), param, s);
}

} // namespace curvcont

#endif
