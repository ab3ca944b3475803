#ifndef CURVCONT_DYNAMICS_HPP
#define CURVCONT_DYNAMICS_HPP

// Implicit midpoint flow of the chart Hamiltonian, finite-difference flow
// Jacobians, Poincare sections and the symplectic pullback check.

#include <cmath>
#include <complex>
#include <functional>
#include <utility>

#include <Eigen/Eigenvalues>

#include "hamiltonian.hpp"

namespace curvcont
{

struct IntegratorConfig
{
  double step = 1e-3;
  double newton_tol = 1e-12;
  int newton_max_iter = 50;

  void validate() const
  {
    if (!(step > 0.0))
      throw SchemaError("integrator step must be positive");
    if (!(newton_tol > 0.0))
      throw SchemaError("integrator tolerance must be positive");
  }
};

/// One implicit midpoint step z' = z + h X((z + z')/2). The stage equation
/// k = X(z + h k/2) is a contraction for small h and is iterated to
/// newton_tol, followed by one more sweep so that the step map is smooth in z
/// to well below the finite-difference noise floor.
template <HamiltonianModel Model>
ChartState step_implicit_midpoint(const Model& model, const CurvatureParam& param, const ChartState& s, double h,
                                  const IntegratorConfig& cfg)
{
  ChartState mid = s;
  Vec k = vector_field(model, param, s);
  const double scale = 1.0 + s.z.lpNorm<Eigen::Infinity>();
  bool converged = false;
  for (int it = 0; it < cfg.newton_max_iter; ++it)
  {
    mid.z = s.z + 0.5 * h * k;
    Vec k_new = vector_field(model, param, mid);
    const double change = std::abs(h) * (k_new - k).lpNorm<Eigen::Infinity>();
    k = std::move(k_new);
    if (converged)
      break;
    if (change <= cfg.newton_tol * scale)
      converged = true;
  }
  if (!converged)
    throw NewtonDivergenceError("implicit midpoint stage did not converge in " +
                                std::to_string(cfg.newton_max_iter) + " iterations");
  ChartState out = s;
  out.z += h * k;
  return out;
}

using StepObserver = std::function<void(double, const ChartState&)>;

/// Time-t flow: whole steps of cfg.step then a final fractional step.
template <HamiltonianModel Model>
ChartState flow(const Model& model, const CurvatureParam& param, const ChartState& s, double t_final,
                const IntegratorConfig& cfg, const StepObserver& observe = {})
{
  cfg.validate();
  const double h = cfg.step;
  const double dir = t_final < 0 ? -1.0 : 1.0;
  const double span = std::abs(t_final);
  const long whole = long(std::floor(span / h));
  const double rest = span - double(whole) * h;
  ChartState z = s;
  if (observe)
    observe(0.0, z);
  for (long k = 0; k < whole; ++k)
  {
    z = step_implicit_midpoint(model, param, z, dir * h, cfg);
    if (observe)
      observe(dir * double(k + 1) * h, z);
  }
  if (rest > 1e-15 * std::max(1.0, span))
  {
    z = step_implicit_midpoint(model, param, z, dir * rest, cfg);
    if (observe)
      observe(t_final, z);
  }
  return z;
}

inline ChartState flow(const CurvatureParam& param, const BodySystem& sys, const ChartState& s, double t_final,
                       const IntegratorConfig& cfg)
{
  return flow(NewtonianModel(sys), param, s, t_final, cfg);
}

/// Jacobian of the time-t flow map by central differences, one column per
/// phase coordinate.
template <HamiltonianModel Model>
Mat flow_jacobian(const Model& model, const CurvatureParam& param, const ChartState& s, double t_final,
                  const IntegratorConfig& cfg, double fd_step = 1e-6)
{
  const Eigen::Index d = s.z.size();
  Mat jac(d, d);
  for (Eigen::Index c = 0; c < d; ++c)
  {
    ChartState a = s, b = s;
    a.z(c) += fd_step;
    b.z(c) -= fd_step;
    jac.col(c) = (flow(model, param, a, t_final, cfg).z - flow(model, param, b, t_final, cfg).z) / (2.0 * fd_step);
  }
  return jac;
}

/// Max entry of J^T Omega J - Omega.
inline double symplecticity_error(const Mat& jac)
{
  const Mat om = canonical_omega(int(jac.rows() / 4));
  return (jac.transpose() * om * jac - om).cwiseAbs().maxCoeff();
}

inline std::vector<std::complex<double>> eigenvalues(const Mat& m)
{
  Eigen::EigenSolver<Mat> es(m, false);
  std::vector<std::complex<double>> out(es.eigenvalues().data(), es.eigenvalues().data() + m.rows());
  return out;
}

struct PoincareSection
{
  ChartState base;
  Vec normal;
  double energy = 0.0;

  double value(const ChartState& s) const { return normal.dot(s.z - base.z); }
};

/// Section through base with normal along the flow direction.
template <HamiltonianModel Model>
PoincareSection make_section(const Model& model, const CurvatureParam& param, const ChartState& base)
{
  const Vec x = vector_field(model, param, base);
  const double nx = x.norm();
  if (nx < 1e-10)
    throw TangencyError("vector field vanishes at the section base");
  return {base, x / nx, model.energy(param, base)};
}

struct ReturnResult
{
  ChartState state;
  double time = 0.0;
};

/// First return to the section with positive orientation after half the
/// period hint. Crossings are detected on the step grid and refined by secant
/// iteration on the length of the last (re-integrated) step.
template <HamiltonianModel Model>
ReturnResult poincare_return(const Model& model, const PoincareSection& sec, const ChartState& s,
                             const CurvatureParam& param, const IntegratorConfig& cfg, double period_hint)
{
  cfg.validate();
  const double h = cfg.step;
  const double t_max = 10.0 * period_hint;
  ChartState z = s;
  double f = sec.value(z);
  double t = 0.0;
  const double t_min = 0.5 * period_hint;
  for (;;)
  {
    if (t > t_max)
      throw NoReturnError("no return to section within t = " + std::to_string(t_max));
    ChartState zn = step_implicit_midpoint(model, param, z, h, cfg);
    const double fn = sec.value(zn);
    if (t + h >= t_min && f < 0.0 && fn >= 0.0)
    {
      // secant (Illinois) on tau in (0, h]
      double a = 0.0, fa = f, b = h, fb = fn;
      ChartState zb = zn;
      int side = 0;
      for (int it = 0; it < 60 && std::abs(fb) > 1e-15; ++it)
      {
        const double c = b - fb * (b - a) / (fb - fa);
        ChartState zc = step_implicit_midpoint(model, param, z, c, cfg);
        const double fc = sec.value(zc);
        if ((fc < 0.0) == (fa < 0.0))
        {
          a = c;
          fa = fc;
          if (side == -1)
            fb *= 0.5;
          side = -1;
        }
        else
        {
          b = c;
          fb = fc;
          zb = zc;
          if (side == 1)
            fa *= 0.5;
          side = 1;
        }
        if (std::abs(b - a) < 1e-15)
          break;
        if (std::abs(fc) <= 1e-15)
        {
          b = c;
          zb = zc;
          break;
        }
      }
      const double vn = sec.normal.dot(vector_field(model, param, zb));
      if (std::abs(vn) < 1e-8)
        throw TangencyError("flow tangent to section at the crossing");
      return {zb, t + b};
    }
    z = std::move(zn);
    f = fn;
    t += h;
  }
}

namespace detail
{

// (w, alpha) -> (Exp(w), Gs J G^-1 alpha): the ambient covector whose
// Euclidean pairing with dq reproduces alpha.dw.
inline Eigen::Matrix<double, 6, 1> ambient_cotangent_map(const CurvatureParam& param, const Eigen::Vector4d& x)
{
  Eigen::Matrix<double, 6, 1> out;
  const Vec2 w = x.head<2>(), a = x.tail<2>();
  if (param.flat())
  {
    out << w(0), w(1), 0.0, a(0), a(1), 0.0;
    return out;
  }
  out.head<3>() = exp_chart(param, w);
  out.tail<3>() = param.ambient_form() * (chart_jacobian(param, w) * (metric_at(param, w).g_inv * a));
  return out;
}

} // namespace detail

/// Max over samples of |D Phi^T Omega_6 D Phi - Omega_4| for the cotangent
/// chart map Phi into T*R^3; samples are (w, alpha) quadruples.
inline double symplectic_pullback_check(const CurvatureParam& param, const std::vector<Eigen::Vector4d>& samples,
                                        double fd_step = 1e-5)
{
  Eigen::Matrix<double, 6, 6> om6 = Eigen::Matrix<double, 6, 6>::Zero();
  om6.topRightCorner<3, 3>().setIdentity();
  om6.bottomLeftCorner<3, 3>() = -Mat3::Identity();
  Eigen::Matrix4d om4 = Eigen::Matrix4d::Zero();
  om4.topRightCorner<2, 2>().setIdentity();
  om4.bottomLeftCorner<2, 2>() = -Mat2::Identity();
  double worst = 0.0;
  for (const auto& x : samples)
  {
    check_chart(param, x.head<2>());
    Eigen::Matrix<double, 6, 4> d;
    for (int c = 0; c < 4; ++c)
    {
      const Eigen::Vector4d e = fd_step * Eigen::Vector4d::Unit(c);
      d.col(c) = (detail::ambient_cotangent_map(param, x + e) - detail::ambient_cotangent_map(param, x - e)) /
                 (2.0 * fd_step);
    }
    worst = std::max(worst, (d.transpose() * om6 * d - om4).cwiseAbs().maxCoeff());
  }
  return worst;
}

} // namespace curvcont

#endif
