#ifndef CURVCONT_VERIFY_HPP
#define CURVCONT_VERIFY_HPP

// Seeded invariant suites behind `curvcont verify`. Each check reports a
// measured value and the interval it must fall in.

#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "continuation.hpp"
#include "scenarios.hpp"

namespace curvcont
{

struct CheckRow
{
  std::string suite;
  std::string name;
  double value = 0.0;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool pass() const { return std::isfinite(value) && value >= lo && value <= hi; }
};

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
  {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace detail
{

struct Sampler
{
  std::mt19937_64 rng;
  explicit Sampler(std::uint64_t seed) : rng(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  Vec2 disc(double r = 1.0)
  {
    const double a = std::sqrt(uniform(0, 1)) * r, t = uniform(0, 2 * std::numbers::pi);
    return {a * std::cos(t), a * std::sin(t)};
  }
  CurvatureParam param() { return {uniform(0, 1) < 0.5 ? 1 : -1, uniform(0.01, 1.0)}; }
  Vec2 chart_point(const CurvatureParam& p, double rmax = 3.0)
  {
    if (p.sigma > 0 && p.epsilon > 0)
      rmax = std::min(rmax, 0.9 * std::numbers::pi / p.epsilon);
    return disc(rmax);
  }
  ChartState state(int n, double min_sep = 0.2)
  {
    for (;;)
    {
      ChartState s(n);
      for (int i = 0; i < n; ++i)
      {
        s.set_q(i, disc());
        s.set_p(i, disc());
      }
      if (min_pair_distance(s) > min_sep)
        return s;
    }
  }
};

inline const std::vector<double>& slope_grid()
{
  static const std::vector<double> g{0.1, 0.05, 0.025, 0.0125};
  return g;
}

} // namespace detail

inline std::vector<CheckRow> verify_geometry(std::uint64_t seed)
{
  detail::Sampler smp(seed);
  std::vector<CheckRow> rows;
  double roundtrip = 0, constraint = 0, pullback = 0, radial = 0;
  for (int k = 0; k < 100; ++k)
  {
    const CurvatureParam p = smp.param();
    const Vec2 w = smp.chart_point(p);
    const Vec3 q = exp_chart(p, w);
    roundtrip = std::max(roundtrip, (log_chart(p, q) - w).norm() / std::max(1.0, w.norm()));
    const double target = p.sigma / (p.epsilon * p.epsilon);
    constraint = std::max(constraint, std::abs(sigma_dot(p.sigma, q, q) - target) / std::abs(target));
    const Mat32 j = chart_jacobian(p, w);
    pullback = std::max(pullback, (Mat2(j.transpose() * p.ambient_form() * j) - metric_at(p, w).g).cwiseAbs().maxCoeff());
    const Vec2 d = smp.disc().normalized();
    const double r1 = smp.uniform(0, 1.5), r2 = smp.uniform(0, 1.5);
    if (std::abs(r1 - r2) > 1e-3)
      radial = std::max(radial, std::abs(geodesic_angle(p, r1 * d, r2 * d) - p.epsilon * std::abs(r1 - r2)));
  }
  rows.push_back({"geometry", "log(exp(w)) - w", roundtrip, 0, 1e-10});
  rows.push_back({"geometry", "ambient constraint (relative)", constraint, 0, 1e-11});
  rows.push_back({"geometry", "metric = jacobian Gram", pullback, 0, 1e-12});
  rows.push_back({"geometry", "radial isometry", radial, 0, 1e-12});

  std::vector<Vec2> ws;
  std::vector<std::pair<Vec2, Vec2>> pairs;
  for (int k = 0; k < 10; ++k)
  {
    ws.push_back(smp.disc());
    pairs.emplace_back(smp.disc(), smp.disc());
  }
  for (int s : {1, -1})
  {
    std::vector<double> e_cometric, e_cos;
    for (double e : detail::slope_grid())
    {
      double a = 0, b = 0;
      for (const Vec2& w : ws)
      {
        const double rho = w.norm();
        const Mat2 proj = rho > 0 ? Mat2(w * w.transpose() / (rho * rho)) : Mat2::Zero();
        const Mat2 model = Mat2::Identity() + s * e * e * rho * rho / 3.0 * (Mat2::Identity() - proj);
        a = std::max(a, (metric_at({s, e}, w).g_inv - model).norm());
      }
      for (auto& [u, v] : pairs)
      {
        const double r = (u - v).norm();
        const double area = u.squaredNorm() * v.squaredNorm() - std::pow(u.dot(v), 2);
        const double model = s * e * e * r * r / 2 - std::pow(e, 4) * (std::pow(r, 4) + 4 * area) / 24;
        b = std::max(b, std::abs(one_minus_cos_angle({s, e}, u, v) - model));
      }
      e_cometric.push_back(a);
      e_cos.push_back(b);
    }
    const std::string tag = s > 0 ? " (sigma=+1)" : " (sigma=-1)";
    rows.push_back({"geometry", "cometric residual slope" + tag, loglog_slope(detail::slope_grid(), e_cometric), 3.7, 4.3});
    rows.push_back({"geometry", "cosine residual slope" + tag, loglog_slope(detail::slope_grid(), e_cos), 5.7, 6.3});
  }
  return rows;
}

inline std::vector<CheckRow> verify_symmetry(std::uint64_t seed)
{
  detail::Sampler smp(seed);
  std::vector<CheckRow> rows;
  double jacobi = 0, b12 = 0;
  for (int s : {1, -1})
    for (double e : {0.0, 0.3, 1.0})
    {
      const CurvatureParam p = param_at(s, e);
      b12 = std::max(b12, std::abs(bracket(p, basis_b1(), basis_b2())(2) - s * e * e));
      for (int k = 0; k < 1000; ++k)
      {
        const AlgebraElement x(smp.uniform(-1, 1), smp.uniform(-1, 1), smp.uniform(-1, 1));
        const AlgebraElement y(smp.uniform(-1, 1), smp.uniform(-1, 1), smp.uniform(-1, 1));
        const AlgebraElement z(smp.uniform(-1, 1), smp.uniform(-1, 1), smp.uniform(-1, 1));
        const AlgebraElement j = bracket(p, x, bracket(p, y, z)) + bracket(p, y, bracket(p, z, x)) +
                                 bracket(p, z, bracket(p, x, y));
        jacobi = std::max(jacobi, j.cwiseAbs().maxCoeff());
      }
    }
  rows.push_back({"symmetry", "Jacobi identity residual", jacobi, 0, 1e-14});
  rows.push_back({"symmetry", "[b1,b2] third component - sigma eps^2", b12, 0, 1e-15});

  double member = 0, equivariance = 0, iso = 0;
  for (int k = 0; k < 50; ++k)
  {
    const CurvatureParam p = smp.param();
    AlgebraElement xi(smp.uniform(-1, 1), smp.uniform(-1, 1), smp.uniform(-1, 1));
    xi *= smp.uniform(0, 10) / xi.norm();
    const GroupElement g = exp_group(p, xi);
    // Lorentz boosts grow like exp(|xi|); compare against |g|^2
    member = std::max(member, group_membership_error(p, g) / std::max(1.0, g.mat.squaredNorm()));

    const double gamma = smp.uniform(-3, 3);
    ChartState s(3);
    for (int i = 0; i < 3; ++i)
    {
      s.set_q(i, smp.chart_point(p, 1.5));
      s.set_p(i, smp.disc());
    }
    const MomentumValue mu = momentum_nbody(p, s);
    const MomentumValue mr = momentum_nbody(p, act_state(p, exp_group(p, basis_b3(), gamma), s));
    Vec3 expect;
    expect.head<2>() = rotation2(gamma) * mu.head<2>();
    expect(2) = mu(2);
    equivariance = std::max(equivariance, (mr - expect).norm());

    const MomentumValue m(smp.uniform(-1, 1), smp.uniform(-1, 1), smp.uniform(-1, 1));
    for (const auto& x : isotropy_algebra(p, m).basis)
      iso = std::max(iso, coadjoint(p, x, m).norm() / m.norm());
  }
  rows.push_back({"symmetry", "group membership (relative)", member, 0, 1e-10});
  rows.push_back({"symmetry", "momentum rotation equivariance", equivariance, 0, 1e-9});
  rows.push_back({"symmetry", "isotropy annihilates mu", iso, 0, 1e-9});

  std::vector<std::pair<Vec2, Vec2>> pts;
  for (int k = 0; k < 20; ++k)
    pts.emplace_back(smp.disc(), smp.disc());
  for (int s : {1, -1})
  {
    std::vector<double> e_gen, e_mom;
    for (double e : detail::slope_grid())
    {
      double a = 0, b = 0;
      for (auto& [w, al] : pts)
      {
        a = std::max(a, (generator_chart({s, e}, basis_b1(), w) - Vec2(1, 0)).norm());
        b = std::max(b, (momentum_single({s, e}, w, al) - momentum_single({}, w, al)).norm());
      }
      e_gen.push_back(a);
      e_mom.push_back(b);
    }
    const std::string tag = s > 0 ? " (sigma=+1)" : " (sigma=-1)";
    rows.push_back({"symmetry", "b1 generator contraction slope" + tag, loglog_slope(detail::slope_grid(), e_gen), 1.8, 2.2});
    rows.push_back({"symmetry", "momentum contraction slope" + tag, loglog_slope(detail::slope_grid(), e_mom), 1.8, 2.2});
  }
  return rows;
}

inline std::vector<CheckRow> verify_hamiltonian(std::uint64_t seed)
{
  detail::Sampler smp(seed);
  std::vector<CheckRow> rows;
  const BodySystem sys({1, 1, 1});
  std::vector<ChartState> states;
  for (int k = 0; k < 20; ++k)
    states.push_back(smp.state(3));
  for (int s : {1, -1})
  {
    std::vector<double> err;
    for (double e : detail::slope_grid())
    {
      double worst = 0;
      for (const auto& z : states)
        worst = std::max(worst, std::abs(hamiltonian({s, e}, sys, z) - hamiltonian({}, sys, z) -
                                         s * e * e * h2_correction(sys, z)));
      err.push_back(worst);
    }
    rows.push_back({"hamiltonian", std::string("expansion slope (sigma=") + (s > 0 ? "+1)" : "-1)"),
                    loglog_slope(detail::slope_grid(), err), 3.7, 4.3});
  }

  const BodySystem mixed({1, 2, 3});
  double rot = 0, iso = 0, grad = 0, flat = 0;
  for (int k = 0; k < 10; ++k)
  {
    const ChartState z = smp.state(3);
    const CurvatureParam p(smp.uniform(0, 1) < 0.5 ? 1 : -1, smp.uniform(0.05, 0.4));
    for (const CurvatureParam& q : {CurvatureParam(), p})
    {
      const ChartState r = act_state(q, exp_group(q, basis_b3(), smp.uniform(-3, 3)), z);
      rot = std::max(rot, std::abs(hamiltonian(q, mixed, r) - hamiltonian(q, mixed, z)));
    }
    const AlgebraElement xi(smp.uniform(-1, 1), smp.uniform(-1, 1), 0.0);
    iso = std::max(iso, std::abs(hamiltonian(p, mixed, act_state(p, exp_group(p, xi), z)) - hamiltonian(p, mixed, z)));
    const Vec g = grad_hamiltonian(p, mixed, z);
    for (int c = 0; c < 12; ++c)
    {
      ChartState a = z, b = z;
      a.z(c) += 1e-6;
      b.z(c) -= 1e-6;
      const double fd = (hamiltonian(p, mixed, a) - hamiltonian(p, mixed, b)) / 2e-6;
      grad = std::max(grad, std::abs(fd - g(c)) / std::max(1.0, std::abs(g(c))));
    }
    // planar H0 written out directly
    double h0 = 0;
    for (int i = 0; i < 3; ++i)
    {
      h0 += z.p(i).squaredNorm() / (2 * mixed.masses[i]);
      for (int j = i + 1; j < 3; ++j)
        h0 -= mixed.masses[i] * mixed.masses[j] / (z.q(i) - z.q(j)).norm();
    }
    flat = std::max(flat, std::abs(hamiltonian({}, mixed, z) - h0));
  }
  rows.push_back({"hamiltonian", "rotation invariance", rot, 0, 1e-11});
  rows.push_back({"hamiltonian", "curved isometry invariance", iso, 0, 1e-9});
  rows.push_back({"hamiltonian", "gradient vs finite differences", grad, 0, 1e-6});
  rows.push_back({"hamiltonian", "flat limit vs planar formula", flat, 0, 1e-14});
  return rows;
}

inline std::vector<CheckRow> verify_dynamics(std::uint64_t seed)
{
  detail::Sampler smp(seed);
  std::vector<CheckRow> rows;
  const Seed pair = make_two_body({1, 1}, 1.0);
  const NewtonianModel model(pair.sys);
  const double period = 2 * std::numbers::pi / pair.omega;
  double dh = 0, dmu = 0, rev = 0;
  for (int s : {1, -1})
    for (double e : {0.0, 0.1})
    {
      const CurvatureParam p = param_at(s, e);
      const ChartState z = flow(model, p, pair.state, period, {});
      dh = std::max(dh, std::abs(hamiltonian(p, pair.sys, z) - hamiltonian(p, pair.sys, pair.state)));
      dmu = std::max(dmu, (momentum_nbody(p, z) - momentum_nbody(p, pair.state)).norm());
      ChartState a = pair.state;
      for (int k = 0; k < 200; ++k)
        a = step_implicit_midpoint(model, p, a, 1e-3, {});
      for (int k = 0; k < 200; ++k)
        a = step_implicit_midpoint(model, p, a, -1e-3, {});
      rev = std::max(rev, (a.z - pair.state.z).norm());
    }
  rows.push_back({"dynamics", "energy drift over one period", dh, 0, 1e-8});
  rows.push_back({"dynamics", "momentum drift over one period", dmu, 0, 1e-8});
  rows.push_back({"dynamics", "forward/backward reversibility", rev, 0, 1e-10});

  double pull = 0;
  for (int s : {1, -1})
  {
    std::vector<Eigen::Vector4d> samples;
    const CurvatureParam p(s, 0.2);
    for (int k = 0; k < 20; ++k)
    {
      const Vec2 w = smp.chart_point(p), a = smp.disc(2.0);
      samples.emplace_back(w(0), w(1), a(0), a(1));
    }
    pull = std::max(pull, symplectic_pullback_check(p, samples));
  }
  rows.push_back({"dynamics", "symplectic pullback", pull, 0, 1e-7});

  const Mat mono = flow_jacobian(model, {}, pair.state, period, {});
  int near_one = 0;
  for (auto m : eigenvalues(mono))
    if (std::abs(std::abs(m) - 1.0) < 1e-4)
      ++near_one;
  rows.push_back({"dynamics", "monodromy multipliers of modulus 1", double(near_one), 2, 8});

  const PoincareSection sec = make_section(model, {}, pair.state);
  const RPOPoint po = solve_po({}, pair.sys, sec, pair.state, period);
  const ReturnResult back = poincare_return(model, sec, po.state, {}, {}, period);
  rows.push_back({"dynamics", "return map residual at periodic point", (back.state.z - po.state.z).norm(), 0, 1e-8});
  return rows;
}

inline std::vector<CheckRow> run_suite(const std::string& suite, std::uint64_t seed)
{
  if (suite == "geometry")
    return verify_geometry(seed);
  if (suite == "symmetry")
    return verify_symmetry(seed);
  if (suite == "hamiltonian")
    return verify_hamiltonian(seed);
  if (suite == "dynamics")
    return verify_dynamics(seed);
  if (suite == "all")
  {
    std::vector<CheckRow> all;
    for (const char* s : {"geometry", "symmetry", "hamiltonian", "dynamics"})
      for (auto& r : run_suite(s, seed))
        all.push_back(std::move(r));
    return all;
  }
  throw SchemaError("unknown suite '" + suite + "'");
}

inline std::string format_table(const std::vector<CheckRow>& rows)
{
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %-44s %12s  %-22s %s\n", "suite", "check", "value", "bounds", "result");
  out += buf;
  for (const auto& r : rows)
  {
    char bounds[64];
    if (std::isinf(r.lo) || r.lo == 0.0)
      std::snprintf(bounds, sizeof bounds, "<= %.1e", r.hi);
    else
      std::snprintf(bounds, sizeof bounds, "[%.3g, %.3g]", r.lo, r.hi);
    std::snprintf(buf, sizeof buf, "%-12s %-44s %12.4e  %-22s %s\n", r.suite.c_str(), r.name.c_str(), r.value, bounds,
                  r.pass() ? "PASS" : "FAIL");
    out += buf;
  }
  return out;
}

} // namespace curvcont

#endif
