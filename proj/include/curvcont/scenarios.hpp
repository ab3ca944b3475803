#ifndef CURVCONT_SCENARIOS_HPP
#define CURVCONT_SCENARIOS_HPP

// Seed configurations at eps = 0 (Lagrange, Euler, regular n-gon, two-body,
// figure-eight) and the JSON scenario format.

#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynamics.hpp"

namespace curvcont
{

/// A flat seed: rigidly rotating configuration with generator omega * b3,
/// possibly with a superposed uniform drift of the centre of mass.
struct Seed
{
  BodySystem sys;
  ChartState state;
  AlgebraElement xi = AlgebraElement::Zero();
  double omega = 0.0;
};

namespace detail
{

inline void require_positive(double v, const std::string& field)
{
  if (!(v > 0.0) || !std::isfinite(v))
    throw SchemaError(field + " must be positive");
}

// centre the positions and give body i the momentum m_i (omega J q_i + v)
inline Seed rigid_seed(std::vector<double> masses, const std::vector<Vec2>& pos, double omega, const Vec2& drift)
{
  Seed out;
  out.sys = BodySystem(std::move(masses));
  const int n = out.sys.n();
  Vec2 com = Vec2::Zero();
  for (int i = 0; i < n; ++i)
    com += out.sys.masses[i] * pos[i];
  com /= out.sys.total_mass();
  out.state = ChartState(n);
  for (int i = 0; i < n; ++i)
  {
    const Vec2 q = pos[i] - com;
    const double m = out.sys.masses[i];
    out.state.set_q(i, q);
    out.state.set_p(i, m * (omega * Vec2(-q(1), q(0)) + drift));
  }
  out.omega = omega;
  out.xi = omega * basis_b3();
  return out;
}

// planar Newtonian acceleration along the line for collinear bodies
inline double collinear_accel(const std::vector<double>& m, const std::vector<double>& x, int i)
{
  double a = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (int(j) != i)
    {
      const double d = x[j] - x[i];
      a += m[j] * (d > 0 ? 1.0 : -1.0) / (d * d);
    }
  return a;
}

} // namespace detail

/// Equilateral triangle of side `side`, omega^2 = M / side^3.
inline Seed make_lagrange(const std::vector<double>& masses, double side, const Vec2& drift = Vec2::Zero())
{
  if (masses.size() != 3)
    throw SchemaError("masses: lagrange needs three bodies");
  detail::require_positive(side, "side");
  const double h = side * std::sqrt(3.0) / 2.0;
  const std::vector<Vec2> pos{{0.0, 2.0 * h / 3.0}, {-side / 2.0, -h / 3.0}, {side / 2.0, -h / 3.0}};
  const double mt = masses[0] + masses[1] + masses[2];
  return detail::rigid_seed(masses, pos, std::sqrt(mt / (side * side * side)), drift);
}

/// Balance condition for three collinear bodies at 0, 1, 1 + lambda: the
/// accelerations must be affine in position (common omega^2). Zero at the
/// Euler configuration.
inline double euler_balance(const std::vector<double>& m, double lambda)
{
  const std::vector<double> x{0.0, 1.0, 1.0 + lambda};
  const double a0 = detail::collinear_accel(m, x, 0);
  const double a1 = detail::collinear_accel(m, x, 1);
  const double a2 = detail::collinear_accel(m, x, 2);
  return (a1 - a2) / lambda - (a0 - a1);
}

/// Euler's quintic for the same ratio lambda = (x3 - x2)/(x2 - x1).
inline double euler_quintic(const std::vector<double>& m, double l)
{
  const double m1 = m[0], m2 = m[1], m3 = m[2];
  return (m1 + m2) * std::pow(l, 5) + (3 * m1 + 2 * m2) * std::pow(l, 4) + (3 * m1 + m2) * std::pow(l, 3) -
         (m2 + 3 * m3) * l * l - (2 * m2 + 3 * m3) * l - (m2 + m3);
}

inline double euler_ratio(const std::vector<double>& m)
{
  double lo = 1e-6, hi = 1e6;
  double flo = euler_balance(m, lo), fhi = euler_balance(m, hi);
  if (!(flo * fhi < 0.0))
    throw BisectionFailure("euler balance has no sign change on [1e-6, 1e6]");
  for (int it = 0; it < 200 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * hi; ++it)
  {
    const double mid = 0.5 * (lo + hi);
    const double fm = euler_balance(m, mid);
    if ((fm < 0.0) == (flo < 0.0))
    {
      lo = mid;
      flo = fm;
    }
    else
      hi = mid;
  }
  const double l = 0.5 * (lo + hi);
  if (!std::isfinite(l))
    throw BisectionFailure("euler ratio not finite");
  return l;
}

/// Collinear configuration with the first two bodies `spacing` apart.
inline Seed make_euler(const std::vector<double>& masses, double spacing, const Vec2& drift = Vec2::Zero())
{
  if (masses.size() != 3)
    throw SchemaError("masses: euler needs three bodies");
  for (std::size_t i = 0; i < 3; ++i)
    detail::require_positive(masses[i], "masses[" + std::to_string(i) + "]");
  detail::require_positive(spacing, "spacing");
  const double l = euler_ratio(masses);
  const std::vector<double> x{0.0, spacing, spacing * (1.0 + l)};
  const double w2 = (detail::collinear_accel(masses, x, 0) - detail::collinear_accel(masses, x, 1)) / spacing;
  return detail::rigid_seed(masses, {{x[0], 0.0}, {x[1], 0.0}, {x[2], 0.0}}, std::sqrt(w2), drift);
}

/// n equal masses on a circle of radius r.
inline Seed make_ngon(int n, double mass, double radius, const Vec2& drift = Vec2::Zero())
{
  if (n < 3)
    throw SchemaError("n: regular polygon needs n >= 3");
  detail::require_positive(mass, "mass");
  detail::require_positive(radius, "circumradius");
  double csc_sum = 0.0;
  for (int k = 1; k < n; ++k)
    csc_sum += 1.0 / std::sin(std::numbers::pi * k / n);
  const double w2 = mass / (4.0 * radius * radius * radius) * csc_sum;
  std::vector<Vec2> pos;
  for (int k = 0; k < n; ++k)
  {
    const double a = 2.0 * std::numbers::pi * k / n;
    pos.emplace_back(radius * std::cos(a), radius * std::sin(a));
  }
  return detail::rigid_seed(std::vector<double>(n, mass), pos, std::sqrt(w2), drift);
}

/// Circular binary at separation d, omega^2 = (m1 + m2)/d^3.
inline Seed make_two_body(const std::vector<double>& masses, double separation, const Vec2& drift = Vec2::Zero())
{
  if (masses.size() != 2)
    throw SchemaError("masses: two_body needs two bodies");
  detail::require_positive(separation, "separation");
  const double mt = masses[0] + masses[1];
  const double w = std::sqrt(mt / std::pow(separation, 3));
  return detail::rigid_seed(masses, {{separation, 0.0}, {0.0, 0.0}}, w, drift);
}

struct FigureEight
{
  BodySystem sys;
  ChartState state;
  double period = 0.0;
  double closure = 0.0;
};

/// Reads the shipped choreography data and refuses it unless one period of
/// the flat flow at step `check_step` closes to within `closure_tol`.
inline FigureEight load_figure_eight(const std::string& path, double check_step = 1e-4, double closure_tol = 1e-6)
{
  std::ifstream in(path);
  if (!in)
    throw ParseError("cannot open " + path);
  nlohmann::json j;
  try
  {
    j = nlohmann::json::parse(in);
  }
  catch (const nlohmann::json::parse_error& e)
  {
    throw ParseError(path + ": " + e.what());
  }
  FigureEight out;
  try
  {
    out.sys = BodySystem(j.at("masses").get<std::vector<double>>());
    out.period = j.at("period").get<double>();
    const auto pos = j.at("positions").get<std::vector<std::vector<double>>>();
    const auto vel = j.at("velocities").get<std::vector<std::vector<double>>>();
    if (out.sys.n() != 3 || pos.size() != 3 || vel.size() != 3)
      throw SchemaError("figure-eight data needs three bodies");
    out.state = ChartState(3);
    for (int i = 0; i < 3; ++i)
    {
      if (pos[i].size() != 2 || vel[i].size() != 2)
        throw SchemaError("positions/velocities entries must be pairs");
      out.state.set_q(i, {pos[i][0], pos[i][1]});
      out.state.set_p(i, out.sys.masses[i] * Vec2(vel[i][0], vel[i][1]));
    }
  }
  catch (const nlohmann::json::exception& e)
  {
    throw SchemaError(path + ": " + e.what());
  }
  detail::require_positive(out.period, "period");
  const MomentumValue mu = momentum_nbody({}, out.state);
  if (mu.norm() > 1e-12)
    throw ClosureValidationError("figure-eight data has nonzero momentum " + std::to_string(mu.norm()));
  const ChartState back = flow(NewtonianModel(out.sys), {}, out.state, out.period, IntegratorConfig{check_step});
  out.closure = (back.z - out.state.z).norm();
  if (!(out.closure < closure_tol))
    throw ClosureValidationError("figure-eight closure " + std::to_string(out.closure) + " exceeds " +
                                 std::to_string(closure_tol));
  return out;
}

inline std::string default_figure_eight_path() { return std::string(CURVCONT_DATA_DIR) + "/figure_eight.json"; }

enum class ScenarioKind
{
  lagrange,
  euler,
  ngon,
  two_body,
  figure_eight,
  custom
};

struct EpsilonGrid
{
  double start = 0.0;
  double stop = 0.2;
  double step = 0.01;

  std::vector<double> values() const
  {
    std::vector<double> out;
    const long count = long(std::floor((stop - start) / step + 1e-9));
    for (long k = 0; k <= count; ++k)
      out.push_back(start + double(k) * step);
    return out;
  }
};

struct ScenarioSpec
{
  ScenarioKind kind = ScenarioKind::lagrange;
  std::vector<double> masses;
  double side = 1.0;         // lagrange
  double spacing = 1.0;      // euler
  double circumradius = 1.0; // ngon
  double separation = 1.0;   // two_body
  int n = 0;                 // ngon
  Vec2 drift = Vec2::Zero();
  int sigma = 1;
  EpsilonGrid grid;
  IntegratorConfig integrator;
  double t_final = 0.0; // simulate; 0 means one period of the seed
  std::string data_path; // figure_eight
  Vec custom_state;      // custom
  double custom_period = 0.0;
  bool check_nondegenerate = true; // orbit multipliers away from 1
  std::string output_dir = "out";
};

inline std::string kind_name(ScenarioKind k)
{
  switch (k)
  {
  case ScenarioKind::lagrange: return "lagrange";
  case ScenarioKind::euler: return "euler";
  case ScenarioKind::ngon: return "ngon";
  case ScenarioKind::two_body: return "two_body";
  case ScenarioKind::figure_eight: return "figure_eight";
  case ScenarioKind::custom: return "custom";
  }
  return "?";
}

namespace detail
{

inline int line_of_offset(const std::string& text, std::size_t offset)
{
  int line = 1;
  for (std::size_t i = 0; i < std::min(offset, text.size()); ++i)
    if (text[i] == '\n')
      ++line;
  return line;
}

template <class T>
T field(const nlohmann::json& j, const std::string& key, const std::string& path)
{
  try
  {
    return j.at(key).get<T>();
  }
  catch (const nlohmann::json::exception&)
  {
    throw SchemaError("field '" + path + "' missing or of wrong type");
  }
}

} // namespace detail

/// Parses and checks a scenario. Layout:
///   {kind, masses[], side|spacing|circumradius|separation, n, drift[2],
///    sigma, epsilon_grid{start,stop,step}, integrator{step,tol},
///    t_final, data, state[], period, nondegeneracy_check, output{dir}}
inline ScenarioSpec parse_scenario(const std::string& text, const std::string& origin = "<string>")
{
  nlohmann::json j;
  try
  {
    j = nlohmann::json::parse(text);
  }
  catch (const nlohmann::json::parse_error& e)
  {
    throw ParseError(origin + ":" + std::to_string(detail::line_of_offset(text, e.byte ? e.byte - 1 : 0)) + ": " +
                     e.what());
  }
  if (!j.is_object())
    throw SchemaError("top level must be an object");
  ScenarioSpec s;
  const std::string kind = detail::field<std::string>(j, "kind", "kind");
  if (kind == "lagrange")
    s.kind = ScenarioKind::lagrange;
  else if (kind == "euler")
    s.kind = ScenarioKind::euler;
  else if (kind == "ngon")
    s.kind = ScenarioKind::ngon;
  else if (kind == "two_body")
    s.kind = ScenarioKind::two_body;
  else if (kind == "figure_eight")
    s.kind = ScenarioKind::figure_eight;
  else if (kind == "custom")
    s.kind = ScenarioKind::custom;
  else
    throw SchemaError("field 'kind': unknown value '" + kind + "'");

  if (j.contains("masses"))
  {
    s.masses = detail::field<std::vector<double>>(j, "masses", "masses");
    for (std::size_t i = 0; i < s.masses.size(); ++i)
      detail::require_positive(s.masses[i], "masses[" + std::to_string(i) + "]");
  }
  for (auto [key, dst] : {std::pair{"side", &s.side}, std::pair{"spacing", &s.spacing},
                          std::pair{"circumradius", &s.circumradius}, std::pair{"separation", &s.separation}})
    if (j.contains(key))
    {
      *dst = detail::field<double>(j, key, key);
      detail::require_positive(*dst, key);
    }
  if (j.contains("drift"))
  {
    const auto d = detail::field<std::vector<double>>(j, "drift", "drift");
    if (d.size() != 2)
      throw SchemaError("field 'drift' must have two entries");
    s.drift = {d[0], d[1]};
  }
  if (j.contains("sigma"))
  {
    s.sigma = detail::field<int>(j, "sigma", "sigma");
    if (s.sigma != 1 && s.sigma != -1)
      throw SchemaError("field 'sigma' must be +1 or -1");
  }
  if (j.contains("epsilon_grid"))
  {
    const auto& g = j.at("epsilon_grid");
    s.grid.start = detail::field<double>(g, "start", "epsilon_grid.start");
    s.grid.stop = detail::field<double>(g, "stop", "epsilon_grid.stop");
    s.grid.step = detail::field<double>(g, "step", "epsilon_grid.step");
    if (s.grid.start < 0.0 || s.grid.stop < s.grid.start)
      throw SchemaError("field 'epsilon_grid': need 0 <= start <= stop");
    detail::require_positive(s.grid.step, "epsilon_grid.step");
  }
  if (j.contains("integrator"))
  {
    const auto& g = j.at("integrator");
    if (g.contains("step"))
      s.integrator.step = detail::field<double>(g, "step", "integrator.step");
    if (g.contains("tol"))
      s.integrator.newton_tol = detail::field<double>(g, "tol", "integrator.tol");
    detail::require_positive(s.integrator.step, "integrator.step");
    detail::require_positive(s.integrator.newton_tol, "integrator.tol");
  }
  if (j.contains("t_final"))
  {
    s.t_final = detail::field<double>(j, "t_final", "t_final");
    detail::require_positive(s.t_final, "t_final");
  }
  if (j.contains("nondegeneracy_check"))
    s.check_nondegenerate = detail::field<bool>(j, "nondegeneracy_check", "nondegeneracy_check");
  if (j.contains("output"))
    s.output_dir = detail::field<std::string>(j.at("output"), "dir", "output.dir");

  switch (s.kind)
  {
  case ScenarioKind::lagrange:
  case ScenarioKind::euler:
    if (s.masses.size() != 3)
      throw SchemaError("field 'masses' must have three entries for " + kind);
    break;
  case ScenarioKind::two_body:
    if (s.masses.size() != 2)
      throw SchemaError("field 'masses' must have two entries for two_body");
    break;
  case ScenarioKind::ngon:
    s.n = detail::field<int>(j, "n", "n");
    if (s.n < 3)
      throw SchemaError("field 'n' must be at least 3");
    if (s.masses.empty())
      throw SchemaError("field 'masses' missing");
    for (double m : s.masses)
      if (m != s.masses[0])
        throw SchemaError("field 'masses': ngon needs equal masses");
    break;
  case ScenarioKind::figure_eight:
    if (s.drift.norm() != 0.0)
      throw SchemaError("field 'drift' must be zero for figure_eight");
    s.data_path = j.contains("data") ? detail::field<std::string>(j, "data", "data") : default_figure_eight_path();
    break;
  case ScenarioKind::custom:
  {
    const auto z = detail::field<std::vector<double>>(j, "state", "state");
    if (z.size() != 4 * s.masses.size())
      throw SchemaError("field 'state' must have 4 entries per mass");
    s.custom_state = Eigen::Map<const Vec>(z.data(), Eigen::Index(z.size()));
    if (j.contains("period"))
    {
      s.custom_period = detail::field<double>(j, "period", "period");
      detail::require_positive(s.custom_period, "period");
    }
    BodySystem check(s.masses);
    (void)check;
    break;
  }
  }
  return s;
}

inline ScenarioSpec load_scenario(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw ParseError("cannot open scenario file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

/// Seed for an RE/RPO scenario kind (not figure_eight).
inline Seed make_seed(const ScenarioSpec& s)
{
  switch (s.kind)
  {
  case ScenarioKind::lagrange: return make_lagrange(s.masses, s.side, s.drift);
  case ScenarioKind::euler: return make_euler(s.masses, s.spacing, s.drift);
  case ScenarioKind::ngon: return make_ngon(s.n, s.masses[0], s.circumradius, s.drift);
  case ScenarioKind::two_body: return make_two_body(s.masses, s.separation, s.drift);
  case ScenarioKind::custom:
  {
    Seed out;
    out.sys = BodySystem(s.masses);
    out.state = ChartState(s.custom_state);
    return out;
  }
  case ScenarioKind::figure_eight: break;
  }
  throw SchemaError("kind " + kind_name(s.kind) + " has no rigid seed");
}

} // namespace curvcont

#endif
