#ifndef CURVCONT_CONTINUATION_HPP
#define CURVCONT_CONTINUATION_HPP

// Slices of momentum level sets, Newton solvers for relative equilibria,
// periodic and relative periodic orbits, and natural-parameter continuation
// of each in the curvature eps.

#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "dynamics.hpp"

namespace curvcont
{

struct SliceFrame
{
  ChartState base;
  Mat level_basis;  ///< 4n x (4n-3), tangent to the momentum level set
  Mat normal_basis; ///< 4n x 3, the orthogonal complement
  Mat slice_basis;  ///< level directions orthogonal to the isotropy fields
  std::vector<AlgebraElement> isotropy;

  int dimension() const { return int(slice_basis.cols()); }
  /// slice and normal directions together: everything except the group orbit
  Mat coordinates() const
  {
    Mat b(base.z.size(), slice_basis.cols() + normal_basis.cols());
    b << slice_basis, normal_basis;
    return b;
  }
};

/// Slice through base for explicitly given isotropy generators.
inline SliceFrame build_slice(const CurvatureParam& param, const ChartState& base,
                              const std::vector<AlgebraElement>& isotropy)
{
  const Mat dj = momentum_jacobian(param, base);
  Eigen::JacobiSVD<Mat> svd(dj, Eigen::ComputeFullV);
  const Vec sv = svd.singularValues();
  if (sv(2) <= 1e-8)
    throw RegularityError("momentum map derivative has rank < 3 (singular value " + std::to_string(sv(2)) + ")");
  const Eigen::Index d = base.z.size();
  SliceFrame f;
  f.base = base;
  f.isotropy = isotropy;
  f.normal_basis = svd.matrixV().leftCols(3);
  f.level_basis = svd.matrixV().rightCols(d - 3);
  const int k = int(isotropy.size());
  if (k == 0)
  {
    f.slice_basis = f.level_basis;
    return f;
  }
  Mat gen(d, k);
  for (int i = 0; i < k; ++i)
    gen.col(i) = generator_phase(param, isotropy[i], base);
  const Mat proj = f.level_basis.transpose() * gen;
  Eigen::JacobiSVD<Mat> gs(proj, Eigen::ComputeFullU);
  const double smin = gs.singularValues()(k - 1);
  if (smin < 1e-8)
    throw LocalFreenessError("isotropy generator fields dependent at base (singular value " + std::to_string(smin) +
                             ")");
  f.slice_basis = f.level_basis * gs.matrixU().rightCols(proj.rows() - k);
  return f;
}

/// Slice for the one-dimensional branch isotropy of mu.
inline SliceFrame build_slice(const CurvatureParam& param, const BodySystem& sys, const ChartState& base,
                              const MomentumValue& mu)
{
  if (sys.n() != base.n())
    throw SchemaError("state and body system disagree on n");
  return build_slice(param, base, {branch_isotropy(param, mu)});
}

/// Same slice with its basis rotated by a random orthogonal matrix.
inline SliceFrame randomize_slice(SliceFrame f, std::mt19937_64& rng)
{
  std::normal_distribution<double> nd;
  const Eigen::Index m = f.slice_basis.cols();
  Mat g(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      g(i, j) = nd(rng);
  const Mat q = Eigen::HouseholderQR<Mat>(g).householderQ();
  f.slice_basis = f.slice_basis * q;
  return f;
}

/// Isotropy generators used for reduction of Floquet data: all of the algebra
/// when mu vanishes, otherwise the numerical kernel of the coadjoint matrix
/// with an absolute threshold relative to |mu|.
inline std::vector<AlgebraElement> reduction_isotropy(const CurvatureParam& param, const MomentumValue& mu)
{
  if (mu.norm() <= 1e-9)
    return {basis_b1(), basis_b2(), basis_b3()};
  Eigen::JacobiSVD<Mat3> svd(coadjoint_matrix(param, mu), Eigen::ComputeFullV);
  std::vector<AlgebraElement> out;
  for (int i = 0; i < 3; ++i)
    if (svd.singularValues()(i) <= 1e-9 * mu.norm())
      out.push_back(svd.matrixV().col(i));
  return out;
}

struct SolverOptions
{
  double tol = 1e-10;
  int max_iter = 30;
  double fd_step = 1e-6;
  /// singular values below rank_rtol * max are dropped from Gauss-Newton
  /// steps; for solvers that need a unique solution they are an error
  double rank_rtol = 1e-9;
  IntegratorConfig integrator;
  bool check_nondegenerate = true;
};

struct NewtonReport
{
  Vec x;
  Vec f;
  int iterations = 0;
  Vec singular_values;
};

/// Gauss-Newton with central-difference Jacobians and a truncated-SVD
/// (minimum-norm) step. Stops when |f| <= tol.
template <class F>
NewtonReport gauss_newton(F&& fun, Vec x, const SolverOptions& o, bool require_full_rank)
{
  NewtonReport rep;
  Vec f = fun(x);
  const double f0 = f.norm();
  for (int it = 0;; ++it)
  {
    if (!f.allFinite())
      throw NewtonDivergenceError("residual not finite at iteration " + std::to_string(it));
    if (f.norm() <= o.tol)
    {
      rep.iterations = it;
      break;
    }
    if (it >= o.max_iter)
      throw NewtonDivergenceError("no convergence in " + std::to_string(o.max_iter) +
                                  " iterations, residual " + std::to_string(f.norm()));
    if (f.norm() > 1e6 * std::max(f0, 1e-3))
      throw NewtonDivergenceError("residual grew to " + std::to_string(f.norm()));
    Mat jac(f.size(), x.size());
    for (Eigen::Index c = 0; c < x.size(); ++c)
    {
      Vec a = x, b = x;
      a(c) += o.fd_step;
      b(c) -= o.fd_step;
      jac.col(c) = (fun(a) - fun(b)) / (2.0 * o.fd_step);
    }
    Eigen::JacobiSVD<Mat> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
    rep.singular_values = svd.singularValues();
    const double smax = rep.singular_values(0);
    Vec coef = svd.matrixU().transpose() * f;
    for (Eigen::Index i = 0; i < coef.size(); ++i)
    {
      const double s = rep.singular_values(i);
      if (s <= o.rank_rtol * smax)
      {
        if (require_full_rank)
          throw SingularJacobianError("Jacobian singular value " + std::to_string(s) + " relative to " +
                                      std::to_string(smax));
        coef(i) = 0.0;
      }
      else
        coef(i) /= s;
    }
    x -= svd.matrixV() * coef;
    f = fun(x);
  }
  rep.x = std::move(x);
  rep.f = std::move(f);
  return rep;
}

// ---------------------------------------------------------------- RE

struct REPoint
{
  ChartState state;
  AlgebraElement generator = AlgebraElement::Zero();
  MomentumValue momentum = MomentumValue::Zero();
  double residual = 0.0;
  int iterations = 0;
};

inline Vec re_residual(const CurvatureParam& param, const BodySystem& sys, const ChartState& state,
                       const AlgebraElement& xi)
{
  check_state(param, state);
  return vector_field(param, sys, state) - generator_phase(param, xi, state);
}

namespace detail
{

inline void require_zero_linear_momentum(const MomentumValue& mu, double tol, const std::string& what)
{
  if (std::abs(mu(0)) > tol || std::abs(mu(1)) > tol)
    throw LinearMomentumError(what + ": flat relative equilibria have zero linear momentum, got (" +
                              std::to_string(mu(0)) + ", " + std::to_string(mu(1)) + ")");
}

} // namespace detail

/// Newton on slice and normal coordinates around the guess plus the
/// coefficient of the generator along the isotropy line of mu_target. The
/// equations are the full RE residual and the momentum constraint; the
/// system is overdetermined but consistent, so Gauss-Newton converges
/// quadratically up to finite-difference noise.
inline REPoint solve_re(const CurvatureParam& param, const BodySystem& sys, const ChartState& guess,
                        const AlgebraElement& guess_xi, const MomentumValue& mu_target,
                        const SolverOptions& opt = {}, const SliceFrame* frame = nullptr)
{
  if (param.flat())
    detail::require_zero_linear_momentum(mu_target, 1e-10, "solve_re");
  check_state(param, guess);
  const AlgebraElement iso = branch_isotropy(param, mu_target);
  const SliceFrame own = frame ? SliceFrame{} : build_slice(param, guess, {iso});
  const Mat basis = (frame ? *frame : own).coordinates();
  const Eigen::Index d = guess.z.size(), m = basis.cols();
  auto state_of = [&](const Vec& x) { return ChartState(Vec(guess.z + basis * x.head(m))); };
  auto fun = [&](const Vec& x) {
    const ChartState s = state_of(x);
    Vec f(d + 3);
    f.head(d) = re_residual(param, sys, s, x(m) * iso);
    f.tail<3>() = momentum_nbody(param, s) - mu_target;
    return f;
  };
  Vec x0 = Vec::Zero(m + 1);
  x0(m) = guess_xi.dot(iso);
  const NewtonReport rep = gauss_newton(fun, x0, opt, true);
  REPoint out;
  out.state = state_of(rep.x);
  out.generator = rep.x(m) * iso;
  out.momentum = momentum_nbody(param, out.state);
  out.residual = re_residual(param, sys, out.state, out.generator).norm();
  out.iterations = rep.iterations;
  if (param.flat())
    detail::require_zero_linear_momentum(out.momentum, 1e-10, "solve_re (converged)");
  return out;
}

// ---------------------------------------------------------------- orbits

/// Periodic (drift = 0) or relative periodic orbit.
struct RPOPoint
{
  ChartState state;
  double period = 0.0;
  AlgebraElement drift = AlgebraElement::Zero();
  MomentumValue momentum = MomentumValue::Zero();
  std::vector<std::complex<double>> floquet;
  double residual = 0.0;
  int iterations = 0;

  /// distance of the nontrivial multipliers from 1 (infinite if none)
  double multiplier_gap() const
  {
    double g = std::numeric_limits<double>::infinity();
    for (auto m : floquet)
      g = std::min(g, std::abs(m - 1.0));
    return g;
  }
};

/// exp(-eta) . phi_T(z)
inline ChartState drifted_flow(const CurvatureParam& param, const NewtonianModel& model, const ChartState& z,
                               double period, const AlgebraElement& drift, const IntegratorConfig& cfg)
{
  ChartState e = flow(model, param, z, period, cfg);
  if (drift.norm() == 0.0)
    return e;
  return act_state(param, exp_group(param, drift, -1.0), e);
}

struct ReducedMonodromy
{
  Mat matrix; ///< reduced return-map derivative in slice coordinates
  std::vector<std::complex<double>> multipliers;
  double smallest_singular = std::numeric_limits<double>::infinity(); ///< of (matrix - I)
};

/// Reduce the drift-corrected monodromy M at a point of a (relative)
/// periodic orbit to the reduced Poincare map. W spans the slice directions
/// orthogonal to the flow and the energy gradient. Since M W is tangent to
/// the energy level and the slice is orthogonal to the isotropy fields, the
/// oblique projection along the flow and group directions back onto the
/// section is just W^T (W^T kills both).
inline ReducedMonodromy reduce_monodromy(const CurvatureParam& param, const NewtonianModel& model,
                                         const ChartState& z, const Mat& monodromy)
{
  const MomentumValue mu = momentum_nbody(param, z);
  const SliceFrame f = build_slice(param, z, reduction_isotropy(param, mu));
  const Mat& s = f.slice_basis;
  Mat dirs(s.cols(), 2);
  dirs.col(0) = s.transpose() * vector_field(model, param, z);
  dirs.col(1) = s.transpose() * model.gradient(param, z);
  ReducedMonodromy out;
  if (s.cols() <= 2)
    return out;
  Eigen::JacobiSVD<Mat> svd(dirs, Eigen::ComputeFullU);
  const Mat w = s * svd.matrixU().rightCols(s.cols() - 2);
  out.matrix = w.transpose() * monodromy * w;
  out.multipliers = eigenvalues(out.matrix);
  const Mat shifted = out.matrix - Mat::Identity(out.matrix.rows(), out.matrix.cols());
  out.smallest_singular = Eigen::JacobiSVD<Mat>(shifted).singularValues().minCoeff();
  return out;
}

/// Floquet data of an orbit: FD monodromy of exp(-eta) . phi_T, reduced.
inline ReducedMonodromy orbit_floquet(const CurvatureParam& param, const NewtonianModel& model, const ChartState& z,
                                      double period, const AlgebraElement& drift, const SolverOptions& opt)
{
  const Eigen::Index d = z.z.size();
  Mat m(d, d);
  for (Eigen::Index c = 0; c < d; ++c)
  {
    ChartState a = z, b = z;
    a.z(c) += opt.fd_step;
    b.z(c) -= opt.fd_step;
    m.col(c) = (drifted_flow(param, model, a, period, drift, opt.integrator).z -
                drifted_flow(param, model, b, period, drift, opt.integrator).z) /
               (2.0 * opt.fd_step);
  }
  return reduce_monodromy(param, model, z, m);
}

/// Fixed point of the Poincare map on the section within its energy level.
/// Unknowns are coordinates in the section hyperplane; the equations are
/// P(z) - z and H(z) - E. Symmetry and conserved-quantity directions make
/// the Jacobian rank deficient, so steps are minimum-norm.
inline RPOPoint solve_po(const CurvatureParam& param, const BodySystem& sys, const PoincareSection& section,
                         const ChartState& guess, double period_hint, const SolverOptions& opt = {})
{
  const NewtonianModel model(sys);
  check_state(param, guess);
  if (model.gradient(param, guess).norm() <= 1e-8)
    throw RegularityError("energy gradient vanishes at the guess");
  const Eigen::Index d = guess.z.size();
  const Vec z0 = guess.z - section.normal * section.value(guess);
  Eigen::JacobiSVD<Mat> ns(Mat(section.normal.transpose()), Eigen::ComputeFullV);
  const Mat u = ns.matrixV().rightCols(d - 1);
  double last_time = period_hint;
  auto fun = [&](const Vec& x) {
    const ChartState s(Vec(z0 + u * x));
    const ReturnResult r = poincare_return(model, section, s, param, opt.integrator, period_hint);
    last_time = r.time;
    Vec f(d + 1);
    f.head(d) = r.state.z - s.z;
    f(d) = model.energy(param, s) - section.energy;
    return f;
  };
  const NewtonReport rep = gauss_newton(fun, Vec::Zero(d - 1), opt, false);
  RPOPoint out;
  out.state = ChartState(Vec(z0 + u * rep.x));
  const ReturnResult r = poincare_return(model, section, out.state, param, opt.integrator, period_hint);
  out.period = r.time;
  out.residual = (r.state.z - out.state.z).norm();
  out.momentum = momentum_nbody(param, out.state);
  out.iterations = rep.iterations;
  const ReducedMonodromy red = orbit_floquet(param, model, out.state, out.period, AlgebraElement::Zero(), opt);
  out.floquet = red.multipliers;
  if (opt.check_nondegenerate && red.smallest_singular < 1e-6)
    throw DegenerateOrbitError("reduced return map has dP - I singular value " +
                               std::to_string(red.smallest_singular));
  return out;
}

/// Distance of eta from the isotropy line of mu.
inline double drift_isotropy_error(const CurvatureParam& param, const MomentumValue& mu, const AlgebraElement& eta)
{
  const AlgebraElement iso = branch_isotropy(param, mu);
  return (eta - eta.dot(iso) * iso).norm();
}

/// Relative periodic orbit: unknowns are slice and normal coordinates
/// around the guess, the period and the drift coefficient along the
/// isotropy line of mu_target. Equations are the drifted closure, the
/// momentum constraint, the phase condition and, when energy_target is
/// given, the energy.
inline RPOPoint solve_rpo(const CurvatureParam& param, const BodySystem& sys, const ChartState& guess,
                          double guess_period, const AlgebraElement& guess_drift, const MomentumValue& mu_target,
                          const SolverOptions& opt = {}, std::optional<double> energy_target = std::nullopt)
{
  const NewtonianModel model(sys);
  check_state(param, guess);
  if (!(guess_period > 0.0))
    throw SchemaError("period guess must be positive");
  const AlgebraElement iso = branch_isotropy(param, mu_target);
  if ((guess_drift - guess_drift.dot(iso) * iso).norm() > 1e-8 * std::max(1.0, guess_drift.norm()))
    throw DriftOutsideIsotropyError("drift guess not in the isotropy algebra");
  const SliceFrame frame = build_slice(param, guess, {iso});
  const Mat basis = frame.coordinates();
  const Eigen::Index d = guess.z.size(), m = basis.cols();
  const Vec phase = vector_field(model, param, guess);
  auto state_of = [&](const Vec& x) { return ChartState(Vec(guess.z + basis * x.head(m))); };
  const Eigen::Index rows = d + 4 + (energy_target ? 1 : 0);
  auto fun = [&](const Vec& x) {
    const ChartState s = state_of(x);
    Vec f(rows);
    f.head(d) = drifted_flow(param, model, s, x(m), x(m + 1) * iso, opt.integrator).z - s.z;
    f.segment<3>(d) = momentum_nbody(param, s) - mu_target;
    f(d + 3) = phase.dot(s.z - guess.z);
    if (energy_target)
      f(d + 4) = model.energy(param, s) - *energy_target;
    return f;
  };
  Vec x0 = Vec::Zero(m + 2);
  x0(m) = guess_period;
  x0(m + 1) = guess_drift.dot(iso);
  const NewtonReport rep = gauss_newton(fun, x0, opt, false);
  RPOPoint out;
  out.state = state_of(rep.x);
  out.period = rep.x(m);
  out.drift = rep.x(m + 1) * iso;
  out.momentum = momentum_nbody(param, out.state);
  out.residual = (drifted_flow(param, model, out.state, out.period, out.drift, opt.integrator).z - out.state.z).norm();
  out.iterations = rep.iterations;
  if (!(out.period > 0.0))
    throw NewtonDivergenceError("period became nonpositive");
  const double off = drift_isotropy_error(param, out.momentum, out.drift);
  if (off > 1e-8)
    throw DriftOutsideIsotropyError("converged drift leaves the isotropy line by " + std::to_string(off));
  const ReducedMonodromy red = orbit_floquet(param, model, out.state, out.period, out.drift, opt);
  out.floquet = red.multipliers;
  if (opt.check_nondegenerate && red.smallest_singular < 1e-6)
    throw DegenerateOrbitError("reduced return map has dP - I singular value " +
                               std::to_string(red.smallest_singular));
  return out;
}

// ---------------------------------------------------------------- branches

struct BranchRecord
{
  double epsilon = 0.0;
  int sigma = 1;
  std::variant<REPoint, RPOPoint> point;
  int newton_iterations = 0;
  bool step_accepted = false;
  std::string error; ///< empty on accepted steps

  double residual() const
  {
    return std::visit([](const auto& p) { return p.residual; }, point);
  }
  const ChartState& state() const
  {
    return std::visit([](const auto& p) -> const ChartState& { return p.state; }, point);
  }
  const MomentumValue& momentum() const
  {
    return std::visit([](const auto& p) -> const MomentumValue& { return p.momentum; }, point);
  }
};

inline CurvatureParam param_at(int sigma, double eps)
{
  return eps == 0.0 ? CurvatureParam() : CurvatureParam(sigma, eps);
}

namespace detail
{

template <class Step>
std::vector<BranchRecord> run_branch(const std::vector<double>& grid, int sigma, Step&& step)
{
  std::vector<BranchRecord> out;
  double prev = -1.0;
  for (double eps : grid)
  {
    if (eps <= prev)
      throw SchemaError("epsilon grid must be increasing");
    prev = eps;
    BranchRecord rec;
    rec.epsilon = eps;
    rec.sigma = sigma;
    try
    {
      step(param_at(sigma, eps), rec);
      rec.step_accepted = true;
      out.push_back(std::move(rec));
    }
    catch (const Error& e)
    {
      rec.error = e.what();
      out.push_back(std::move(rec));
      break;
    }
  }
  return out;
}

} // namespace detail

/// Natural-parameter continuation of a flat RE seed along the eps grid.
/// The momentum target at each step is the momentum map at the new eps of
/// the previous solution's chart coordinates.
inline std::vector<BranchRecord> continue_re(const std::vector<double>& grid, int sigma, const BodySystem& sys,
                                             const REPoint& seed, const SolverOptions& opt = {})
{
  if (sigma != 1 && sigma != -1)
    throw SchemaError("sigma must be +1 or -1");
  detail::require_zero_linear_momentum(seed.momentum, 1e-10, "continue_re seed");
  REPoint prev = seed;
  return detail::run_branch(grid, sigma, [&](const CurvatureParam& p, BranchRecord& rec) {
    const MomentumValue target = momentum_nbody(p, prev.state);
    REPoint next = solve_re(p, sys, prev.state, prev.generator, target, opt);
    if (next.residual > opt.tol)
      throw NewtonDivergenceError("RE residual " + std::to_string(next.residual) + " above tolerance");
    rec.newton_iterations = next.iterations;
    rec.point = next;
    prev = std::move(next);
  });
}

/// Continuation of an RPO seed. Momentum and energy targets move with eps
/// as the values at the previous solution's chart coordinates.
inline std::vector<BranchRecord> continue_rpo(const std::vector<double>& grid, int sigma, const BodySystem& sys,
                                              const RPOPoint& seed, const SolverOptions& opt = {},
                                              double rpo_tol = 1e-8)
{
  if (sigma != 1 && sigma != -1)
    throw SchemaError("sigma must be +1 or -1");
  if (opt.check_nondegenerate && seed.multiplier_gap() <= 1e-4)
    throw DegenerateOrbitError("seed has a nontrivial multiplier within 1e-4 of 1");
  RPOPoint prev = seed;
  return detail::run_branch(grid, sigma, [&](const CurvatureParam& p, BranchRecord& rec) {
    const MomentumValue target = momentum_nbody(p, prev.state);
    const double energy = hamiltonian(p, sys, prev.state);
    const AlgebraElement iso = branch_isotropy(p, target);
    RPOPoint next = solve_rpo(p, sys, prev.state, prev.period, prev.drift.dot(iso) * iso, target, opt, energy);
    if (next.residual > rpo_tol)
      throw NewtonDivergenceError("RPO residual " + std::to_string(next.residual) + " above tolerance");
    rec.newton_iterations = next.iterations;
    rec.point = next;
    prev = std::move(next);
  });
}

/// Continuation of a periodic orbit through solve_po, with the section
/// rebuilt at each step through the previous solution.
inline std::vector<BranchRecord> continue_po(const std::vector<double>& grid, int sigma, const BodySystem& sys,
                                             const RPOPoint& seed, const SolverOptions& opt = {},
                                             double po_tol = 1e-8)
{
  if (sigma != 1 && sigma != -1)
    throw SchemaError("sigma must be +1 or -1");
  const NewtonianModel model(sys);
  RPOPoint prev = seed;
  return detail::run_branch(grid, sigma, [&](const CurvatureParam& p, BranchRecord& rec) {
    const PoincareSection sec = make_section(model, p, prev.state);
    RPOPoint next = solve_po(p, sys, sec, prev.state, prev.period, opt);
    if (next.residual > po_tol)
      throw NewtonDivergenceError("closure " + std::to_string(next.residual) + " above tolerance");
    rec.newton_iterations = next.iterations;
    rec.point = next;
    prev = std::move(next);
  });
}

} // namespace curvcont

#endif
