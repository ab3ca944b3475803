#include "test_util.hpp"

using namespace curvcont;

namespace
{

ChartState perturbed(const ChartState& s, double size, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  ChartState out = s;
  for (Eigen::Index k = 0; k < out.z.size(); ++k)
    out.z(k) += uniform(rng, -size, size);
  return out;
}

REPoint flat_seed(const Seed& s)
{
  return solve_re({}, s.sys, s.state, s.xi, momentum_nbody({}, s.state));
}

double mean_side(const ChartState& s)
{
  double d = 0;
  for (int i = 0; i < 3; ++i)
    d += (s.q(i) - s.q((i + 1) % 3)).norm();
  return d / 3;
}

} // namespace

// ---------------------------------------------------------------- slices

TEST(Slice, FlatTwoBodyHasDimensionFour)
{
  const Seed s = make_two_body({1, 1}, 1.0);
  const MomentumValue mu = momentum_nbody({}, s.state);
  const SliceFrame f = build_slice({}, s.sys, s.state, mu);
  EXPECT_EQ(f.dimension(), 4);
  EXPECT_EQ(f.level_basis.cols(), 5);
  EXPECT_EQ(f.normal_basis.cols(), 3);
  const Mat all = f.coordinates();
  EXPECT_LT((all.transpose() * all - Mat::Identity(all.cols(), all.cols())).norm(), 1e-12);
}

TEST(Slice, OrthogonalToGeneratorAndTangentToLevel)
{
  for (int sigma : {1, -1})
    for (double eps : {0.0, 0.3})
    {
      const CurvatureParam p = param_at(sigma, eps);
      const Seed s = make_lagrange({1, 1, 1}, 1.0);
      const MomentumValue mu = momentum_nbody(p, s.state);
      const SliceFrame f = build_slice(p, s.sys, s.state, mu);
      EXPECT_EQ(f.dimension(), 12 - 3 - 1);
      const Vec gen = generator_phase(p, branch_isotropy(p, mu), s.state);
      EXPECT_LT((f.slice_basis.transpose() * gen).norm(), 1e-10);
      EXPECT_LT((momentum_jacobian(p, s.state) * f.level_basis).norm(), 1e-10);

      // J along a level direction changes only at second order
      std::vector<double> d{1e-2, 5e-3, 2.5e-3}, err;
      const Vec v = f.slice_basis.col(0);
      for (double h : d)
        err.push_back((momentum_nbody(p, ChartState(Vec(s.state.z + h * v))) - mu).norm());
      EXPECT_NEAR(loglog_slope(d, err), 2.0, 0.1) << "sigma " << sigma << " eps " << eps;
    }
}

TEST(Slice, RandomCompletionSpansSameSpace)
{
  const Seed s = make_ngon(4, 1.0, 1.0);
  const CurvatureParam p(1, 0.2);
  const SliceFrame f = build_slice(p, s.sys, s.state, momentum_nbody(p, s.state));
  std::mt19937_64 rng(3);
  const SliceFrame g = randomize_slice(f, rng);
  EXPECT_GT((g.slice_basis - f.slice_basis).norm(), 0.1);
  const Mat proj = f.slice_basis * f.slice_basis.transpose();
  EXPECT_LT((proj * g.slice_basis - g.slice_basis).norm(), 1e-12);
}

TEST(Slice, RejectsWrongBodyCount)
{
  const Seed s = make_two_body({1, 1}, 1.0);
  EXPECT_THROW(build_slice({}, BodySystem({1, 1, 1}), s.state, MomentumValue(0, 0, 1)), SchemaError);
}

// ---------------------------------------------------------------- Newton

TEST(GaussNewton, SolvesOverdeterminedConsistentSystem)
{
  auto f = [](const Vec& x) {
    Vec r(3);
    r << x(0) * x(0) - 2.0, x(1) - 1.0, x(0) * x(1) - std::sqrt(2.0);
    return r;
  };
  const NewtonReport rep = gauss_newton(f, Vec::Constant(2, 1.0), {}, true);
  EXPECT_NEAR(rep.x(0), std::sqrt(2.0), 1e-10);
  EXPECT_NEAR(rep.x(1), 1.0, 1e-10);
  EXPECT_LE(rep.f.norm(), 1e-10);
}

TEST(GaussNewton, RankDeficiencyIsAnErrorWhenFullRankRequired)
{
  auto f = [](const Vec& x) {
    Vec r(2);
    r << x(0) + x(1) - 1.0, 2.0 * (x(0) + x(1)) - 2.0 + 1e-3;
    return r;
  };
  EXPECT_THROW(gauss_newton(f, Vec::Zero(2), {}, true), SingularJacobianError);
}

TEST(GaussNewton, NoRootDiverges)
{
  auto f = [](const Vec& x) {
    Vec r(1);
    r << x(0) * x(0) + 1.0;
    return r;
  };
  EXPECT_THROW(gauss_newton(f, Vec::Constant(1, 0.5), {}, false), NewtonDivergenceError);
}

// ---------------------------------------------------------------- RE residual

TEST(REResidual, FlatLagrange)
{
  const Seed s = make_lagrange({1, 1, 1}, 1.0);
  EXPECT_LT(re_residual({}, s.sys, s.state, AlgebraElement(0, 0, std::sqrt(3.0))).norm(), 1e-12);
  EXPECT_GT(re_residual({}, s.sys, s.state, AlgebraElement(0, 0, 1.7)).norm(), 1e-3);
}

TEST(REResidual, ZeroGeneratorNeverVanishes)
{
  std::mt19937_64 rng(5);
  const BodySystem sys({1, 2, 3});
  for (int k = 0; k < 20; ++k)
  {
    const CurvatureParam p = random_param(rng);
    ChartState s(3);
    for (int i = 0; i < 3; ++i)
    {
      s.set_q(i, random_chart_point(rng, p, 1.0));
      s.set_p(i, random_unit_disc(rng));
    }
    if (min_pair_distance(s) < 0.1)
      continue;
    const Vec r = re_residual(p, sys, s, AlgebraElement::Zero());
    EXPECT_NEAR(r.norm(), vector_field(p, sys, s).norm(), 1e-14);
    // forces alone are nonzero: attraction has no equilibria
    EXPECT_GT(r.tail(6).norm(), 1e-3);
  }
}

TEST(REResidual, RotatedREKeepsGenerator)
{
  const Seed s = make_lagrange({1, 2, 3}, 1.0);
  for (double g : {0.3, 1.9, -2.4})
  {
    const ChartState r = act_state({}, exp_group({}, basis_b3(), g), s.state);
    EXPECT_LT(re_residual({}, s.sys, r, s.xi).norm(), 1e-11);
  }
}

// ---------------------------------------------------------------- solve_re

TEST(SolveRE, LagrangeFromPerturbedGuess)
{
  const Seed s = make_lagrange({1, 1, 1}, 1.0);
  const MomentumValue mu = momentum_nbody({}, s.state);
  const REPoint r = solve_re({}, s.sys, perturbed(s.state, 1e-3, 1), s.xi + AlgebraElement(0, 0, 1e-3), mu);
  EXPECT_LT(std::abs(r.generator(2) - std::sqrt(3.0)), 1e-9);
  EXPECT_LT(r.residual, 1e-10);
  EXPECT_LT(orbit_distance(r.state, s.state), 1e-8);
}

TEST(SolveRE, UnequalLagrangeOmegaSquaredIsTotalMass)
{
  const Seed s = make_lagrange({1, 2, 3}, 1.0);
  const REPoint r = solve_re({}, s.sys, perturbed(s.state, 1e-3, 2), s.xi, momentum_nbody({}, s.state));
  EXPECT_LT(std::abs(r.generator(2) - std::sqrt(6.0)), 1e-9);
  EXPECT_LT(r.residual, 1e-10);
}

TEST(SolveRE, EulerEqualMasses)
{
  const Seed s = make_euler({1, 1, 1}, 1.0);
  const REPoint r = solve_re({}, s.sys, perturbed(s.state, 1e-3, 3), s.xi, momentum_nbody({}, s.state));
  EXPECT_LT(std::abs(r.generator(2) - std::sqrt(1.25)), 1e-9);
  EXPECT_LT(r.residual, 1e-10);
}

TEST(SolveRE, SquareCscSum)
{
  const Seed s = make_ngon(4, 1.0, 1.0);
  const double w = std::sqrt(0.25 * (2 * std::sqrt(2.0) + 1.0));
  const REPoint r = solve_re({}, s.sys, perturbed(s.state, 1e-3, 4), s.xi, momentum_nbody({}, s.state));
  EXPECT_LT(std::abs(r.generator(2) - w), 1e-9);
  EXPECT_LT(r.residual, 1e-10);
}

TEST(SolveRE, FlatSolutionsCarryNoLinearMomentum)
{
  for (const Seed& s : {make_lagrange({1, 1, 1}, 1.0), make_euler({1, 2, 3}, 1.0), make_ngon(5, 1.0, 1.0)})
  {
    const REPoint r = solve_re({}, s.sys, perturbed(s.state, 1e-4, 9), s.xi, momentum_nbody({}, s.state));
    EXPECT_LT(std::abs(r.momentum(0)), 1e-10);
    EXPECT_LT(std::abs(r.momentum(1)), 1e-10);
  }
}

TEST(SolveRE, DriftingSeedIsRejected)
{
  const Seed s = make_lagrange({1, 1, 1}, 1.0, {0.1, 0.0});
  EXPECT_THROW(solve_re({}, s.sys, s.state, s.xi, momentum_nbody({}, s.state)), LinearMomentumError);
}

TEST(SolveRE, AlternateSliceGivesSameOrbit)
{
  const Seed s = make_lagrange({1, 1, 1}, 1.0);
  const CurvatureParam p(1, 0.1);
  const MomentumValue mu = momentum_nbody(p, s.state);
  const ChartState guess = perturbed(s.state, 1e-4, 6);
  const REPoint a = solve_re(p, s.sys, guess, s.xi, mu);
  std::mt19937_64 rng(17);
  const SliceFrame f = randomize_slice(build_slice(p, s.sys, guess, mu), rng);
  const REPoint b = solve_re(p, s.sys, guess, s.xi, mu, {}, &f);
  EXPECT_LT(a.residual, 1e-10);
  EXPECT_LT(b.residual, 1e-10);
  EXPECT_LT(orbit_distance(a.state, b.state), 1e-8);
  EXPECT_LT((a.generator - b.generator).norm(), 1e-8);
}

TEST(SolveRE, AugmentedHamiltonianIsCriticalOnSlice)
{
  const Seed s = make_lagrange({1, 1, 1}, 1.0);
  for (int sigma : {1, -1})
  {
    const CurvatureParam p(sigma, 0.15);
    const REPoint r = solve_re(p, s.sys, s.state, s.xi, momentum_nbody(p, s.state));
    ASSERT_LT(r.residual, 1e-10);
    // d(H - <J, xi>) restricted to the slice
    const Vec g = grad_hamiltonian(p, s.sys, r.state) - momentum_jacobian(p, r.state).transpose() * r.generator;
    const SliceFrame f = build_slice(p, s.sys, r.state, r.momentum);
    EXPECT_LT((f.slice_basis.transpose() * g).norm(), 1e-9);
  }
}

// ---------------------------------------------------------------- RE branches

class LagrangeBranch : public ::testing::TestWithParam<int>
{
};

TEST_P(LagrangeBranch, ShortBranchIsSmooth)
{
  const int sigma = GetParam();
  const Seed s = make_lagrange({1, 1, 1}, 1.0);
  const REPoint seed = flat_seed(s);
  const std::vector<double> grid{0.0, 0.01, 0.02, 0.03, 0.04};
  const auto branch = continue_re(grid, sigma, s.sys, seed);
  ASSERT_EQ(branch.size(), grid.size());
  std::vector<double> eps, dz, dxi;
  for (const auto& r : branch)
  {
    ASSERT_TRUE(r.step_accepted) << r.error;
    EXPECT_LE(r.residual(), 1e-10);
    const auto& re = std::get<REPoint>(r.point);
    const double e2 = sigma * r.epsilon * r.epsilon;
    const double l = r.momentum()(2), w = re.generator(2);
    EXPECT_LT(std::abs(r.momentum()(0) - e2 * re.generator(0) * l / w), 1e-8);
    EXPECT_LT(std::abs(r.momentum()(1) - e2 * re.generator(1) * l / w), 1e-8);
    // pole-centred equal masses: pure rotation, no tilt
    EXPECT_LE(std::abs(r.momentum()(0)), 1e-9);
    EXPECT_LE(std::abs(r.momentum()(1)), 1e-9);
    if (r.epsilon > 0)
    {
      eps.push_back(r.epsilon);
      dz.push_back((r.state().z - seed.state.z).norm());
      dxi.push_back((re.generator - seed.generator).norm());
    }
  }
  EXPECT_NEAR(loglog_slope(eps, dz), 2.0, 0.3);
  EXPECT_NEAR(loglog_slope(eps, dxi), 2.0, 0.3);
}

INSTANTIATE_TEST_SUITE_P(Sigma, LagrangeBranch, ::testing::Values(1, -1));

TEST(REBranch, SideLengthCorrectionIsOddInSigma)
{
  const Seed s = make_lagrange({1, 1, 1}, 1.0);
  const REPoint seed = flat_seed(s);
  const std::vector<double> grid{0.0, 0.02, 0.04};
  double coef[2];
  for (int k = 0; k < 2; ++k)
  {
    const int sigma = k == 0 ? 1 : -1;
    const auto b = continue_re(grid, sigma, s.sys, seed);
    ASSERT_TRUE(b.back().step_accepted) << b.back().error;
    coef[k] = (mean_side(b.back().state()) - mean_side(seed.state)) / (0.04 * 0.04);
  }
  EXPECT_NE(coef[0], 0.0);
  EXPECT_LT(coef[0] * coef[1], 0.0);
  EXPECT_NEAR(coef[0], -coef[1], 0.1 * std::abs(coef[0]));
}

TEST(REBranch, RejectsBadInput)
{
  const Seed s = make_lagrange({1, 1, 1}, 1.0);
  const REPoint seed = flat_seed(s);
  EXPECT_THROW(continue_re({0.0, 0.1}, 0, s.sys, seed), SchemaError);
  EXPECT_THROW(continue_re({0.1, 0.0}, 1, s.sys, seed), SchemaError);
  REPoint drifting = seed;
  drifting.momentum(0) = 0.3;
  EXPECT_THROW(continue_re({0.0, 0.1}, 1, s.sys, drifting), LinearMomentumError);
}

TEST(REBranch, StopsAndRecordsFailingStep)
{
  // starts at a large curvature step, so the first correction misses
  const Seed s = make_lagrange({1, 1, 1}, 1.0);
  SolverOptions opt;
  opt.max_iter = 1;
  const auto b = continue_re({0.0, 0.5, 0.6}, 1, s.sys, flat_seed(s), opt);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_TRUE(b[0].step_accepted);
  EXPECT_FALSE(b[1].step_accepted);
  EXPECT_FALSE(b[1].error.empty());
}

// ---------------------------------------------------------------- orbits

TEST(SolvePO, TwoBodyCircularPeriod)
{
  const Seed s = make_two_body({1, 1}, 1.0);
  const NewtonianModel model(s.sys);
  SolverOptions opt;
  opt.integrator.step = 2.5e-4;
  const PoincareSection sec = make_section(model, {}, s.state);
  ChartState guess = perturbed(s.state, 1e-3, 8);
  guess.z -= sec.normal * sec.value(guess);
  const double t0 = 2 * std::numbers::pi / std::sqrt(2.0);
  const RPOPoint r = solve_po({}, s.sys, sec, guess, t0, opt);
  EXPECT_NEAR(r.period, t0, 1e-6);
  EXPECT_LT(r.residual, 1e-10);
  EXPECT_LT(std::abs(hamiltonian({}, s.sys, r.state) - sec.energy), 1e-10);
  EXPECT_LT(std::abs(sec.value(r.state)), 1e-12);
}

TEST(SolvePO, FlatEnergyGradientRequired)
{
  const BodySystem sys({1, 1});
  ChartState s(2);
  s.set_q(0, {1e9, 0});
  const NewtonianModel free_model(sys, false);
  PoincareSection sec{s, Vec::Unit(8, 0), 0.0};
  EXPECT_THROW(solve_po({}, sys, sec, s, 1.0), RegularityError);
}

TEST(SolveRPO, DriftingTwoBodyTranslates)
{
  const Seed s = make_two_body({1, 1}, 1.0, {0.1, 0.0});
  const MomentumValue mu = momentum_nbody({}, s.state);
  const double t0 = 2 * std::numbers::pi / std::sqrt(2.0);
  SolverOptions opt;
  opt.check_nondegenerate = false;
  const RPOPoint r = solve_rpo({}, s.sys, s.state, t0, AlgebraElement(mu(0) / 2.0 * t0, 0, 0), mu, opt);
  EXPECT_LT(r.residual, 1e-8);
  // displacement (mu1, mu2) T / M along b1
  EXPECT_NEAR(r.drift(0), mu(0) * r.period / 2.0, 1e-8);
  EXPECT_NEAR(r.drift(1), 0.0, 1e-10);
  EXPECT_NEAR(r.drift(2), 0.0, 1e-10);
  EXPECT_NEAR(r.period, t0, 1e-4);
}

TEST(SolveRPO, NonDriftingOrbitHasIdentityDrift)
{
  // eccentric Kepler orbit: periodic but not a relative equilibrium
  Seed s = make_two_body({1, 1}, 1.0);
  s.state.z.tail(4) *= 0.9;
  const double v = 0.9 * std::sqrt(2.0), a = 2.0 / (2.0 * (2.0 - 0.5 * v * v));
  const double t0 = 2 * std::numbers::pi * std::sqrt(a * a * a / 2.0);
  const MomentumValue mu = momentum_nbody({}, s.state);
  // the discrete flow precesses the ellipse by O(h^2) per period, which the
  // drift absorbs; it vanishes with h
  double drift[2];
  for (int k = 0; k < 2; ++k)
  {
    SolverOptions opt;
    opt.check_nondegenerate = false;
    opt.integrator.step = k == 0 ? 1e-3 : 5e-4;
    const RPOPoint r = solve_rpo({}, s.sys, s.state, t0, AlgebraElement::Zero(), mu, opt);
    EXPECT_LT(r.residual, 1e-8);
    EXPECT_LT(std::hypot(r.drift(0), r.drift(1)), 1e-10);
    EXPECT_NEAR(r.period, t0, 1e-4);
    drift[k] = r.drift.norm();
  }
  EXPECT_LT(drift[0], 1e-4);
  EXPECT_NEAR(drift[0] / drift[1], 4.0, 0.4);
}

TEST(SolveRPO, DriftGuessOutsideIsotropyRefused)
{
  const Seed s = make_two_body({1, 1}, 1.0, {0.1, 0.0});
  const MomentumValue mu = momentum_nbody({}, s.state);
  EXPECT_THROW(solve_rpo({}, s.sys, s.state, 4.4, AlgebraElement(0, 0.2, 0), mu), DriftOutsideIsotropyError);
  EXPECT_THROW(solve_rpo({}, s.sys, s.state, -1.0, AlgebraElement::Zero(), mu), SchemaError);
}

TEST(RPOBranch, DriftingTwoBodyShortBranch)
{
  const Seed s = make_two_body({1, 1}, 1.0, {0.1, 0.0});
  const MomentumValue mu = momentum_nbody({}, s.state);
  const double t0 = 2 * std::numbers::pi / std::sqrt(2.0);
  SolverOptions opt;
  opt.check_nondegenerate = false;
  opt.tol = 1e-9;
  const RPOPoint seed = solve_rpo({}, s.sys, s.state, t0, AlgebraElement(mu(0) / 2.0 * t0, 0, 0), mu, opt);
  for (int sigma : {1, -1})
  {
    const auto b = continue_rpo({0.0, 0.01, 0.02}, sigma, s.sys, seed, opt);
    ASSERT_EQ(b.size(), 3u);
    for (const auto& r : b)
    {
      ASSERT_TRUE(r.step_accepted) << r.error;
      EXPECT_LE(r.residual(), 1e-8);
      const auto& o = std::get<RPOPoint>(r.point);
      EXPECT_LT(drift_isotropy_error(param_at(sigma, r.epsilon), o.momentum, o.drift), 1e-8);
    }
    const double d1 = std::get<RPOPoint>(b[1].point).period - seed.period;
    const double d2 = std::get<RPOPoint>(b[2].point).period - seed.period;
    EXPECT_NEAR(d2 / d1, 4.0, 0.4);
  }
}

TEST(RPOBranch, DegenerateSeedRefusedWhenChecked)
{
  const Seed s = make_two_body({1, 1}, 1.0, {0.1, 0.0});
  const MomentumValue mu = momentum_nbody({}, s.state);
  const double t0 = 2 * std::numbers::pi / std::sqrt(2.0);
  SolverOptions opt;
  opt.check_nondegenerate = false;
  const RPOPoint seed = solve_rpo({}, s.sys, s.state, t0, AlgebraElement(mu(0) / 2.0 * t0, 0, 0), mu, opt);
  // Kepler orbits come in families, so a multiplier sits at 1
  EXPECT_LT(seed.multiplier_gap(), 1e-4);
  EXPECT_THROW(continue_rpo({0.0, 0.01}, 1, s.sys, seed), DegenerateOrbitError);
}
