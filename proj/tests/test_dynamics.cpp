#include <gtest/gtest.h>

#include "curvcont/dynamics.hpp"
#include "test_util.hpp"

using namespace curvcont;

namespace
{

const double omega2 = std::sqrt(2.0);
const double period2 = 2 * std::numbers::pi / std::sqrt(2.0);

// unit masses at separation 1 on a circle: omega^2 = (m1 + m2)/d^3 = 2
ChartState circular()
{
  ChartState s(2);
  s.set_q(0, {0.5, 0});
  s.set_q(1, {-0.5, 0});
  s.set_p(0, {0, 0.5 * omega2});
  s.set_p(1, {0, -0.5 * omega2});
  return s;
}

const BodySystem pair_sys({1, 1});
const NewtonianModel pair_model(pair_sys);

CurvatureParam make(int s, double e) { return e == 0.0 ? CurvatureParam() : CurvatureParam(s, e); }

} // namespace

TEST(ImplicitMidpoint, CircularOrbitCloses)
{
  // the midpoint phase error on this orbit is about 0.67 (h omega)^2 per
  // radian, so h = 1e-3 closes only to 1e-5; 2.5e-4 gets below 1e-6
  IntegratorConfig cfg{2.5e-4};
  const ChartState z = flow(pair_model, {}, circular(), period2, cfg);
  EXPECT_LT((z.z - circular().z).norm(), 1e-6);
}

TEST(ImplicitMidpoint, EnergyDriftBounded)
{
  IntegratorConfig cfg;
  const ChartState s = circular();
  const double h0 = hamiltonian({}, pair_sys, s);
  double worst = 0.0;
  flow(pair_model, {}, s, 1e4 * cfg.step, cfg,
       [&](double, const ChartState& z) { worst = std::max(worst, std::abs(hamiltonian({}, pair_sys, z) - h0)); });
  EXPECT_LT(worst, 1e-8);
}

TEST(ImplicitMidpoint, SecondOrder)
{
  ChartState s = circular();
  s.set_p(0, {0.1, 0.6});
  s.set_p(1, {-0.1, -0.6});
  const double t = 1.0;
  const double h_ref = 0.02 / 16;
  const ChartState ref = flow(pair_model, {1, 0.2}, s, t, IntegratorConfig{h_ref});
  std::vector<double> hs{0.04, 0.02, 0.01}, err;
  for (double h : hs)
    err.push_back((flow(pair_model, {1, 0.2}, s, t, IntegratorConfig{h}).z - ref.z).norm());
  EXPECT_NEAR(loglog_slope(hs, err), 2.0, 0.2);
}

TEST(ImplicitMidpoint, Reversible)
{
  IntegratorConfig cfg;
  ChartState s = circular();
  for (int sg : {1, -1})
  {
    const CurvatureParam p(sg, 0.2);
    ChartState a = s;
    for (int k = 0; k < 200; ++k)
      a = step_implicit_midpoint(pair_model, p, a, cfg.step, cfg);
    for (int k = 0; k < 200; ++k)
      a = step_implicit_midpoint(pair_model, p, a, -cfg.step, cfg);
    EXPECT_LT((a.z - s.z).norm(), 1e-10);
  }
}

TEST(Flow, ZeroTimeIsIdentity)
{
  EXPECT_EQ(flow(pair_model, {}, circular(), 0.0, {}).z, circular().z);
}

TEST(Flow, ConservesEnergyAndMomentum)
{
  for (int sg : {1, -1})
    for (double e : {0.0, 0.1})
    {
      const CurvatureParam p = make(sg, e);
      const ChartState s = circular();
      const ChartState z = flow(pair_model, p, s, period2, {});
      EXPECT_LT(std::abs(hamiltonian(p, pair_sys, z) - hamiltonian(p, pair_sys, s)), 1e-8);
      EXPECT_LT((momentum_nbody(p, z) - momentum_nbody(p, s)).norm(), 1e-8);
    }
}

TEST(Flow, RotationEquivariance)
{
  ChartState s = circular();
  s.set_p(0, {0.2, 0.5});
  for (int sg : {1, -1})
    for (double e : {0.0, 0.15})
    {
      const CurvatureParam p = make(sg, e);
      const auto g = exp_group(p, basis_b3(), 0.9);
      const ChartState a = flow(pair_model, p, act_state(p, g, s), 1.5, {});
      const ChartState b = act_state(p, g, flow(pair_model, p, s, 1.5, {}));
      EXPECT_LT((a.z - b.z).norm(), 1e-8);
    }
}

TEST(FlowJacobian, IdentityAtZeroTime)
{
  const Mat j = flow_jacobian(pair_model, {}, circular(), 0.0, {});
  EXPECT_LT((j - Mat::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(FlowJacobian, SymplecticOverOnePeriod)
{
  const Mat j = flow_jacobian(pair_model, {}, circular(), period2, {});
  EXPECT_LT(symplecticity_error(j), 1e-5);
  EXPECT_NEAR(j.determinant(), 1.0, 1e-5);
  // an autonomous periodic orbit carries multiplier 1 at least twice
  int near_one = 0;
  for (auto m : eigenvalues(j))
    if (std::abs(std::abs(m) - 1.0) < 1e-4)
      ++near_one;
  EXPECT_GE(near_one, 2);
}

TEST(FlowJacobian, CurvedSymplectic)
{
  const Mat j = flow_jacobian(pair_model, {-1, 0.2}, circular(), 2.0, {});
  EXPECT_LT(symplecticity_error(j), 1e-5);
}

TEST(Poincare, CircularOrbitReturns)
{
  IntegratorConfig cfg{2.5e-4};
  const auto sec = make_section(pair_model, {}, circular());
  const auto r = poincare_return(pair_model, sec, circular(), {}, cfg, period2);
  EXPECT_NEAR(r.time, period2, 1e-6);
  EXPECT_LT((r.state.z - circular().z).norm(), 1e-6);
  EXPECT_LT(std::abs(sec.value(r.state)), 1e-13);
}

TEST(Poincare, ReturnTimeContinuity)
{
  IntegratorConfig cfg;
  const auto sec = make_section(pair_model, {}, circular());
  const double t0 = poincare_return(pair_model, sec, circular(), {}, cfg, period2).time;
  // perturb along a section direction (orthogonal to the normal)
  Vec d = Vec::Zero(8);
  d(0) = 1.0;
  d -= sec.normal.dot(d) * sec.normal;
  d.normalize();
  std::vector<double> dt;
  for (double delta : {1e-6, 2e-6})
  {
    ChartState s = circular();
    s.z += delta * d;
    dt.push_back(std::abs(poincare_return(pair_model, sec, s, {}, cfg, period2).time - t0));
  }
  EXPECT_LT(dt[0], 1e-4);
  EXPECT_NEAR(dt[1] / dt[0], 2.0, 0.05);
}

TEST(Poincare, NoReturn)
{
  ChartState s = circular();
  s.set_p(0, {0, 3});
  s.set_p(1, {0, -3});
  const auto sec = make_section(pair_model, {}, s);
  EXPECT_THROW(poincare_return(pair_model, sec, s, {}, {}, 1.0), NoReturnError);
}

TEST(SymplecticPullback, ExactUpToFiniteDifferences)
{
  std::mt19937_64 rng(3);
  for (int sg : {1, -1})
  {
    std::vector<Eigen::Vector4d> samples;
    const CurvatureParam p(sg, 0.2);
    for (int k = 0; k < 20; ++k)
    {
      const Vec2 w = random_chart_point(rng, p, 3.0), a = random_unit_disc(rng) * 2.0;
      samples.push_back(Eigen::Vector4d(w(0), w(1), a(0), a(1)));
    }
    EXPECT_LT(symplectic_pullback_check(p, samples), 1e-7);
    EXPECT_LT(symplectic_pullback_check(CurvatureParam(), samples), 1e-9);
  }
}
