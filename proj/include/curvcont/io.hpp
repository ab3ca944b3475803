#ifndef CURVCONT_IO_HPP
#define CURVCONT_IO_HPP

// CSV and JSON output of trajectories, branches and run manifests. Floats
// are written with 17 significant digits so that they read back bit-exact.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "continuation.hpp"

namespace curvcont
{

inline std::string fmt17(double x)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path)
{
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out)
    throw ParseError("cannot write " + path.string());
  return out;
}

// ---------------------------------------------------------------- trajectory

struct TrajectorySample
{
  double t = 0.0;
  ChartState state;
};

inline void write_trajectory_csv(std::ostream& os, const CurvatureParam& param, const BodySystem& sys,
                                 const std::vector<TrajectorySample>& samples)
{
  const int n = sys.n();
  os << "t";
  for (int i = 0; i < n; ++i)
    os << ",q" << i + 1 << "_x,q" << i + 1 << "_y";
  for (int i = 0; i < n; ++i)
    os << ",p" << i + 1 << "_x,p" << i + 1 << "_y";
  os << ",H,mu1,mu2,L\n";
  for (const auto& s : samples)
  {
    os << fmt17(s.t);
    for (Eigen::Index k = 0; k < s.state.z.size(); ++k)
      os << ',' << fmt17(s.state.z(k));
    const MomentumValue mu = momentum_nbody(param, s.state);
    os << ',' << fmt17(hamiltonian(param, sys, s.state)) << ',' << fmt17(mu(0)) << ',' << fmt17(mu(1)) << ','
       << fmt17(mu(2)) << '\n';
  }
}

// ---------------------------------------------------------------- branches

namespace detail
{

inline std::size_t floquet_count(const std::vector<BranchRecord>& branch)
{
  std::size_t k = 0;
  for (const auto& r : branch)
    if (const auto* p = std::get_if<RPOPoint>(&r.point))
      k = std::max(k, p->floquet.size());
  return k;
}

inline nlohmann::json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

} // namespace detail

/// One row per record: epsilon, sigma, accepted, residual, omega (RE) or
/// period (orbits), generator or drift components, momentum, energy,
/// minimum pair distance, Newton iterations, then multiplier moduli.
inline void write_branch_csv(std::ostream& os, const BodySystem& sys, const std::vector<BranchRecord>& branch)
{
  const std::size_t nf = detail::floquet_count(branch);
  os << "epsilon,sigma,accepted,residual,omega_or_period,xi1,xi2,xi3,mu1,mu2,L,H,min_pair_distance,newton_iterations";
  for (std::size_t k = 0; k < nf; ++k)
    os << ",floquet_abs_" << k + 1;
  os << '\n';
  for (const auto& r : branch)
  {
    if (!r.step_accepted)
      continue;
    const CurvatureParam p = param_at(r.sigma, r.epsilon);
    double wt = 0.0;
    AlgebraElement xi = AlgebraElement::Zero();
    std::vector<double> mods;
    if (const auto* re = std::get_if<REPoint>(&r.point))
    {
      xi = re->generator;
      wt = xi.norm() > 0 ? xi(2) : 0.0;
    }
    else
    {
      const auto& o = std::get<RPOPoint>(r.point);
      xi = o.drift;
      wt = o.period;
      for (auto m : o.floquet)
        mods.push_back(std::abs(m));
    }
    const MomentumValue& mu = r.momentum();
    os << fmt17(r.epsilon) << ',' << r.sigma << ',' << int(r.step_accepted) << ',' << fmt17(r.residual()) << ','
       << fmt17(wt) << ',' << fmt17(xi(0)) << ',' << fmt17(xi(1)) << ',' << fmt17(xi(2)) << ',' << fmt17(mu(0))
       << ',' << fmt17(mu(1)) << ',' << fmt17(mu(2)) << ',' << fmt17(hamiltonian(p, sys, r.state())) << ','
       << fmt17(min_pair_distance(r.state())) << ',' << r.newton_iterations;
    for (std::size_t k = 0; k < nf; ++k)
      os << ',' << (k < mods.size() ? fmt17(mods[k]) : std::string());
    os << '\n';
  }
}

inline nlohmann::json branch_json(const BodySystem& sys, const std::vector<BranchRecord>& branch)
{
  nlohmann::json out;
  out["masses"] = sys.masses;
  out["records"] = nlohmann::json::array();
  for (const auto& r : branch)
  {
    nlohmann::json j;
    j["epsilon"] = r.epsilon;
    j["sigma"] = r.sigma;
    j["accepted"] = r.step_accepted;
    j["newton_iterations"] = r.newton_iterations;
    if (!r.step_accepted)
    {
      j["error"] = r.error;
      out["records"].push_back(j);
      continue;
    }
    j["state"] = detail::vec_json(r.state().z);
    j["momentum"] = detail::vec_json(r.momentum());
    j["residual"] = r.residual();
    if (const auto* re = std::get_if<REPoint>(&r.point))
    {
      j["type"] = "re";
      j["generator"] = detail::vec_json(re->generator);
    }
    else
    {
      const auto& o = std::get<RPOPoint>(r.point);
      j["type"] = "orbit";
      j["period"] = o.period;
      j["drift"] = detail::vec_json(o.drift);
      nlohmann::json fl = nlohmann::json::array();
      for (auto m : o.floquet)
        fl.push_back({m.real(), m.imag()});
      j["floquet"] = fl;
    }
    out["records"].push_back(j);
  }
  return out;
}

/// Inverse of branch_json for accepted records.
inline std::vector<BranchRecord> branch_from_json(const nlohmann::json& j)
{
  std::vector<BranchRecord> out;
  try
  {
    for (const auto& rj : j.at("records"))
    {
      BranchRecord r;
      r.epsilon = rj.at("epsilon").get<double>();
      r.sigma = rj.at("sigma").get<int>();
      r.step_accepted = rj.at("accepted").get<bool>();
      r.newton_iterations = rj.at("newton_iterations").get<int>();
      if (!r.step_accepted)
      {
        r.error = rj.at("error").get<std::string>();
        out.push_back(std::move(r));
        continue;
      }
      const auto z = rj.at("state").get<std::vector<double>>();
      const auto mu = rj.at("momentum").get<std::vector<double>>();
      const ChartState s(Vec(Eigen::Map<const Vec>(z.data(), Eigen::Index(z.size()))));
      const MomentumValue m(mu.at(0), mu.at(1), mu.at(2));
      if (rj.at("type") == "re")
      {
        REPoint p;
        p.state = s;
        p.momentum = m;
        p.residual = rj.at("residual").get<double>();
        const auto g = rj.at("generator").get<std::vector<double>>();
        p.generator = AlgebraElement(g.at(0), g.at(1), g.at(2));
        r.point = p;
      }
      else
      {
        RPOPoint p;
        p.state = s;
        p.momentum = m;
        p.residual = rj.at("residual").get<double>();
        p.period = rj.at("period").get<double>();
        const auto d = rj.at("drift").get<std::vector<double>>();
        p.drift = AlgebraElement(d.at(0), d.at(1), d.at(2));
        for (const auto& f : rj.at("floquet"))
          p.floquet.emplace_back(f.at(0).get<double>(), f.at(1).get<double>());
        r.point = p;
      }
      out.push_back(std::move(r));
    }
  }
  catch (const nlohmann::json::exception& e)
  {
    throw SchemaError(std::string("branch file: ") + e.what());
  }
  return out;
}

// ---------------------------------------------------------------- manifest

struct RunManifest
{
  std::string command;
  std::string scenario;
  std::map<std::string, std::string> overrides;
  std::string output_dir;
  std::uint64_t seed = 0;
  std::string version = CURVCONT_VERSION;
  std::string timestamp;
  std::vector<std::string> outputs;

  nlohmann::json to_json() const
  {
    nlohmann::json j;
    j["command"] = command;
    j["scenario"] = scenario;
    j["overrides"] = overrides;
    j["output_dir"] = output_dir;
    j["seed"] = seed;
    j["version"] = version;
    j["timestamp"] = timestamp;
    j["outputs"] = outputs;
    return j;
  }
};

inline std::string utc_timestamp()
{
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j)
{
  auto os = open_output(path);
  os << j.dump(2) << '\n';
}

} // namespace curvcont

#endif
