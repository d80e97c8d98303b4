#ifndef HYDROSCALE_IO_HPP
#define HYDROSCALE_IO_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "conductance.hpp"
#include "csv.hpp"
#include "exclusion.hpp"
#include "experiments.hpp"
#include "hydro.hpp"

namespace hydroscale::io
{

using nlohmann::json;

inline json load_json(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config " + path + ": " + e.what());
  }
}

template<typename T>
T get_or(const json& j, const char* key, T fallback)
{
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

template<typename T>
T require(const json& j, const char* key)
{
  if (!j.contains(key)) throw std::invalid_argument(std::string("config: missing field '") + key + "'");
  return j.at(key).get<T>();
}

/// {"slope": s, "atoms": [[u, w], ...]}
inline ConductanceFunction parse_conductance(const json& j)
{
  const double slope = get_or(j, "slope", 1.0);
  std::vector<Atom> atoms;
  if (j.contains("atoms"))
    for (const auto& at : j.at("atoms")) {
      if (!at.is_array() || at.size() != 2) throw std::invalid_argument("config: atoms are [location, weight] pairs");
      atoms.push_back({at[0].get<double>(), at[1].get<double>()});
    }
  return ConductanceFunction(slope, std::move(atoms));
}

/// {"axes": [...]} with one entry per axis, or a single entry applied to every axis; absent means identity.
inline ConductanceProfile parse_profile(const json& cfg, int dim)
{
  if (!cfg.contains("profile")) return ConductanceProfile::uniform(dim, ConductanceFunction::identity());
  const json& p = cfg.at("profile");
  if (p.contains("dim") && p.at("dim").get<int>() != dim) throw std::invalid_argument("config: profile dimension does not match dim");
  const json axes = p.contains("axes") ? p.at("axes") : json::array({p});
  if (axes.size() == 1) return ConductanceProfile::uniform(dim, parse_conductance(axes[0]));
  if (static_cast<int>(axes.size()) != dim) throw std::invalid_argument("config: profile needs one entry per axis");
  std::vector<ConductanceFunction> out;
  for (const auto& a : axes) out.push_back(parse_conductance(a));
  return ConductanceProfile(std::move(out));
}

/// {"kind": "cosine", "base": b, "amplitude": c, "frequency": k, "axis": j} and friends; a bare number is a constant.
inline FunctionSpec parse_function(const json& j, int dim)
{
  FunctionSpec f;
  if (j.is_number()) return FunctionSpec::constant(j.get<double>());
  f.kind = require<std::string>(j, "kind");
  f.value = get_or(j, "value", f.value);
  f.base = get_or(j, "base", f.base);
  f.amplitude = get_or(j, "amplitude", f.amplitude);
  f.frequency = get_or(j, "frequency", f.frequency);
  f.axis = get_or(j, "axis", f.axis);
  f.low = get_or(j, "low", f.low);
  f.high = get_or(j, "high", f.high);
  f.at = get_or(j, "at", f.at);
  f.validate(dim);
  return f;
}

/// "phi": [a_2, a_3, ...]; defaults to alpha + a alpha^2.
inline PhiFunction parse_phi(const json& cfg, double a)
{
  if (!cfg.contains("phi")) return PhiFunction::quadratic(a);
  return PhiFunction(cfg.at("phi").get<std::vector<double>>());
}

inline double parse_interaction(const json& cfg)
{
  const double a = get_or(cfg, "a", 0.0);
  if (!(a > -0.5)) throw std::invalid_argument("config: interaction a must be > -1/2");
  return a;
}

inline std::vector<double> parse_times(const json& cfg, double horizon, const char* list_key, const char* count_key,
                                       int default_count)
{
  if (cfg.contains(list_key)) return cfg.at(list_key).get<std::vector<double>>();
  return uniform_times(horizon, get_or(cfg, count_key, default_count));
}

inline std::uint64_t parse_replicates(const json& cfg, std::uint64_t fallback)
{
  const auto r = get_or<std::int64_t>(cfg, "replicates", static_cast<std::int64_t>(fallback));
  if (r < 1) throw std::invalid_argument("config: replicate count must be >= 1");
  return static_cast<std::uint64_t>(r);
}

inline CylinderFunction parse_cylinder(const json& j, double a)
{
  const std::string kind = require<std::string>(j, "kind");
  const int axis = get_or(j, "axis", 0);
  if (kind == "occupation") return CylinderFunction::occupation();
  if (kind == "pair" || kind == "h1") return CylinderFunction::pair(axis);
  if (kind == "straddle" || kind == "h2") return CylinderFunction::straddle(axis);
  if (kind == "affine") return CylinderFunction::affine(axis, get_or(j, "a", a));
  throw std::invalid_argument("config: unknown cylinder function '" + kind + "'");
}

// ---------------------------------------------------------------- CSV

inline void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryRecord>& recs)
{
  os << "replicate,time,site_index,occupancy\n";
  for (const auto& r : recs)
    for (std::size_t k = 0; k < r.snapshots.size(); ++k)
      for (std::size_t s = 0; s < r.snapshots[k].sites(); ++s)
        os << r.replicate << ',' << fmt17(r.times[k]) << ',' << s << ',' << r.snapshots[k][s] << '\n';
}

/// Non-overlapping boxes of side l anchored at multiples of l; box_index is row-major over the box grid.
inline void write_density_csv(std::ostream& os, const std::vector<TrajectoryRecord>& recs, int l)
{
  os << "replicate,time,box_index,box_average\n";
  for (const auto& r : recs)
    for (std::size_t k = 0; k < r.snapshots.size(); ++k) {
      const Configuration& eta = r.snapshots[k];
      const Lattice& lat = eta.lattice;
      if (l < 1 || lat.side() % l != 0) throw std::invalid_argument("density export: box side must divide N");
      const Lattice boxes(lat.dim(), lat.side() / l);
      for (std::size_t b = 0; b < boxes.sites(); ++b) {
        std::vector<int> anchor = boxes.coords(b);
        for (int& c : anchor) c *= l;
        os << r.replicate << ',' << fmt17(r.times[k]) << ',' << b << ',' << fmt17(box_average(eta, lat.index(anchor), l))
           << '\n';
      }
    }
}

inline void write_solution_csv(std::ostream& os, const PdeSolution& sol)
{
  os << "time,site_index,rho\n";
  for (std::size_t k = 0; k < sol.fields.size(); ++k)
    for (std::size_t s = 0; s < sol.fields[k].size(); ++s)
      os << fmt17(sol.times[k]) << ',' << s << ',' << fmt17(sol.fields[k].values[s]) << '\n';
}

struct EnergyRow
{
  int axis = 0;
  int n = 0;
  double energy = 0.0;
  std::string params;
};

inline void write_energy_csv(std::ostream& os, const std::vector<EnergyRow>& rows)
{
  os << "axis,N,energy,params\n";
  for (const auto& r : rows) os << r.axis << ',' << r.n << ',' << fmt17(r.energy) << ",\"" << r.params << "\"\n";
}

inline void write_convergence_csv(std::ostream& os, const ConvergenceReport& rep)
{
  os << "N,test_function,time,mean_error,stderr,replicates\n";
  for (const auto& r : rep.rows)
    os << r.n << ',' << r.test << ',' << fmt17(r.time) << ',' << fmt17(r.mean_error) << ',' << fmt17(r.std_error) << ','
       << r.replicates << '\n';
}

inline void write_checks_csv(std::ostream& os, const std::vector<std::pair<std::string, Check>>& checks)
{
  os << "group,check,passed,value,threshold\n";
  for (const auto& [group, c] : checks)
    os << group << ',' << c.name << ',' << (c.passed ? "true" : "false") << ',' << fmt17(c.value) << ','
       << fmt17(c.threshold) << '\n';
}

inline json to_json(const Check& c)
{
  return json{{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"threshold", c.threshold}};
}

inline json to_json(const SampleStats& s)
{
  return json{{"mean", s.mean}, {"sd", s.sd}, {"stderr", s.std_error}, {"count", s.count}};
}

/// JSON text with every float printed to 17 significant digits.
inline std::string dump17(const json& j, int indent = 2)
{
  std::string out;
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  auto rec = [&](auto&& self, const json& v, int depth) -> void {
    const std::string in(static_cast<std::size_t>(depth) * pad.size(), ' ');
    const std::string in1 = in + pad;
    if (v.is_object()) {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += in1 + json(it.key()).dump() + ": ";
        self(self, it.value(), depth + 1);
      }
      out += "\n" + in + "}";
    } else if (v.is_array()) {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",\n";
        out += in1;
        self(self, v[i], depth + 1);
      }
      out += "\n" + in + "]";
    } else if (v.is_number_float()) {
      const double d = v.get<double>();
      out += std::isfinite(d) ? fmt17(d) : std::string("null");
    } else {
      out += v.dump();
    }
  };
  rec(rec, j, 0);
  out += "\n";
  return out;
}

}  // namespace hydroscale::io

#endif  // HYDROSCALE_IO_HPP
