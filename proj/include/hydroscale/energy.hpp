#ifndef HYDROSCALE_ENERGY_HPP
#define HYDROSCALE_ENERGY_HPP

#include <cmath>
#include <limits>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "conductance.hpp"
#include "diagnostics.hpp"
#include "exclusion.hpp"
#include "hydro.hpp"
#include "lattice.hpp"

namespace hydroscale
{

/// [f(x + e_j) - f(x)] / (W_j((x_j + 1)/N) - W_j(x_j/N)).
inline Field w_derivative(const Field& f, const ConductanceFunction& w, int axis)
{
  const Lattice& lat = f.lattice;
  if (axis < 0 || axis >= lat.dim()) throw std::invalid_argument("w_derivative: invalid axis");
  const std::vector<double> dw = w_weights(w, lat.side());
  Field out(lat);
  for (std::size_t s = 0; s < lat.sites(); ++s) {
    const std::size_t up = lat.shift(s, axis, 1);
    out.values[s] = (f.values[up] - f.values[s]) / dw[static_cast<std::size_t>(lat.coord(s, axis))];
  }
  return out;
}

/// sum_x G(x)^2 dW_j(x_j) N^{-(d-1)}: the squared L^2(x_j (x) W_j) norm.
inline double l2_xw_norm(const Field& g, const ConductanceFunction& w, int axis)
{
  const Lattice& lat = g.lattice;
  if (axis < 0 || axis >= lat.dim()) throw std::invalid_argument("l2_xw_norm: invalid axis");
  const std::vector<double> dw = w_weights(w, lat.side());
  double acc = 0.0;
  for (std::size_t s = 0; s < lat.sites(); ++s)
    acc += g.values[s] * g.values[s] * dw[static_cast<std::size_t>(lat.coord(s, axis))];
  return acc / std::pow(static_cast<double>(lat.side()), lat.dim() - 1);
}

/// Square root of l2_xw_norm.
inline double xw_norm(const Field& g, const ConductanceFunction& w, int axis)
{
  return std::sqrt(l2_xw_norm(g, w, axis));
}

/// int_0^T || d Phi(rho_s) / dW_j ||^2 ds, trapezoid over the stored times.
inline double energy_functional(const std::vector<double>& times, const std::vector<DensityField>& fields,
                                const PhiFunction& phi, const ConductanceProfile& profile, int axis)
{
  if (times.size() != fields.size()) throw std::invalid_argument("energy_functional: times and fields differ in length");
  double acc = 0.0;
  double prev = 0.0;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    require_density(fields[k], 1e-12);
    const double v = l2_xw_norm(w_derivative(apply_phi(phi, fields[k]), profile.axis(axis), axis), profile.axis(axis), axis);
    if (k > 0) acc += 0.5 * (times[k] - times[k - 1]) * (v + prev);
    prev = v;
  }
  return acc;
}

inline double energy_functional(const PdeSolution& sol, const PhiFunction& phi, const ConductanceProfile& profile,
                                int axis)
{
  return energy_functional(sol.times, sol.fields, phi, profile, axis);
}

/**
 * W_N^j(eps, delta, H, eta) =
 *   sum_x H(x/N) (1/(eps N)) {Phi(eta^{delta N}(x)) - Phi(eta^{delta N}(x + eps N e_j))}
 *   - (K1/(eps N)) sum_x H(x/N)^2 {W_j((x_j + eps N + 1)/N) - W_j(x_j/N)}
 * with eps N and delta N rounded down to integers.
 */
inline double energy_statistic(const Configuration& eta, const Field& h, double eps, double delta, int axis, double k1,
                               const ConductanceProfile& profile, const PhiFunction& phi)
{
  const Lattice& lat = eta.lattice;
  if (!(h.lattice == lat)) throw std::invalid_argument("energy_statistic: test function shape mismatch");
  if (axis < 0 || axis >= lat.dim()) throw std::invalid_argument("energy_statistic: invalid axis");
  const int n = lat.side();
  const int shift = static_cast<int>(std::floor(eps * n + 1e-9));
  const int box = static_cast<int>(std::floor(delta * n + 1e-9));
  if (shift < 1) throw std::invalid_argument("energy_statistic: eps N must be >= 1");
  if (box < 1 || box > n) throw std::invalid_argument("energy_statistic: delta N must lie in [1, N]");
  const Field avg = box_average_field(eta, box);
  const ConductanceFunction& w = profile.axis(axis);
  double gradient = 0.0;
  double penalty = 0.0;
  for (std::size_t x = 0; x < lat.sites(); ++x) {
    const double hx = h.values[x];
    if (hx == 0.0) continue;
    const std::size_t ahead = lat.shift(x, axis, shift);
    gradient += hx * (phi.value(avg.values[x]) - phi.value(avg.values[ahead]));
    const int c = lat.coord(x, axis);
    penalty += hx * hx * w.increment(static_cast<double>(c) / n, static_cast<double>(c + shift + 1) / n);
  }
  return (gradient - k1 * penalty) / shift;
}

struct TestFunction
{
  std::string id;
  Field values;
};

/// Constants plus cos and sin of 2 pi k u_j for k = 1..max_frequency on every axis.
inline std::vector<TestFunction> test_function_dictionary(const Lattice& lat, int max_frequency = 2)
{
  std::vector<TestFunction> dict;
  dict.push_back({"one", Field(lat, 1.0)});
  for (int j = 0; j < lat.dim(); ++j) {
    for (int k = 1; k <= max_frequency; ++k) {
      const double w = 2.0 * std::numbers::pi * k;
      const std::string tag = std::to_string(k) + "_axis" + std::to_string(j);
      dict.push_back({"cos" + tag, Field::sample(lat, [&](const std::vector<double>& u) {
                        return std::cos(w * u[static_cast<std::size_t>(j)]);
                      })});
      dict.push_back({"sin" + tag, Field::sample(lat, [&](const std::vector<double>& u) {
                        return std::sin(w * u[static_cast<std::size_t>(j)]);
                      })});
    }
  }
  return dict;
}

/// Maximum of the time-averaged statistic over a dictionary, trapezoid over the snapshots.
inline double energy_statistic_sup(const TrajectoryRecord& traj, const std::vector<TestFunction>& dict, double eps,
                                   double delta, int axis, double k1, const ConductanceProfile& profile,
                                   const PhiFunction& phi)
{
  if (traj.snapshots.size() < 2) throw std::invalid_argument("energy_statistic_sup: need at least two snapshots");
  const double span = traj.times.back() - traj.times.front();
  if (!(span > 0.0)) throw std::invalid_argument("energy_statistic_sup: snapshots span no time");
  double best = -std::numeric_limits<double>::infinity();
  for (const TestFunction& tf : dict) {
    double acc = 0.0;
    double prev = 0.0;
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
      const double v = energy_statistic(traj.snapshots[k], tf.values, eps, delta, axis, k1, profile, phi);
      if (k > 0) acc += 0.5 * (traj.times[k] - traj.times[k - 1]) * (v + prev);
      prev = v;
    }
    best = std::max(best, acc / span);
  }
  return best;
}

}  // namespace hydroscale

#endif  // HYDROSCALE_ENERGY_HPP
