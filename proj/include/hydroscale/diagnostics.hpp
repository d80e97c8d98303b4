#ifndef HYDROSCALE_DIAGNOSTICS_HPP
#define HYDROSCALE_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "exclusion.hpp"
#include "generator.hpp"
#include "lattice.hpp"

namespace hydroscale
{

/// eta^l(x): mean occupancy of the box {y : 0 <= y_i - x_i < l} (periodic).
inline double box_average(const Configuration& eta, std::size_t x, int l)
{
  const Lattice& lat = eta.lattice;
  if (l < 1 || l > lat.side()) throw std::invalid_argument("box_average: box side must be in [1, N]");
  std::vector<int> base = lat.coords(x);
  std::vector<int> off(static_cast<std::size_t>(lat.dim()), 0);
  std::size_t count = 0;
  std::size_t occupied = 0;
  while (true) {
    std::vector<int> c = base;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += off[i];
    occupied += static_cast<std::size_t>(eta[lat.index(c)]);
    ++count;
    std::size_t i = 0;
    while (i < off.size() && ++off[i] == l) off[i++] = 0;
    if (i == off.size()) break;
  }
  return static_cast<double>(occupied) / static_cast<double>(count);
}

/// eta^l at every site, by separable cyclic window sums.
inline Field box_average_field(const Configuration& eta, int l)
{
  const Lattice& lat = eta.lattice;
  if (l < 1 || l > lat.side()) throw std::invalid_argument("box_average_field: box side must be in [1, N]");
  Field cur(lat);
  for (std::size_t s = 0; s < lat.sites(); ++s) cur.values[s] = eta[s];
  Field next(lat);
  const int n = lat.side();
  for (int j = 0; j < lat.dim(); ++j) {
    const std::size_t st = lat.stride(j);
    detail::for_each_fiber(lat, j, [&](std::size_t base) {
      auto at = [&](int k) { return cur.values[base + static_cast<std::size_t>(((k % n) + n) % n) * st]; };
      double window = 0.0;
      for (int k = 0; k < l; ++k) window += at(k);
      for (int k = 0; k < n; ++k) {
        next.values[base + static_cast<std::size_t>(k) * st] = window;
        window += at(k + l) - at(k);
      }
    });
    std::swap(cur, next);
  }
  const double vol = std::pow(static_cast<double>(l), lat.dim());
  for (double& v : cur.values) v /= vol;
  return cur;
}

/// Local functions used by the replacement and energy diagnostics.
struct CylinderFunction
{
  enum class Kind
  {
    occupation,  // eta(0)
    pair,        // h1_j = eta(0) eta(e_j)
    straddle,    // h2_j = eta(-e_j) eta(e_j)
    affine       // eta(0) + a eta(0) eta(e_j)
  };

  Kind kind = Kind::occupation;
  int axis = 0;
  double a = 0.0;

  static CylinderFunction occupation() { return {Kind::occupation, 0, 0.0}; }
  static CylinderFunction pair(int j) { return {Kind::pair, j, 0.0}; }
  static CylinderFunction straddle(int j) { return {Kind::straddle, j, 0.0}; }
  static CylinderFunction affine(int j, double a) { return {Kind::affine, j, a}; }

  /// (tau_x g)(eta).
  double at(const Configuration& eta, std::size_t x) const
  {
    const Lattice& lat = eta.lattice;
    switch (kind) {
      case Kind::occupation: return eta[x];
      case Kind::pair: return eta[x] * eta[lat.shift(x, axis, 1)];
      case Kind::straddle: return eta[lat.shift(x, axis, -1)] * eta[lat.shift(x, axis, 1)];
      case Kind::affine: return eta[x] + a * eta[x] * eta[lat.shift(x, axis, 1)];
    }
    return 0.0;
  }
};

/// E_{nu_alpha}[g].
inline double g_tilde(const CylinderFunction& g, double alpha)
{
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("g_tilde: density outside [0, 1]");
  switch (g.kind) {
    case CylinderFunction::Kind::occupation: return alpha;
    case CylinderFunction::Kind::pair:
    case CylinderFunction::Kind::straddle: return alpha * alpha;
    case CylinderFunction::Kind::affine: return alpha + g.a * alpha * alpha;
  }
  return 0.0;
}

/// (1/N^d) sum_x F(x/N) { tau_x g(eta) - g~(eta^l(x)) }.
inline double replacement_integrand(const Configuration& eta, const Field& f, const CylinderFunction& g, int l)
{
  const Field box = box_average_field(eta, l);
  double acc = 0.0;
  for (std::size_t x = 0; x < eta.sites(); ++x) acc += f.values[x] * (g.at(eta, x) - g_tilde(g, box.values[x]));
  return acc / static_cast<double>(eta.sites());
}

/**
 * |int_0^t (1/N^d) sum_x F(x/N) { tau_x g(eta_s) - g~(eta_s^{eps N}(x)) } ds|,
 * trapezoid over the recorded snapshots with time <= t.
 */
inline double replacement_gap(const TrajectoryRecord& traj, const Field& f, const CylinderFunction& g, double eps,
                              double t)
{
  if (traj.snapshots.empty()) throw std::invalid_argument("replacement_gap: empty trajectory");
  const Lattice& lat = traj.snapshots.front().lattice;
  if (!(f.lattice == lat)) throw std::invalid_argument("replacement_gap: test function shape mismatch");
  const int l = static_cast<int>(std::floor(eps * lat.side() + 1e-9));
  if (l < 1) throw std::invalid_argument("replacement_gap: eps N must be >= 1");
  if (l > lat.side()) throw std::invalid_argument("replacement_gap: eps N must be <= N");
  double integral = 0.0;
  double prev_t = 0.0;
  double prev_v = 0.0;
  bool first = true;
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    if (traj.times[k] > t) break;
    const double v = replacement_integrand(traj.snapshots[k], f, g, l);
    if (!first) integral += 0.5 * (traj.times[k] - prev_t) * (v + prev_v);
    prev_t = traj.times[k];
    prev_v = v;
    first = false;
  }
  return std::abs(integral);
}

/**
 * N^2 L_N <pi, H> through its gradient decomposition along each axis:
 * (1/N^d) sum_x { (L^j H)(x) eta(x) + a [(L^j H)(x + e_j) + (L^j H)(x)] tau_x h1_j
 *                 - a (L^j H)(x) tau_x h2_j }.
 */
inline double drift_decomposition(const Configuration& eta, const GeneratorND& gen, const Field& h, double a)
{
  const Lattice& lat = eta.lattice;
  double acc = 0.0;
  for (int j = 0; j < lat.dim(); ++j) {
    const Field lh = apply_axis(gen, h, j);
    for (std::size_t x = 0; x < lat.sites(); ++x) {
      const std::size_t up = lat.shift(x, j, 1);
      const std::size_t down = lat.shift(x, j, -1);
      acc += lh.values[x] * eta[x];
      acc += a * (lh.values[up] + lh.values[x]) * eta[x] * eta[up];
      acc -= a * lh.values[x] * eta[down] * eta[up];
    }
  }
  return acc / static_cast<double>(lat.sites());
}

/// Change of <pi, H> if bond b fires in the current state.
inline double bond_observable_delta(const ExclusionProcess& proc, const Field& h, std::size_t b)
{
  const std::size_t x = proc.bond_site(b);
  const std::size_t y = proc.bond_target(b);
  const auto& eta = proc.state();
  return (h.values[x] - h.values[y]) * (eta[y] - eta[x]) / static_cast<double>(eta.sites());
}

/// N^2 L_N <pi, H> as a direct sum over bonds of rate times observable change.
inline double drift_bond_sum(const ExclusionProcess& proc, const Field& h)
{
  double acc = 0.0;
  for (std::size_t b = 0; b < proc.bond_count(); ++b) {
    const double r = proc.bond_rate(b);
    if (r > 0.0) acc += r * bond_observable_delta(proc, h, b);
  }
  return acc;
}

/**
 * Jump-resolved tracker of
 *   M_t = <pi_t, H> - <pi_0, H> - int_0^t N^2 L_N <pi_s, H> ds
 * and of its predictable quadratic variation. The drift is constant between
 * jumps and updated from the bonds touched by each exchange.
 */
class MartingaleTracker
{
public:
  MartingaleTracker(const ExclusionProcess& proc, Field h) : h_(std::move(h))
  {
    if (!(h_.lattice == proc.lattice())) throw std::invalid_argument("martingale tracker: shape mismatch");
    observable0_ = empirical_pairing(proc.state(), h_);
    observable_ = observable0_;
    resync(proc);
  }

  double value() const noexcept { return observable_ - observable0_ - drift_integral_; }
  double predictable_qv() const noexcept { return qv_integral_; }
  double drift() const noexcept { return drift_; }
  double sup_abs() const noexcept { return sup_; }

  void advance(const ExclusionProcess&, double t0, double t1)
  {
    drift_integral_ += drift_ * (t1 - t0);
    qv_integral_ += qv_rate_ * (t1 - t0);
    sup_ = std::max(sup_, std::abs(value()));
  }

  void before_jump(const ExclusionProcess& proc, double, std::size_t b, const AffectedBonds& touched)
  {
    pending_delta_ = bond_observable_delta(proc, h_, b);
    remove(proc, touched);
  }

  void after_jump(const ExclusionProcess& proc, double, std::size_t, const AffectedBonds& touched)
  {
    observable_ += pending_delta_;
    if (++since_resync_ >= proc.bond_count()) {
      resync(proc);
    } else {
      add(proc, touched);
    }
    sup_ = std::max(sup_, std::abs(value()));
  }

private:
  void resync(const ExclusionProcess& proc)
  {
    drift_ = 0.0;
    qv_rate_ = 0.0;
    for (std::size_t b = 0; b < proc.bond_count(); ++b) contribute(proc, b, 1.0);
    observable_ = empirical_pairing(proc.state(), h_);
    since_resync_ = 0;
  }

  void contribute(const ExclusionProcess& proc, std::size_t b, double sign)
  {
    const double r = proc.bond_rate(b);
    if (r <= 0.0) return;
    const double d = bond_observable_delta(proc, h_, b);
    drift_ += sign * r * d;
    qv_rate_ += sign * r * d * d;
  }

  void remove(const ExclusionProcess& proc, const AffectedBonds& touched)
  {
    for (std::size_t k : touched) contribute(proc, k, -1.0);
  }

  void add(const ExclusionProcess& proc, const AffectedBonds& touched)
  {
    for (std::size_t k : touched) contribute(proc, k, 1.0);
  }

  Field h_;
  double observable0_ = 0.0;
  double observable_ = 0.0;
  double drift_ = 0.0;
  double qv_rate_ = 0.0;
  double drift_integral_ = 0.0;
  double qv_integral_ = 0.0;
  double sup_ = 0.0;
  double pending_delta_ = 0.0;
  std::size_t since_resync_ = 0;
};

struct MartingalePath
{
  std::vector<double> times;
  std::vector<double> values;         // M_t
  std::vector<double> predictable_qv; // <M>_t
  double sup_abs = 0.0;               // sup over [0, T], jump-resolved
};

/// Runs one trajectory with H_lambda = G_lambda^N H and returns M at the observable times.
inline MartingalePath martingale_residual(const SimParams& params, const Configuration& eta0,
                                          const SpectralGenerator& spectral, const Field& h, double lambda,
                                          std::uint64_t replicate = 0)
{
  if (!(lambda > 0.0)) throw std::invalid_argument("martingale_residual: lambda must be > 0");
  const Field h_lambda = spectral.resolvent_solve(lambda, h);
  ExclusionProcess proc(params, eta0, replicate);
  MartingaleTracker tracker(proc, h_lambda);
  MartingalePath path;
  for (double t : params.observable_times) {
    proc.run_until(t, tracker);
    path.times.push_back(t);
    path.values.push_back(tracker.value());
    path.predictable_qv.push_back(tracker.predictable_qv());
  }
  proc.run_until(params.horizon, tracker);
  path.sup_abs = tracker.sup_abs();
  return path;
}

/// Upper bound C(H) t / (lambda N^d) on <M>_t with C(H) = (1 + 2 max(a, 0)) (1/N^d) sum H^2.
inline double martingale_qv_bound(const Field& h, double a, double lambda, double t)
{
  const double c_h = (1.0 + 2.0 * std::max(a, 0.0)) * mean_product(h, h);
  return c_h * t / (lambda * static_cast<double>(h.size()));
}

}  // namespace hydroscale

#endif  // HYDROSCALE_DIAGNOSTICS_HPP
