#ifndef HYDROSCALE_EXCLUSION_HPP
#define HYDROSCALE_EXCLUSION_HPP

#include <algorithm>
#include <array>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "conductance.hpp"
#include "lattice.hpp"
#include "random.hpp"
#include "sum_tree.hpp"

namespace hydroscale
{

/// Occupancy field eta in {0,1}^{T_N^d}.
struct Configuration
{
  Lattice lattice;
  std::vector<std::uint8_t> occupancy;

  Configuration() = default;
  explicit Configuration(const Lattice& lat, std::uint8_t fill = 0) : lattice(lat), occupancy(lat.sites(), fill) {}
  Configuration(const Lattice& lat, std::vector<std::uint8_t> occ) : lattice(lat), occupancy(std::move(occ))
  {
    if (occupancy.size() != lattice.sites()) throw std::invalid_argument("configuration length does not match lattice");
    for (auto v : occupancy)
      if (v > 1) throw std::invalid_argument("configuration entries must be 0 or 1");
  }

  std::size_t sites() const noexcept { return occupancy.size(); }
  int operator[](std::size_t s) const { return occupancy[s]; }

  std::size_t particles() const noexcept
  {
    std::size_t c = 0;
    for (auto v : occupancy) c += v;
    return c;
  }

  double density() const noexcept { return static_cast<double>(particles()) / static_cast<double>(sites()); }

  bool operator==(const Configuration& o) const { return lattice == o.lattice && occupancy == o.occupancy; }
};

/// xi * (1 + a [eta(x - e_j) + eta(x + 2 e_j)]): independent of the two exchanged sites.
inline double jump_rate(const Configuration& eta, std::size_t x, int axis, double a, double xi)
{
  if (!(a > -0.5)) throw std::invalid_argument("jump_rate: interaction a must be > -1/2");
  const Lattice& lat = eta.lattice;
  const int around = eta[lat.shift(x, axis, -1)] + eta[lat.shift(x, axis, 2)];
  return xi * (1.0 + a * around);
}

inline void exchange_in_place(Configuration& eta, std::size_t x, int axis)
{
  const std::size_t y = eta.lattice.shift(x, axis, 1);
  std::swap(eta.occupancy[x], eta.occupancy[y]);
}

/// sigma^{x, x+e_j} eta.
inline Configuration exchange(Configuration eta, std::size_t x, int axis)
{
  exchange_in_place(eta, x, axis);
  return eta;
}

/// Independent sites with P(eta(x) = 1) = rho0(x/N).
template<typename Profile>
Configuration sample_bernoulli_profile(Profile&& rho0, const Lattice& lat, std::uint64_t seed,
                                       std::uint64_t replicate = 0)
{
  Field p = Field::sample(lat, rho0);
  RandomStream rng(seed, initial_state_stream(replicate));
  Configuration eta(lat);
  for (std::size_t s = 0; s < lat.sites(); ++s) {
    const double q = p.values[s];
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("sample_bernoulli_profile: profile value outside [0, 1]");
    eta.occupancy[s] = rng.bernoulli(q) ? 1 : 0;
  }
  return eta;
}

inline Configuration sample_bernoulli_field(const Field& p, std::uint64_t seed, std::uint64_t replicate = 0)
{
  RandomStream rng(seed, initial_state_stream(replicate));
  Configuration eta(p.lattice);
  for (std::size_t s = 0; s < p.size(); ++s) {
    const double q = p.values[s];
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("sample_bernoulli_field: profile value outside [0, 1]");
    eta.occupancy[s] = rng.bernoulli(q) ? 1 : 0;
  }
  return eta;
}

struct SimParams
{
  int n = 16;
  int dim = 1;
  double a = 0.0;
  ConductanceProfile profile;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> observable_times;
  bool oracle_mode = false;  // permits N < 4 for exact small-instance checks

  Lattice lattice() const { return Lattice(dim, n); }

  void validate() const
  {
    if (!(a > -0.5)) throw std::invalid_argument("sim params: interaction a must be > -1/2");
    if (n < (oracle_mode ? 2 : 4)) throw std::invalid_argument("sim params: N too small");
    if (dim < 1) throw std::invalid_argument("sim params: dimension must be >= 1");
    if (profile.dim != dim) throw std::invalid_argument("sim params: profile dimension does not match d");
    if (!(horizon >= 0.0)) throw std::invalid_argument("sim params: horizon must be >= 0");
    for (std::size_t i = 0; i < observable_times.size(); ++i) {
      const double t = observable_times[i];
      if (!(t >= 0.0 && t <= horizon)) throw std::invalid_argument("sim params: observable time outside [0, T]");
      if (i > 0 && t < observable_times[i - 1]) throw std::invalid_argument("sim params: observable times not sorted");
    }
  }
};

struct TrajectoryRecord
{
  std::vector<double> times;
  std::vector<Configuration> snapshots;
  std::uint64_t jump_count = 0;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
};

/// Bonds whose rate reads one of the two sites of a just-exchanged bond; at most 8 d entries.
struct AffectedBonds
{
  std::array<std::size_t, 64> ids{};
  std::size_t count = 0;

  void add(std::size_t b)
  {
    for (std::size_t i = 0; i < count; ++i)
      if (ids[i] == b) return;
    ids[count++] = b;
  }

  const std::size_t* begin() const noexcept { return ids.data(); }
  const std::size_t* end() const noexcept { return ids.data() + count; }
};

/**
 * Exclusion process with conductances, accelerated by N^2.
 *
 * Rejection-free event-driven simulation: bond b = j N^d + x carries rate
 * N^2 xi_{x,x+e_j} c_{x,x+e_j}(eta) when eta(x) != eta(x + e_j) and zero
 * otherwise (exchanging equal occupancies is the identity). Waiting times are
 * exact exponentials of the total rate, and after each event only the rates
 * of bonds within distance 2 of the exchanged pair are recomputed.
 *
 * Observers may implement any of
 *   advance(const ExclusionProcess&, double t0, double t1)   state constant on [t0, t1)
 *   before_jump(const ExclusionProcess&, double t, std::size_t bond, const AffectedBonds&)
 *   after_jump(const ExclusionProcess&, double t, std::size_t bond, const AffectedBonds&)
 */
class ExclusionProcess
{
public:
  ExclusionProcess(const SimParams& params, Configuration eta0, std::uint64_t replicate = 0)
    : lat_(params.lattice()), a_(params.a), eta_(std::move(eta0)), rng_(params.seed, dynamics_stream(replicate))
  {
    params.validate();
    if (lat_.dim() > 8) throw std::invalid_argument("exclusion process: at most 8 dimensions supported");
    if (!(eta_.lattice == lat_)) throw std::invalid_argument("exclusion process: initial configuration shape mismatch");
    const double n2 = static_cast<double>(lat_.side()) * lat_.side();
    xi_.resize(static_cast<std::size_t>(lat_.dim()));
    for (int j = 0; j < lat_.dim(); ++j) {
      auto& row = xi_[static_cast<std::size_t>(j)];
      row.resize(static_cast<std::size_t>(lat_.side()));
      for (int c = 0; c < lat_.side(); ++c)
        row[static_cast<std::size_t>(c)] = n2 * conductance(params.profile.axis(j), lat_.side(), c);
    }
    std::vector<double> rates(bond_count());
    for (std::size_t b = 0; b < rates.size(); ++b) rates[b] = compute_rate(b);
    tree_.assign(rates);
  }

  const Lattice& lattice() const noexcept { return lat_; }
  const Configuration& state() const noexcept { return eta_; }
  double time() const noexcept { return time_; }
  std::uint64_t jump_count() const noexcept { return jumps_; }
  double interaction() const noexcept { return a_; }

  std::size_t bond_count() const noexcept { return static_cast<std::size_t>(lat_.dim()) * lat_.sites(); }
  int bond_axis(std::size_t b) const noexcept { return static_cast<int>(b / lat_.sites()); }
  std::size_t bond_site(std::size_t b) const noexcept { return b % lat_.sites(); }
  std::size_t bond_target(std::size_t b) const { return lat_.shift(bond_site(b), bond_axis(b), 1); }
  std::size_t bond_id(std::size_t site, int axis) const noexcept
  {
    return static_cast<std::size_t>(axis) * lat_.sites() + site;
  }

  /// Current exchange rate of the bond (zero when both ends agree).
  double bond_rate(std::size_t b) const { return tree_.weight(b); }
  double total_rate() const noexcept { return tree_.total(); }

  /// N^2 xi of the bond, without the occupation factor.
  double scaled_conductance(std::size_t b) const
  {
    const int j = bond_axis(b);
    return xi_[static_cast<std::size_t>(j)][static_cast<std::size_t>(lat_.coord(bond_site(b), j))];
  }

  /// Runs the chain up to time t_end (>= time()).
  template<typename Observer>
  void run_until(double t_end, Observer& obs)
  {
    if (t_end < time_) throw std::invalid_argument("run_until: target time is in the past");
    while (true) {
      const double total = tree_.total();
      const double dt = total > 0.0 ? rng_.exponential(total) : 0.0;
      if (total <= 0.0 || time_ + dt >= t_end) {
        notify_advance(obs, time_, t_end);
        time_ = t_end;
        return;
      }
      notify_advance(obs, time_, time_ + dt);
      time_ += dt;
      const std::size_t b = tree_.find(rng_.uniform() * total);
      jump(b, obs);
    }
  }

  void run_until(double t_end)
  {
    NullObserver none;
    run_until(t_end, none);
  }

  AffectedBonds affected_bonds(std::size_t b) const
  {
    AffectedBonds out;
    const std::size_t ends[2] = {bond_site(b), bond_target(b)};
    for (std::size_t p : ends)
      for (int k = 0; k < lat_.dim(); ++k)
        for (int off = -2; off <= 1; ++off) out.add(bond_id(lat_.shift(p, k, off), k));
    return out;
  }

private:
  struct NullObserver
  {};

  double compute_rate(std::size_t b) const
  {
    const int j = bond_axis(b);
    const std::size_t x = bond_site(b);
    const std::size_t y = lat_.shift(x, j, 1);
    if (eta_[x] == eta_[y]) return 0.0;
    const int around = eta_[lat_.shift(x, j, -1)] + eta_[lat_.shift(x, j, 2)];
    return xi_[static_cast<std::size_t>(j)][static_cast<std::size_t>(lat_.coord(x, j))] * (1.0 + a_ * around);
  }

  template<typename Observer>
  void notify_advance(Observer& obs, double t0, double t1)
  {
    if constexpr (requires { obs.advance(*this, t0, t1); }) obs.advance(*this, t0, t1);
  }

  template<typename Observer>
  void jump(std::size_t b, Observer& obs)
  {
    const AffectedBonds touched = affected_bonds(b);
    if constexpr (requires { obs.before_jump(*this, time_, b, touched); }) obs.before_jump(*this, time_, b, touched);
    exchange_in_place(eta_, bond_site(b), bond_axis(b));
    for (std::size_t k : touched) tree_.set(k, compute_rate(k));
    ++jumps_;
    if constexpr (requires { obs.after_jump(*this, time_, b, touched); }) obs.after_jump(*this, time_, b, touched);
  }

  Lattice lat_;
  double a_;
  Configuration eta_;
  RandomStream rng_;
  std::vector<std::vector<double>> xi_;  // N^2 xi per axis and coordinate
  SumTree tree_;
  double time_ = 0.0;
  std::uint64_t jumps_ = 0;
};

/// Counts particle jumps per bond.
struct BondJumpCounter
{
  std::vector<std::uint64_t> counts;

  explicit BondJumpCounter(std::size_t bonds) : counts(bonds, 0) {}

  void after_jump(const ExclusionProcess&, double, std::size_t b, const AffectedBonds&) { ++counts[b]; }
};

/// Runs one trajectory and records the configuration at every observable time.
template<typename Observer>
TrajectoryRecord simulate(const SimParams& params, const Configuration& eta0, std::uint64_t replicate, Observer& obs)
{
  params.validate();
  ExclusionProcess proc(params, eta0, replicate);
  TrajectoryRecord rec;
  rec.seed = params.seed;
  rec.replicate = replicate;
  for (double t : params.observable_times) {
    proc.run_until(t, obs);
    rec.times.push_back(t);
    rec.snapshots.push_back(proc.state());
  }
  proc.run_until(params.horizon, obs);
  rec.jump_count = proc.jump_count();
  return rec;
}

inline TrajectoryRecord simulate(const SimParams& params, const Configuration& eta0, std::uint64_t replicate = 0)
{
  struct None
  {} none;
  return simulate(params, eta0, replicate, none);
}

/// <pi^N, H> = (1/N^d) sum_x H(x/N) eta(x).
inline double empirical_pairing(const Configuration& eta, const Field& h)
{
  if (!(eta.lattice == h.lattice)) throw std::invalid_argument("empirical_pairing: shape mismatch");
  double s = 0.0;
  for (std::size_t x = 0; x < eta.sites(); ++x)
    if (eta[x]) s += h.values[x];
  return s / static_cast<double>(eta.sites());
}

template<typename F>
  requires std::invocable<F, const std::vector<double>&>
double empirical_pairing(const Configuration& eta, F&& h)
{
  return empirical_pairing(eta, Field::sample(eta.lattice, std::forward<F>(h)));
}

/// `count` uniform times k T / count, k = 0..count.
inline std::vector<double> uniform_times(double horizon, int count)
{
  std::vector<double> t(static_cast<std::size_t>(count) + 1);
  for (int k = 0; k <= count; ++k) t[static_cast<std::size_t>(k)] = horizon * k / count;
  t.back() = horizon;
  return t;
}

}  // namespace hydroscale

#endif  // HYDROSCALE_EXCLUSION_HPP
