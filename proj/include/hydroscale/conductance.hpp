#ifndef HYDROSCALE_CONDUCTANCE_HPP
#define HYDROSCALE_CONDUCTANCE_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hydroscale
{

struct Atom
{
  double location;  // in [0, 1)
  double weight;    // > 0
};

/**
 * One coordinate function W_k: a linear drift plus finitely many atoms.
 *
 * On [0, 1] the function is W(x) = slope * x + sum of weights of atoms with
 * location in (0, x]; an atom at 0 is carried by the point 1, so W(0) = 0 and
 * the jump at every integer is right-continuous. The extension to the real
 * line has 1-periodic increments: W(x + 1) = W(x) + total_mass().
 *
 * Increments are summed from the atom list directly, never as a difference of
 * two evaluated values.
 */
class ConductanceFunction
{
public:
  ConductanceFunction() = default;

  explicit ConductanceFunction(double slope, std::vector<Atom> atoms = {})
    : slope_(slope), atoms_(std::move(atoms))
  {
    if (!(slope_ > 0.0) || !std::isfinite(slope_))
      throw std::invalid_argument("conductance function: drift slope must be finite and > 0");
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const Atom& at = atoms_[i];
      if (!(at.location >= 0.0 && at.location < 1.0))
        throw std::invalid_argument("conductance function: atom location must lie in [0, 1)");
      if (!(at.weight > 0.0) || !std::isfinite(at.weight))
        throw std::invalid_argument("conductance function: atom weight must be finite and > 0");
      if (i > 0 && !(atoms_[i - 1].location < at.location))
        throw std::invalid_argument("conductance function: atom locations must be strictly increasing");
    }
  }

  static ConductanceFunction identity() { return ConductanceFunction(1.0); }

  double slope() const noexcept { return slope_; }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }

  /// W(1) - W(0): drift plus every atom.
  double total_mass() const noexcept
  {
    double m = slope_;
    for (const Atom& at : atoms_) m += at.weight;
    return m;
  }

  /// W(b) - W(a) for a <= b.
  double increment(double a, double b) const
  {
    if (a > b) throw std::invalid_argument("increment: requires a <= b");
    double inc = slope_ * (b - a);
    for (const Atom& at : atoms_) {
      // number of integers k with a < location + k <= b
      const double hits = std::floor(b - at.location) - std::floor(a - at.location);
      inc += hits * at.weight;
    }
    return inc;
  }

  double operator()(double x) const { return x >= 0.0 ? increment(0.0, x) : -increment(x, 0.0); }

private:
  double slope_ = 1.0;
  std::vector<Atom> atoms_;
};

inline double eval_w(const ConductanceFunction& w, double x) { return w(x); }

inline double increment(const ConductanceFunction& w, double a, double b) { return w.increment(a, b); }

/// W-mass of the bond cell (x/N, (x+1)/N].
inline double bond_increment(const ConductanceFunction& w, int n, int x)
{
  return w.increment(static_cast<double>(x) / n, static_cast<double>(x + 1) / n);
}

/// xi_{x,x+1} = 1 / (N [W((x+1)/N) - W(x/N)]).
inline double conductance(const ConductanceFunction& w, int n, int x)
{
  if (n < 2) throw std::invalid_argument("conductance: grid size must be >= 2");
  if (x < 0 || x >= n) throw std::out_of_range("conductance: site index out of range");
  return 1.0 / (static_cast<double>(n) * bond_increment(w, n, x));
}

inline std::vector<double> w_weights(const ConductanceFunction& w, int n)
{
  if (n < 2) throw std::invalid_argument("w_weights: grid size must be >= 2");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int x = 0; x < n; ++x) out[static_cast<std::size_t>(x)] = bond_increment(w, n, x);
  return out;
}

/// W(x/N) for x = 0..N-1.
inline std::vector<double> sample_w(const ConductanceFunction& w, int n)
{
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int x = 0; x < n; ++x) out[static_cast<std::size_t>(x)] = w(static_cast<double>(x) / n);
  return out;
}

/// W = sum_k W_k(x_k).
struct ConductanceProfile
{
  int dim = 1;
  std::vector<ConductanceFunction> per_axis;

  ConductanceProfile() : per_axis(1, ConductanceFunction::identity()) {}

  explicit ConductanceProfile(std::vector<ConductanceFunction> axes)
    : dim(static_cast<int>(axes.size())), per_axis(std::move(axes))
  {
    if (dim < 1) throw std::invalid_argument("conductance profile: needs at least one axis");
  }

  static ConductanceProfile uniform(int dim, const ConductanceFunction& w)
  {
    return ConductanceProfile(std::vector<ConductanceFunction>(static_cast<std::size_t>(dim), w));
  }

  const ConductanceFunction& axis(int j) const { return per_axis.at(static_cast<std::size_t>(j)); }
};

}  // namespace hydroscale

#endif  // HYDROSCALE_CONDUCTANCE_HPP
