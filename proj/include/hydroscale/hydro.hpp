#ifndef HYDROSCALE_HYDRO_HPP
#define HYDROSCALE_HYDRO_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "generator.hpp"
#include "lattice.hpp"

namespace hydroscale
{

/// Phi(alpha) = alpha + sum_{j >= 2} a_j alpha^j, with coefficients[0] = a_2.
class PhiFunction
{
public:
  PhiFunction() = default;

  explicit PhiFunction(std::vector<double> coefficients) : coef_(std::move(coefficients))
  {
    for (double c : coef_)
      if (!std::isfinite(c)) throw std::invalid_argument("phi: coefficients must be finite");
    if (!(min_derivative_bound() > 0.0)) throw std::invalid_argument("phi: derivative must be positive on [0, 1]");
  }

  /// Phi(alpha) = alpha + a alpha^2.
  static PhiFunction quadratic(double a) { return PhiFunction(std::vector<double>{a}); }

  const std::vector<double>& coefficients() const noexcept { return coef_; }

  double operator()(double alpha) const { return value(checked(alpha)); }
  double derivative(double alpha) const { return prime(checked(alpha)); }

  /// Polynomial evaluation without the range check, for solver inner loops.
  double value(double alpha) const noexcept
  {
    double acc = 0.0;
    for (std::size_t k = coef_.size(); k-- > 0;) acc = (acc + coef_[k]) * alpha;
    return (acc * alpha) + alpha;
  }

  double prime(double alpha) const noexcept
  {
    double acc = 0.0;
    for (std::size_t k = coef_.size(); k-- > 0;) acc = acc * alpha + static_cast<double>(k + 2) * coef_[k];
    return 1.0 + acc * alpha;
  }

  /// Bound on |Phi''| over [0, 1].
  double second_derivative_bound() const noexcept
  {
    double b = 0.0;
    for (std::size_t k = 0; k < coef_.size(); ++k) {
      const double j = static_cast<double>(k + 2);
      b += j * (j - 1.0) * std::abs(coef_[k]);
    }
    return b;
  }

  /// Certified lower bound on min Phi' over [0, 1]: sampled minimum minus the Lipschitz slack.
  double min_derivative_bound() const
  {
    const double lip = second_derivative_bound();
    for (int samples = 4096; samples <= (1 << 20); samples *= 4) {
      double m = prime(0.0);
      for (int i = 1; i <= samples; ++i) m = std::min(m, prime(static_cast<double>(i) / samples));
      const double bound = m - 0.5 * lip / samples;
      if (bound > 0.0 || m <= 0.0) return bound;
    }
    return 0.0;
  }

  /// Certified upper bound on max Phi' over [0, 1].
  double max_derivative() const
  {
    constexpr int samples = 4096;
    double m = prime(0.0);
    for (int i = 1; i <= samples; ++i) m = std::max(m, prime(static_cast<double>(i) / samples));
    return m + 0.5 * second_derivative_bound() / samples;
  }

private:
  static double checked(double alpha)
  {
    if (!(alpha >= -1e-12 && alpha <= 1.0 + 1e-12)) throw std::invalid_argument("phi: density outside [0, 1]");
    return alpha;
  }

  std::vector<double> coef_;
};

inline double phi_eval(const PhiFunction& phi, double alpha) { return phi(alpha); }
inline double phi_prime(const PhiFunction& phi, double alpha) { return phi.derivative(alpha); }

/// A Field with values in [0, 1].
using DensityField = Field;

inline void require_density(const Field& rho, double tol = 0.0)
{
  for (double v : rho.values)
    if (!(v >= -tol && v <= 1.0 + tol)) throw std::invalid_argument("density field: value outside [0, 1]");
}

inline Field apply_phi(const PhiFunction& phi, const Field& rho)
{
  Field out(rho.lattice);
  for (std::size_t s = 0; s < rho.size(); ++s) out.values[s] = phi.value(rho.values[s]);
  return out;
}

/// L_N Phi(rho).
inline Field rhs(const GeneratorND& gen, const PhiFunction& phi, const Field& rho)
{
  return apply_generator(gen, apply_phi(phi, rho));
}

enum class TimeScheme
{
  euler,
  ssp_rk3
};

inline const char* to_string(TimeScheme s) { return s == TimeScheme::euler ? "euler" : "ssp_rk3"; }

inline TimeScheme parse_time_scheme(const std::string& s)
{
  if (s == "euler") return TimeScheme::euler;
  if (s == "ssp_rk3" || s == "rk3") return TimeScheme::ssp_rk3;
  throw std::invalid_argument("unknown time scheme: " + s);
}

struct PdeOptions
{
  TimeScheme scheme = TimeScheme::ssp_rk3;
  std::optional<double> dt;  // must not exceed the CFL limit
  double theta = 0.9;
};

struct PdeSolution
{
  std::vector<double> times;
  std::vector<DensityField> fields;
  double dt = 0.0;  // largest step used
  TimeScheme scheme = TimeScheme::ssp_rk3;
  std::size_t steps = 0;
};

/// theta / (2 d N^2 max xi max Phi').
inline double cfl_limit(const GeneratorND& gen, const PhiFunction& phi, double theta = 0.9)
{
  const double n = gen.side();
  return theta / (2.0 * gen.dim() * n * n * gen.max_conductance() * phi.max_derivative());
}

namespace detail
{
inline void euler_update(const GeneratorND& gen, const PhiFunction& phi, const Field& rho, double h, Field& out)
{
  const Field f = rhs(gen, phi, rho);
  for (std::size_t s = 0; s < rho.size(); ++s) out.values[s] = rho.values[s] + h * f.values[s];
}

/// Every stage is a convex combination of forward-Euler steps, so the CFL-bounded monotonicity carries over.
inline void step(const GeneratorND& gen, const PhiFunction& phi, TimeScheme scheme, double h, Field& rho)
{
  Field u1(rho.lattice);
  euler_update(gen, phi, rho, h, u1);
  if (scheme == TimeScheme::euler) {
    rho = std::move(u1);
    return;
  }
  Field u2(rho.lattice);
  euler_update(gen, phi, u1, h, u2);
  for (std::size_t s = 0; s < rho.size(); ++s) u2.values[s] = 0.75 * rho.values[s] + 0.25 * u2.values[s];
  Field u3(rho.lattice);
  euler_update(gen, phi, u2, h, u3);
  for (std::size_t s = 0; s < rho.size(); ++s) rho.values[s] = rho.values[s] / 3.0 + 2.0 * u3.values[s] / 3.0;
}
}  // namespace detail

/// Integrates d rho / dt = L_N Phi(rho) from gamma, landing exactly on each output time.
inline PdeSolution solve(const GeneratorND& gen, const PhiFunction& phi, const DensityField& gamma, double horizon,
                         const std::vector<double>& output_times, const PdeOptions& opts = {})
{
  if (!(gamma.lattice == gen.lattice)) throw std::invalid_argument("pde solve: initial profile shape mismatch");
  require_density(gamma);
  if (!(horizon >= 0.0)) throw std::invalid_argument("pde solve: horizon must be >= 0");
  for (std::size_t i = 0; i < output_times.size(); ++i) {
    if (!(output_times[i] >= 0.0 && output_times[i] <= horizon))
      throw std::invalid_argument("pde solve: output time outside [0, T]");
    if (i > 0 && output_times[i] < output_times[i - 1]) throw std::invalid_argument("pde solve: output times not sorted");
  }
  const double limit = cfl_limit(gen, phi, opts.theta);
  double dt = limit;
  if (opts.dt) {
    if (!(*opts.dt > 0.0)) throw std::invalid_argument("pde solve: dt must be > 0");
    if (*opts.dt > limit * (1.0 + 1e-12)) throw std::invalid_argument("pde solve: dt violates the CFL bound");
    dt = *opts.dt;
  }

  PdeSolution sol;
  sol.scheme = opts.scheme;
  Field rho = gamma;
  double t = 0.0;
  for (double target : output_times) {
    const double span = target - t;
    if (span > 0.0) {
      const auto count = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
      const double h = span / static_cast<double>(std::max<std::size_t>(count, 1));
      sol.dt = std::max(sol.dt, h);
      for (std::size_t k = 0; k < std::max<std::size_t>(count, 1); ++k) {
        detail::step(gen, phi, opts.scheme, h, rho);
        ++sol.steps;
      }
      for (double v : rho.values)
        if (!std::isfinite(v)) throw std::runtime_error("pde solve: non-finite value encountered");
      t = target;
    }
    sol.times.push_back(target);
    sol.fields.push_back(rho);
  }
  return sol;
}

/// (1/N^d) sum rho at each stored time, as max relative deviation from the first.
inline double mass_drift(const PdeSolution& sol)
{
  if (sol.fields.empty()) return 0.0;
  const double m0 = mean(sol.fields.front());
  double worst = 0.0;
  for (const Field& f : sol.fields) worst = std::max(worst, std::abs(mean(f) - m0) / std::max(std::abs(m0), 1e-300));
  return worst;
}

enum class Quadrature
{
  left,
  trapezoid
};

inline const char* to_string(Quadrature q) { return q == Quadrature::left ? "left" : "trapezoid"; }

inline Quadrature parse_quadrature(const std::string& s)
{
  if (s == "left") return Quadrature::left;
  if (s == "trapezoid") return Quadrature::trapezoid;
  throw std::invalid_argument("unknown quadrature rule: " + s);
}

/**
 * |<rho_t, G H> - <gamma, G H> - int_0^t <Phi(rho_s), L_N G H> ds| at every stored time t, with
 * G = G_lambda^N and the time integral taken over the stored fields. The first stored field
 * plays the role of gamma.
 */
inline std::vector<double> weak_residual_path(const PdeSolution& sol, const SpectralGenerator& spectral,
                                              const PhiFunction& phi, const Field& h, double lambda,
                                              Quadrature rule = Quadrature::left)
{
  if (!(lambda > 0.0)) throw std::invalid_argument("weak_residual: lambda must be > 0");
  if (sol.fields.empty()) throw std::invalid_argument("weak_residual: empty solution");
  const Field g = spectral.resolvent_solve(lambda, h);
  const Field lg = apply_generator(spectral.generator(), g);
  std::vector<double> integrand(sol.fields.size());
  for (std::size_t k = 0; k < sol.fields.size(); ++k) integrand[k] = mean_product(apply_phi(phi, sol.fields[k]), lg);
  const double base = mean_product(sol.fields.front(), g);
  std::vector<double> out(sol.fields.size(), 0.0);
  double integral = 0.0;
  for (std::size_t k = 1; k < sol.fields.size(); ++k) {
    const double dt = sol.times[k] - sol.times[k - 1];
    integral += rule == Quadrature::left ? dt * integrand[k - 1] : 0.5 * dt * (integrand[k - 1] + integrand[k]);
    out[k] = std::abs(mean_product(sol.fields[k], g) - base - integral);
  }
  return out;
}

/// Weak-form residual at the last stored time.
inline double weak_residual(const PdeSolution& sol, const SpectralGenerator& spectral, const PhiFunction& phi,
                            const Field& h, double lambda, Quadrature rule = Quadrature::left)
{
  return weak_residual_path(sol, spectral, phi, h, lambda, rule).back();
}

/// Spectral heat solution P_t gamma (the a = 0 oracle).
inline Field heat_solution(const SpectralGenerator& spectral, const Field& gamma, double t)
{
  return spectral.semigroup_apply(t, gamma);
}

}  // namespace hydroscale

#endif  // HYDROSCALE_HYDRO_HPP
