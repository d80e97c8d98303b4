#ifndef HYDROSCALE_GENERATOR_HPP
#define HYDROSCALE_GENERATOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "conductance.hpp"
#include "csv.hpp"
#include "lattice.hpp"

namespace hydroscale
{

/**
 * One-dimensional random walk generator with bond conductances:
 *   (L f)(x) = N^2 { xi_x [f(x+1) - f(x)] + xi_{x-1} [f(x-1) - f(x)] }.
 * conductances[x] is the conductance of the bond {x, x+1} (mod N).
 */
struct Generator1D
{
  int n = 0;
  std::vector<double> conductances;

  double xi(int x) const
  {
    const int r = ((x % n) + n) % n;
    return conductances[static_cast<std::size_t>(r)];
  }

  double max_conductance() const { return *std::max_element(conductances.begin(), conductances.end()); }

  /// Dense symmetric matrix of the operator (N = 2 folds both bonds onto one pair).
  Eigen::MatrixXd dense() const
  {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    const double n2 = static_cast<double>(n) * n;
    for (int x = 0; x < n; ++x) {
      const int y = (x + 1) % n;
      const double r = n2 * conductances[static_cast<std::size_t>(x)];
      m(x, y) += r;
      m(y, x) += r;
      m(x, x) -= r;
      m(y, y) -= r;
    }
    return m;
  }
};

inline Generator1D build_generator_1d(const ConductanceFunction& w, int n)
{
  if (n < 2) throw std::invalid_argument("build_generator_1d: grid size must be >= 2");
  Generator1D g;
  g.n = n;
  g.conductances.resize(static_cast<std::size_t>(n));
  for (int x = 0; x < n; ++x) g.conductances[static_cast<std::size_t>(x)] = conductance(w, n, x);
  return g;
}

/// Kronecker sum of per-axis generators acting on fields over T_N^d.
struct GeneratorND
{
  Lattice lattice;
  std::vector<Generator1D> axes;

  int dim() const noexcept { return lattice.dim(); }
  int side() const noexcept { return lattice.side(); }
  const Generator1D& axis(int j) const { return axes.at(static_cast<std::size_t>(j)); }

  double max_conductance() const
  {
    double m = 0.0;
    for (const auto& a : axes) m = std::max(m, a.max_conductance());
    return m;
  }
};

inline GeneratorND build_generator(const ConductanceProfile& profile, int n)
{
  GeneratorND g;
  g.lattice = Lattice(profile.dim, n);
  for (int j = 0; j < profile.dim; ++j) g.axes.push_back(build_generator_1d(profile.axis(j), n));
  return g;
}

namespace detail
{

/// Calls fn(base) for the first site of every fiber along `axis`.
template<typename Fn>
void for_each_fiber(const Lattice& lat, int axis, Fn&& fn)
{
  for (std::size_t s = 0; s < lat.sites(); ++s)
    if (lat.coord(s, axis) == 0) fn(s);
}

/// out = M * f along `axis`, fiber by fiber.
inline void apply_matrix_along_axis(const Eigen::MatrixXd& m, const Field& f, int axis, Field& out)
{
  const Lattice& lat = f.lattice;
  const int n = lat.side();
  const std::size_t st = lat.stride(axis);
  Eigen::VectorXd fiber(n);
  Eigen::VectorXd res(n);
  for_each_fiber(lat, axis, [&](std::size_t base) {
    for (int k = 0; k < n; ++k) fiber(k) = f.values[base + static_cast<std::size_t>(k) * st];
    res.noalias() = m * fiber;
    for (int k = 0; k < n; ++k) out.values[base + static_cast<std::size_t>(k) * st] = res(k);
  });
}

}  // namespace detail

/// One axis term L^j f of the Kronecker sum.
inline Field apply_axis(const GeneratorND& gen, const Field& f, int axis)
{
  if (!(f.lattice == gen.lattice)) throw std::invalid_argument("apply_axis: field shape mismatch");
  const Lattice& lat = gen.lattice;
  const Generator1D& g = gen.axis(axis);
  const double n2 = static_cast<double>(lat.side()) * lat.side();
  Field out(lat);
  for (std::size_t s = 0; s < lat.sites(); ++s) {
    const int c = lat.coord(s, axis);
    const std::size_t up = lat.shift(s, axis, 1);
    const std::size_t down = lat.shift(s, axis, -1);
    out.values[s] = n2 * (g.xi(c) * (f.values[up] - f.values[s]) + g.xi(c - 1) * (f.values[down] - f.values[s]));
  }
  return out;
}

inline Field apply_generator(const GeneratorND& gen, const Field& f)
{
  if (!(f.lattice == gen.lattice)) throw std::invalid_argument("apply_generator: field shape mismatch");
  Field out(gen.lattice);
  for (int j = 0; j < gen.dim(); ++j) {
    const Field part = apply_axis(gen, f, j);
    for (std::size_t s = 0; s < out.size(); ++s) out.values[s] += part.values[s];
  }
  return out;
}

/// Forward difference N [f(x + e_j) - f(x)], periodic.
inline Field discrete_partial(const Field& f, int axis)
{
  const Lattice& lat = f.lattice;
  if (axis < 0 || axis >= lat.dim()) throw std::invalid_argument("discrete_partial: invalid axis");
  Field out(lat);
  const double n = lat.side();
  for (std::size_t s = 0; s < lat.sites(); ++s) out.values[s] = n * (f.values[lat.shift(s, axis, 1)] - f.values[s]);
  return out;
}

/// (1/N^d) sum_j sum_x xi_{x,x+e_j} (grad_j f)(grad_j g) = <-L f, g>.
inline double dirichlet_form(const GeneratorND& gen, const Field& f, const Field& g)
{
  require_same_shape(f, g, "dirichlet_form");
  if (!(f.lattice == gen.lattice)) throw std::invalid_argument("dirichlet_form: field shape mismatch");
  double acc = 0.0;
  for (int j = 0; j < gen.dim(); ++j) {
    const Field df = discrete_partial(f, j);
    const Field dg = discrete_partial(g, j);
    const Generator1D& ax = gen.axis(j);
    for (std::size_t s = 0; s < f.size(); ++s) acc += ax.xi(f.lattice.coord(s, j)) * df.values[s] * dg.values[s];
  }
  return acc / static_cast<double>(f.size());
}

/**
 * Spectrum of -L^j: ascending eigenvalues with eigenvectors normalised so that
 * (1/N) sum_x phi_k(x) phi_l(x) = delta_kl.
 */
struct SpectralDecomposition1D
{
  std::vector<double> eigenvalues;
  Eigen::MatrixXd eigenvectors;  // column k is phi_k

  int size() const noexcept { return static_cast<int>(eigenvalues.size()); }
};

inline SpectralDecomposition1D spectral_decompose(const Generator1D& gen)
{
  const Eigen::MatrixXd neg = -gen.dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(neg);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "spectral_decompose: eigensolver failed (info=" << static_cast<int>(solver.info()) << ", N=" << gen.n
        << ", max conductance=" << gen.max_conductance() << ")";
    throw std::runtime_error(msg.str());
  }
  SpectralDecomposition1D out;
  out.eigenvalues.resize(static_cast<std::size_t>(gen.n));
  for (int k = 0; k < gen.n; ++k) out.eigenvalues[static_cast<std::size_t>(k)] = std::max(0.0, solver.eigenvalues()(k));
  out.eigenvectors = solver.eigenvectors() * std::sqrt(static_cast<double>(gen.n));
  return out;
}

/**
 * Generator together with the per-axis spectral data needed by the semigroup
 * and the resolvent. Immutable; every method is a pure function of its input.
 */
class SpectralGenerator
{
public:
  explicit SpectralGenerator(GeneratorND gen) : gen_(std::move(gen))
  {
    for (int j = 0; j < gen_.dim(); ++j) {
      int same = -1;
      for (int i = 0; i < j; ++i)
        if (gen_.axis(i).conductances == gen_.axis(j).conductances) same = i;
      if (same >= 0) {
        spectra_.push_back(spectra_[static_cast<std::size_t>(same)]);
        orth_.push_back(orth_[static_cast<std::size_t>(same)]);
      } else {
        spectra_.push_back(spectral_decompose(gen_.axis(j)));
        orth_.push_back(spectra_.back().eigenvectors / std::sqrt(static_cast<double>(gen_.side())));
      }
    }
  }

  const GeneratorND& generator() const noexcept { return gen_; }
  const SpectralDecomposition1D& spectrum(int axis) const { return spectra_.at(static_cast<std::size_t>(axis)); }

  /// All eigenvalues of -L (sums of one eigenvalue per axis), ascending.
  std::vector<double> eigenvalues() const
  {
    std::vector<double> vals{0.0};
    for (const auto& sp : spectra_) {
      std::vector<double> next;
      next.reserve(vals.size() * sp.eigenvalues.size());
      for (double v : vals)
        for (double e : sp.eigenvalues) next.push_back(v + e);
      vals.swap(next);
    }
    std::sort(vals.begin(), vals.end());
    return vals;
  }

  /// exp(t L^j) as a dense matrix.
  Eigen::MatrixXd axis_semigroup(int axis, double t) const
  {
    if (t < 0.0) throw std::invalid_argument("semigroup: negative time");
    const Eigen::MatrixXd& q = orth_.at(static_cast<std::size_t>(axis));
    const auto& ev = spectra_.at(static_cast<std::size_t>(axis)).eigenvalues;
    Eigen::VectorXd decay(static_cast<Eigen::Index>(ev.size()));
    for (std::size_t k = 0; k < ev.size(); ++k) decay(static_cast<Eigen::Index>(k)) = std::exp(-t * ev[k]);
    return q * decay.asDiagonal() * q.transpose();
  }

  /// P_t H, applied as exp(t L^j) along every axis in turn.
  Field semigroup_apply(double t, const Field& h) const
  {
    check_shape(h);
    if (t < 0.0) throw std::invalid_argument("semigroup_apply: negative time");
    if (t == 0.0) return h;
    Field cur = h;
    Field next(h.lattice);
    for (int j = 0; j < gen_.dim(); ++j) {
      detail::apply_matrix_along_axis(axis_semigroup(j, t), cur, j, next);
      std::swap(cur, next);
    }
    return cur;
  }

  /// Solves (lambda - L) u = H in the product eigenbasis, with one refinement step.
  Field resolvent_solve(double lambda, const Field& h) const
  {
    check_shape(h);
    if (!(lambda > 0.0)) throw std::invalid_argument("resolvent_solve: lambda must be > 0");
    Field u = spectral_resolvent(lambda, h);
    Field residual = h - (lambda * u - apply_generator(gen_, u));
    Field correction = spectral_resolvent(lambda, residual);
    return u + correction;
  }

  /// P_t^N(x, y), assembled column by column from indicator fields.
  Eigen::MatrixXd semigroup_kernel(double t) const
  {
    const std::size_t n = gen_.lattice.sites();
    Eigen::MatrixXd k(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t y = 0; y < n; ++y) {
      Field ind(gen_.lattice);
      ind.values[y] = 1.0;
      const Field col = semigroup_apply(t, ind);
      for (std::size_t x = 0; x < n; ++x) k(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = col.values[x];
    }
    return k;
  }

private:
  void check_shape(const Field& h) const
  {
    if (!(h.lattice == gen_.lattice)) throw std::invalid_argument("spectral generator: field shape mismatch");
  }

  Field spectral_resolvent(double lambda, const Field& h) const
  {
    const Lattice& lat = gen_.lattice;
    Field coeff = h;
    Field tmp(lat);
    for (int j = 0; j < gen_.dim(); ++j) {
      detail::apply_matrix_along_axis(orth_[static_cast<std::size_t>(j)].transpose(), coeff, j, tmp);
      std::swap(coeff, tmp);
    }
    for (std::size_t s = 0; s < lat.sites(); ++s) {
      double alpha = 0.0;
      for (int j = 0; j < gen_.dim(); ++j)
        alpha += spectra_[static_cast<std::size_t>(j)].eigenvalues[static_cast<std::size_t>(lat.coord(s, j))];
      coeff.values[s] /= (lambda + alpha);
    }
    for (int j = 0; j < gen_.dim(); ++j) {
      detail::apply_matrix_along_axis(orth_[static_cast<std::size_t>(j)], coeff, j, tmp);
      std::swap(coeff, tmp);
    }
    return coeff;
  }

  GeneratorND gen_;
  std::vector<SpectralDecomposition1D> spectra_;
  std::vector<Eigen::MatrixXd> orth_;  // Euclidean-orthonormal eigenvectors per axis
};

inline Field semigroup_apply(const GeneratorND& gen, double t, const Field& h)
{
  if (t < 0.0) throw std::invalid_argument("semigroup_apply: negative time");
  return SpectralGenerator(gen).semigroup_apply(t, h);
}

inline Field resolvent_solve(const GeneratorND& gen, double lambda, const Field& h)
{
  if (!(lambda > 0.0)) throw std::invalid_argument("resolvent_solve: lambda must be > 0");
  return SpectralGenerator(gen).resolvent_solve(lambda, h);
}

/**
 * Piecewise-constant extension of a coarse field to a finer grid: the value
 * at fine site i is the coarse value of the cell [x/N, (x+1)/N)^d containing
 * i / N_fine.
 */
inline Field extend_piecewise_constant(const Field& coarse, const Lattice& fine)
{
  if (coarse.dim() != fine.dim()) throw std::invalid_argument("extend_piecewise_constant: dimension mismatch");
  Field out(fine);
  std::vector<int> c(static_cast<std::size_t>(fine.dim()));
  const long nc = coarse.side();
  const long nf = fine.side();
  for (std::size_t s = 0; s < fine.sites(); ++s) {
    for (int j = 0; j < fine.dim(); ++j)
      c[static_cast<std::size_t>(j)] = static_cast<int>((static_cast<long>(fine.coord(s, j)) * nc) / nf);
    out.values[s] = coarse.values[coarse.lattice.index(c)];
  }
  return out;
}

/// L1(T^d) distance between the piecewise-constant extension of `coarse` and `reference`.
inline double l1_distance_to_reference(const Field& coarse, const Field& reference)
{
  const Field ext = extend_piecewise_constant(coarse, reference.lattice);
  double acc = 0.0;
  for (std::size_t s = 0; s < ext.size(); ++s) acc += std::abs(ext.values[s] - reference.values[s]);
  return acc / static_cast<double>(ext.size());
}

inline void write_spectrum_csv(std::ostream& os, const std::vector<double>& eigenvalues)
{
  os << "k,eigenvalue\n";
  for (std::size_t k = 0; k < eigenvalues.size(); ++k) os << k << ',' << fmt17(eigenvalues[k]) << '\n';
}

}  // namespace hydroscale

#endif  // HYDROSCALE_GENERATOR_HPP
