#ifndef HYDROSCALE_EXACT_HPP
#define HYDROSCALE_EXACT_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "conductance.hpp"
#include "exclusion.hpp"

namespace hydroscale
{

/// States of {0,1}^{T_N^d} are encoded with bit s holding eta(s).
inline Configuration decode_state(const Lattice& lat, std::uint32_t code)
{
  Configuration eta(lat);
  for (std::size_t s = 0; s < lat.sites(); ++s) eta.occupancy[s] = static_cast<std::uint8_t>((code >> s) & 1u);
  return eta;
}

inline std::uint32_t encode_state(const Configuration& eta)
{
  std::uint32_t code = 0;
  for (std::size_t s = 0; s < eta.sites(); ++s)
    if (eta[s]) code |= (1u << s);
  return code;
}

inline std::size_t exact_state_count(const SimParams& params)
{
  const std::size_t sites = params.lattice().sites();
  if (sites > 16) throw std::invalid_argument("exact generator: state space larger than 2^16");
  return std::size_t{1} << sites;
}

struct ExactTransition
{
  std::uint32_t from;
  std::uint32_t to;
  double rate;
};

/// Every nonzero off-diagonal entry of N^2 L_N (or of L_N when `speed_up` is false).
inline std::vector<ExactTransition> exact_transitions(const SimParams& params, bool speed_up = true)
{
  params.validate();
  const std::size_t states = exact_state_count(params);
  const Lattice lat = params.lattice();
  const double scale = speed_up ? static_cast<double>(lat.side()) * lat.side() : 1.0;
  std::vector<ExactTransition> out;
  for (std::uint32_t code = 0; code < states; ++code) {
    const Configuration eta = decode_state(lat, code);
    for (int j = 0; j < lat.dim(); ++j) {
      for (std::size_t x = 0; x < lat.sites(); ++x) {
        const std::size_t y = lat.shift(x, j, 1);
        if (eta[x] == eta[y]) continue;
        const double xi = conductance(params.profile.axis(j), lat.side(), lat.coord(x, j));
        const double r = scale * jump_rate(eta, x, j, params.a, xi);
        const std::uint32_t to = code ^ ((1u << x) | (1u << y));
        out.push_back({code, to, r});
      }
    }
  }
  return out;
}

/// Rate matrix Q of N^2 L_N: Q(eta, eta') = rate, rows sum to zero. For N = 2 both bonds of a
/// pair connect the same two states and their rates add.
inline Eigen::SparseMatrix<double, Eigen::RowMajor> exact_generator_matrix(const SimParams& params,
                                                                            bool speed_up = true)
{
  const std::size_t states = exact_state_count(params);
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> diag(states, 0.0);
  for (const ExactTransition& tr : exact_transitions(params, speed_up)) {
    trip.emplace_back(static_cast<int>(tr.from), static_cast<int>(tr.to), tr.rate);
    diag[tr.from] -= tr.rate;
  }
  for (std::size_t s = 0; s < states; ++s) trip.emplace_back(static_cast<int>(s), static_cast<int>(s), diag[s]);
  Eigen::SparseMatrix<double, Eigen::RowMajor> q(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(states));
  q.setFromTriplets(trip.begin(), trip.end());
  return q;
}

/// nu_alpha as a probability vector over the encoded states.
inline Eigen::VectorXd bernoulli_measure(const SimParams& params, double alpha)
{
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("bernoulli_measure: alpha outside [0, 1]");
  const std::size_t states = exact_state_count(params);
  const std::size_t sites = params.lattice().sites();
  Eigen::VectorXd nu(static_cast<Eigen::Index>(states));
  for (std::size_t code = 0; code < states; ++code) {
    const int k = std::popcount(static_cast<std::uint32_t>(code));
    nu[static_cast<Eigen::Index>(code)] =
      std::pow(alpha, k) * std::pow(1.0 - alpha, static_cast<double>(sites) - k);
  }
  return nu;
}

/// Largest |nu(eta) r(eta, eta') - nu(eta') r(eta', eta)| over all transitions.
inline double detailed_balance_defect(const SimParams& params, double alpha)
{
  const Eigen::VectorXd nu = bernoulli_measure(params, alpha);
  const auto q = exact_generator_matrix(params);
  double worst = 0.0;
  for (Eigen::Index r = 0; r < q.outerSize(); ++r)
    for (decltype(q)::InnerIterator it(q, r); it; ++it) {
      if (it.col() == r) continue;
      const double back = q.coeff(it.col(), r);
      worst = std::max(worst, std::abs(nu[r] * it.value() - nu[it.col()] * back));
    }
  return worst;
}

/// Largest entry of |nu_alpha Q|.
inline double stationarity_defect(const SimParams& params, double alpha)
{
  const Eigen::VectorXd nu = bernoulli_measure(params, alpha);
  const auto q = exact_generator_matrix(params);
  const Eigen::VectorXd flux = q.transpose() * nu;
  return flux.cwiseAbs().maxCoeff();
}

namespace detail
{
inline void check_density(const Eigen::VectorXd& f, const Eigen::VectorXd& nu)
{
  if (f.size() != nu.size()) throw std::invalid_argument("dirichlet_form_exact: density length mismatch");
  if ((f.array() < 0.0).any()) throw std::invalid_argument("dirichlet_form_exact: density must be nonnegative");
  if (std::abs(f.dot(nu) - 1.0) > 1e-9) throw std::invalid_argument("dirichlet_form_exact: density must integrate to 1");
}
}  // namespace detail

/// <-L_N sqrt f, sqrt f>_{nu_alpha} with the unaccelerated generator L_N.
inline double dirichlet_form_exact(const SimParams& params, const Eigen::VectorXd& f, double alpha)
{
  const Eigen::VectorXd nu = bernoulli_measure(params, alpha);
  detail::check_density(f, nu);
  const Eigen::VectorXd root = f.cwiseSqrt();
  const auto l = exact_generator_matrix(params, false);
  const Eigen::VectorXd lroot = l * root;
  return -(nu.array() * lroot.array() * root.array()).sum();
}

/// sum_j sum_x (1/2) xi int c {sqrt f(sigma eta) - sqrt f(eta)}^2 d nu_alpha.
inline double dirichlet_form_bond_sum(const SimParams& params, const Eigen::VectorXd& f, double alpha)
{
  const Eigen::VectorXd nu = bernoulli_measure(params, alpha);
  detail::check_density(f, nu);
  double acc = 0.0;
  for (const ExactTransition& tr : exact_transitions(params, false)) {
    const double diff = std::sqrt(f[tr.to]) - std::sqrt(f[tr.from]);
    acc += 0.5 * nu[tr.from] * tr.rate * diff * diff;
  }
  return acc;
}

/// Law at time t, p0 exp(t Q), by scaling and squaring of a Taylor series.
inline Eigen::VectorXd evolve_law(const Eigen::MatrixXd& q, const Eigen::VectorXd& p0, double t)
{
  const Eigen::MatrixXd a = t * q;
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::MatrixXd scaled = a / std::ldexp(1.0, squarings);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(q.rows(), q.cols());
  Eigen::MatrixXd e = term;
  for (int k = 1; k <= 30; ++k) {
    term = term * scaled / static_cast<double>(k);
    e += term;
  }
  for (int s = 0; s < squarings; ++s) e = e * e;
  return e.transpose() * p0;
}

}  // namespace hydroscale

#endif  // HYDROSCALE_EXACT_HPP
