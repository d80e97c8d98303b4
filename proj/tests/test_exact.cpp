#include <cmath>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "hydroscale/exact.hpp"

using namespace hydroscale;

namespace
{

SimParams small(int n, double a, const ConductanceFunction& w, int dim = 1)
{
  SimParams p;
  p.n = n;
  p.dim = dim;
  p.a = a;
  p.profile = ConductanceProfile::uniform(dim, w);
  p.horizon = 1.0;
  p.oracle_mode = true;
  return p;
}

ConductanceFunction membrane() { return ConductanceFunction(1.0, {{0.5, 1.0}}); }

Eigen::VectorXd random_density(const Eigen::VectorXd& nu, std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> u(0.05, 2.0);
  Eigen::VectorXd f(nu.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = u(rng);
  return f / f.dot(nu);
}

}  // namespace

TEST(StateCoding, RoundTrip)
{
  const Lattice lat(1, 5);
  for (std::uint32_t code = 0; code < 32; ++code) EXPECT_EQ(encode_state(decode_state(lat, code)), code);
  const Configuration eta = decode_state(lat, 0b00101);
  EXPECT_EQ(eta[0], 1);
  EXPECT_EQ(eta[1], 0);
  EXPECT_EQ(eta[2], 1);
}

TEST(ExactGenerator, StateCountLimit)
{
  EXPECT_EQ(exact_state_count(small(4, 0.0, membrane())), 16u);
  EXPECT_EQ(exact_state_count(small(4, 0.0, membrane(), 2)), 65536u);
  EXPECT_THROW(exact_state_count(small(17, 0.0, membrane())), std::invalid_argument);
}

TEST(ExactGenerator, TwoSiteRatesAdd)
{
  // N = 2: both bonds swap the same pair; each has xi = 1 / (2 W-mass of its cell).
  const SimParams p = small(2, 0.3, ConductanceFunction::identity());
  const Eigen::MatrixXd q(exact_generator_matrix(p));
  ASSERT_EQ(q.rows(), 4);
  // From 01 the neighbours of each bond are the pair itself, so c = 1 + a (eta(x-1) + eta(x+2)) = 1 + a.
  const double per_bond = 4.0 * 1.0 * (1.0 + 0.3);
  EXPECT_NEAR(q(1, 2), 2.0 * per_bond, 1e-12);
  EXPECT_NEAR(q(2, 1), 2.0 * per_bond, 1e-12);
  EXPECT_EQ(q(0, 0), 0.0);
  EXPECT_EQ(q(3, 3), 0.0);
  EXPECT_LT(q.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ExactGenerator, RowsSumToZeroAndParticlesConserved)
{
  const SimParams p = small(4, 0.6, membrane());
  const Eigen::MatrixXd q(exact_generator_matrix(p));
  EXPECT_LT(q.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j)
      if (i != j && q(i, j) != 0.0) {
        EXPECT_GT(q(i, j), 0.0);
        EXPECT_EQ(std::popcount(static_cast<unsigned>(i)), std::popcount(static_cast<unsigned>(j)));
      }
}

TEST(ExactGenerator, BernoulliMeasureIsReversible)
{
  for (double a : {-0.4, 0.0, 0.3, 2.0})
    for (double alpha : {0.0, 0.25, 0.4, 1.0})
      for (const ConductanceFunction& w :
           {ConductanceFunction::identity(), membrane(), ConductanceFunction(0.5, {{0.0, 0.2}, {0.7, 3.0}})}) {
        const SimParams p = small(4, a, w);
        EXPECT_LE(detailed_balance_defect(p, alpha), 1e-12) << a << ' ' << alpha;
        EXPECT_LE(stationarity_defect(p, alpha), 1e-12) << a << ' ' << alpha;
      }
  EXPECT_LE(stationarity_defect(small(3, 0.3, membrane(), 2), 0.4), 1e-12);
  EXPECT_LE(detailed_balance_defect(small(3, 0.3, membrane(), 2), 0.4), 1e-12);
}

TEST(ExactGenerator, BernoulliMeasureIsNormalized)
{
  const Eigen::VectorXd nu = bernoulli_measure(small(4, 0.0, membrane()), 0.3);
  EXPECT_NEAR(nu.sum(), 1.0, 1e-14);
  EXPECT_NEAR(nu(0), std::pow(0.7, 4), 1e-15);
  EXPECT_THROW(bernoulli_measure(small(4, 0.0, membrane()), 1.2), std::invalid_argument);
}

TEST(DirichletFormExact, TwoFormulasAgree)
{
  std::mt19937_64 rng(31);
  for (double a : {-0.3, 0.0, 0.8})
    for (double alpha : {0.2, 0.5}) {
      const SimParams p = small(4, a, membrane());
      const Eigen::VectorXd nu = bernoulli_measure(p, alpha);
      for (int trial = 0; trial < 5; ++trial) {
        const Eigen::VectorXd f = random_density(nu, rng);
        const double d1 = dirichlet_form_exact(p, f, alpha);
        const double d2 = dirichlet_form_bond_sum(p, f, alpha);
        EXPECT_GE(d1, -1e-15);
        EXPECT_NEAR(d1, d2, 1e-12 * std::max(1.0, d1));
      }
      const Eigen::VectorXd one = Eigen::VectorXd::Ones(nu.size());
      EXPECT_NEAR(dirichlet_form_exact(p, one, alpha), 0.0, 1e-14);
      EXPECT_EQ(dirichlet_form_bond_sum(p, one, alpha), 0.0);
    }
}

TEST(DirichletFormExact, RejectsNonDensity)
{
  const SimParams p = small(4, 0.0, membrane());
  const Eigen::VectorXd nu = bernoulli_measure(p, 0.5);
  EXPECT_THROW(dirichlet_form_exact(p, 2.0 * Eigen::VectorXd::Ones(16), 0.5), std::invalid_argument);
  Eigen::VectorXd neg = Eigen::VectorXd::Ones(16);
  neg(0) = -1.0;
  EXPECT_THROW(dirichlet_form_bond_sum(p, neg, 0.5), std::invalid_argument);
  EXPECT_THROW(dirichlet_form_exact(p, Eigen::VectorXd::Ones(8), 0.5), std::invalid_argument);
}

TEST(EvolveLaw, MatchesMatrixExponential)
{
  const SimParams p = small(4, 0.3, membrane());
  const Eigen::MatrixXd q(exact_generator_matrix(p));
  Eigen::VectorXd p0 = Eigen::VectorXd::Zero(16);
  p0(0b0011) = 0.5;
  p0(0b0101) = 0.5;
  for (double t : {0.0, 0.001, 0.1, 1.0}) {
    const Eigen::VectorXd oracle = (t * q).exp().transpose() * p0;
    const Eigen::VectorXd pt = evolve_law(q, p0, t);
    EXPECT_LT((oracle - pt).cwiseAbs().maxCoeff(), 1e-12) << "t = " << t;
    EXPECT_NEAR(pt.sum(), 1.0, 1e-12);
  }
}

TEST(EvolveLaw, ConvergesToUniformOnSector)
{
  const SimParams p = small(4, 0.3, membrane());
  const Eigen::MatrixXd q(exact_generator_matrix(p));
  Eigen::VectorXd p0 = Eigen::VectorXd::Zero(16);
  p0(0b0001) = 1.0;
  const Eigen::VectorXd pt = evolve_law(q, p0, 50.0);
  for (int s : {0b0001, 0b0010, 0b0100, 0b1000}) EXPECT_NEAR(pt(s), 0.25, 1e-9);
}
