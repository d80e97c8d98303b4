#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "hydroscale/experiments.hpp"
#include "hydroscale/hydro.hpp"

using namespace hydroscale;

namespace
{

ConductanceFunction membrane() { return ConductanceFunction(1.0, {{0.5, 1.0}}); }

Field profile_field(const Lattice& lat, double base, double amp)
{
  return Field::sample(lat, [&](const std::vector<double>& u) {
    return base + amp * std::cos(2.0 * std::numbers::pi * u[0]);
  });
}

}  // namespace

TEST(Phi, QuadraticExamples)
{
  const PhiFunction phi = PhiFunction::quadratic(0.2);
  EXPECT_NEAR(phi(0.5), 0.55, 1e-15);
  EXPECT_DOUBLE_EQ(phi(0.0), 0.0);
  EXPECT_NEAR(phi(1.0), 1.2, 1e-15);
  EXPECT_NEAR(phi.derivative(0.5), 1.2, 1e-15);
  EXPECT_NEAR(phi_eval(phi, 0.25), 0.25 + 0.2 / 16, 1e-15);
  EXPECT_DOUBLE_EQ(PhiFunction()(0.3), 0.3);
  EXPECT_THROW(phi(1.1), std::invalid_argument);
  EXPECT_THROW(phi_prime(phi, -0.1), std::invalid_argument);
}

TEST(Phi, DerivativeMatchesFiniteDifferences)
{
  const PhiFunction phi(std::vector<double>{0.3, -0.2, 0.1});
  for (double x : {0.1, 0.37, 0.5, 0.9}) {
    const double h = 1e-6;
    EXPECT_NEAR(phi.derivative(x), (phi(x + h) - phi(x - h)) / (2 * h), 1e-8);
  }
}

TEST(Phi, DerivativeBounds)
{
  const PhiFunction phi(std::vector<double>{-0.4, 0.1});
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int i = 0; i <= 10000; ++i) {
    lo = std::min(lo, phi.prime(i / 1e4));
    hi = std::max(hi, phi.prime(i / 1e4));
  }
  EXPECT_LE(phi.min_derivative_bound(), lo);
  EXPECT_GT(phi.min_derivative_bound(), lo - 1e-3);
  EXPECT_GE(phi.max_derivative(), hi);
}

TEST(Phi, RejectsNonIncreasing)
{
  EXPECT_THROW(PhiFunction::quadratic(-0.6), std::invalid_argument);
  EXPECT_THROW(PhiFunction::quadratic(-0.5), std::invalid_argument);
  EXPECT_NO_THROW(PhiFunction::quadratic(-0.49));
  EXPECT_THROW(PhiFunction(std::vector<double>{0.0, -2.0}), std::invalid_argument);
  EXPECT_THROW(PhiFunction(std::vector<double>{std::nan("")}), std::invalid_argument);
}

TEST(Rhs, ConstantsAndLinearCase)
{
  const GeneratorND gen = build_generator(ConductanceProfile::uniform(2, membrane()), 8);
  EXPECT_LT(sup_norm(rhs(gen, PhiFunction::quadratic(0.3), Field(gen.lattice, 0.4))), 1e-10);
  const Field rho = Field::sample(gen.lattice, [](const std::vector<double>& u) { return 0.2 + 0.5 * u[0] * u[1]; });
  EXPECT_LT(sup_norm(rhs(gen, PhiFunction(), rho) - apply_generator(gen, rho)), 1e-12);
  EXPECT_LT(std::abs(mean(rhs(gen, PhiFunction::quadratic(0.4), rho))), 1e-10);
}

TEST(Solve, ConstantStaysConstant)
{
  const GeneratorND gen = build_generator(ConductanceProfile({membrane()}), 32);
  const PdeSolution sol = solve(gen, PhiFunction::quadratic(0.3), Field(gen.lattice, 0.6), 0.1, {0.0, 0.05, 0.1});
  ASSERT_EQ(sol.fields.size(), 3u);
  for (const Field& f : sol.fields)
    for (double v : f.values) EXPECT_NEAR(v, 0.6, 1e-12);
  EXPECT_EQ(sol.times.back(), 0.1);
}

TEST(Solve, LinearCaseMatchesSpectralHeat)
{
  for (TimeScheme scheme : {TimeScheme::ssp_rk3}) {
    const ConductanceProfile profile({membrane()});
    PdeOptions opts;
    opts.scheme = scheme;
    const LinearExactness r =
      pde_linear_exactness(profile, 128, FunctionSpec::cosine(0.5, 0.3), 0.05, opts);
    EXPECT_LE(r.linf, 1e-6);
    EXPECT_LE(r.mass_drift, 1e-12);
  }
  const GeneratorND gen = build_generator(ConductanceProfile::uniform(2, membrane()), 16);
  const SpectralGenerator sg(gen);
  const Field g = Field::sample(gen.lattice, [](const std::vector<double>& u) {
    return 0.5 + 0.2 * std::cos(2.0 * std::numbers::pi * u[0]) * std::sin(2.0 * std::numbers::pi * u[1]);
  });
  PdeOptions fine;
  fine.dt = cfl_limit(gen, PhiFunction()) / 4;
  const PdeSolution sol = solve(gen, PhiFunction(), g, 0.01, {0.01}, fine);
  EXPECT_LT(sup_norm(sol.fields.back() - heat_solution(sg, g, 0.01)), 1e-6);
}

TEST(Solve, EulerIsFirstOrder)
{
  const GeneratorND gen = build_generator(ConductanceProfile({membrane()}), 32);
  const SpectralGenerator sg(gen);
  const Field g = profile_field(gen.lattice, 0.5, 0.3);
  const Field exact = heat_solution(sg, g, 0.02);
  PdeOptions opts;
  opts.scheme = TimeScheme::euler;
  const double dt = cfl_limit(gen, PhiFunction());
  opts.dt = dt / 2;
  const double e1 = sup_norm(solve(gen, PhiFunction(), g, 0.02, {0.02}, opts).fields.back() - exact);
  opts.dt = dt / 4;
  const double e2 = sup_norm(solve(gen, PhiFunction(), g, 0.02, {0.02}, opts).fields.back() - exact);
  EXPECT_NEAR(e1 / e2, 2.0, 0.3);
}

TEST(Solve, MassAndRange)
{
  const GeneratorND gen = build_generator(ConductanceProfile::uniform(2, membrane()), 16);
  const Field g = Field::sample(gen.lattice, [](const std::vector<double>& u) {
    return 0.5 + 0.45 * std::sin(2.0 * std::numbers::pi * u[0]) * std::cos(2.0 * std::numbers::pi * u[1]);
  });
  const PdeSolution sol = solve(gen, PhiFunction::quadratic(-0.3), g, 0.05, uniform_times(0.05, 10));
  EXPECT_LE(mass_drift(sol), 1e-12);
  const auto [lo, hi] = solution_range(sol);
  EXPECT_GE(lo, *std::min_element(g.values.begin(), g.values.end()) - 1e-12);
  EXPECT_LE(hi, *std::max_element(g.values.begin(), g.values.end()) + 1e-12);
}

TEST(Solve, ComparisonPrinciple)
{
  const GeneratorND gen = build_generator(ConductanceProfile({membrane()}), 32);
  const PhiFunction phi = PhiFunction::quadratic(0.4);
  const Field lo = profile_field(gen.lattice, 0.4, 0.2);
  Field hi = lo;
  for (std::size_t i = 0; i < hi.size(); i += 3) hi.values[i] += 0.15;
  const PdeSolution a = solve(gen, phi, lo, 0.02, uniform_times(0.02, 4));
  const PdeSolution b = solve(gen, phi, hi, 0.02, uniform_times(0.02, 4));
  for (std::size_t k = 0; k < a.fields.size(); ++k)
    for (std::size_t s = 0; s < lo.size(); ++s) EXPECT_LE(a.fields[k].values[s], b.fields[k].values[s] + 1e-14);
}

TEST(Solve, MembraneJumpAppears)
{
  const GeneratorND gen = build_generator(ConductanceProfile({membrane()}), 128);
  const Field g = Field::sample(gen.lattice, [](const std::vector<double>& u) {
    return 0.5 + 0.3 * std::sin(2.0 * std::numbers::pi * u[0]);
  });
  const PdeSolution sol = solve(gen, PhiFunction::quadratic(0.3), g, 0.05, {0.05});
  const MembraneJump mj = membrane_jump(sol.fields.back(), 0.5);
  EXPECT_EQ(mj.bond, 63);
  EXPECT_GT(mj.ratio, 10.0);
  // A profile symmetric about the membrane gives no flux through it and only a small jump.
  const PdeSolution sym = solve(gen, PhiFunction::quadratic(0.3), profile_field(gen.lattice, 0.5, 0.3), 0.05, {0.05});
  EXPECT_LT(membrane_jump(sym.fields.back(), 0.5).jump, mj.jump);
}

TEST(Solve, Errors)
{
  const GeneratorND gen = build_generator(ConductanceProfile(), 16);
  const Field g(gen.lattice, 0.5);
  PdeOptions opts;
  opts.dt = 2.0 * cfl_limit(gen, PhiFunction());
  EXPECT_THROW(solve(gen, PhiFunction(), g, 0.1, {0.1}, opts), std::invalid_argument);
  opts.dt = -1.0;
  EXPECT_THROW(solve(gen, PhiFunction(), g, 0.1, {0.1}, opts), std::invalid_argument);
  EXPECT_THROW(solve(gen, PhiFunction(), Field(gen.lattice, 1.5), 0.1, {0.1}), std::invalid_argument);
  EXPECT_THROW(solve(gen, PhiFunction(), g, 0.1, {0.2}), std::invalid_argument);
  EXPECT_THROW(solve(gen, PhiFunction(), g, 0.1, {0.1, 0.05}), std::invalid_argument);
  EXPECT_THROW(solve(gen, PhiFunction(), Field(Lattice(1, 8), 0.5), 0.1, {0.1}), std::invalid_argument);
  Field bad = g;
  bad.values[3] = std::nan("");
  EXPECT_THROW(solve(gen, PhiFunction(), bad, 0.1, {0.1}), std::invalid_argument);
}

TEST(Solve, CflLimit)
{
  const GeneratorND gen = build_generator(ConductanceProfile::uniform(2, membrane()), 16);
  const PhiFunction phi = PhiFunction::quadratic(0.5);
  EXPECT_NEAR(cfl_limit(gen, phi), 0.9 / (2 * 2 * 256 * 1.0 * 2.0), 1e-3 * cfl_limit(gen, phi));
}

TEST(TimeSchemeNames, RoundTrip)
{
  EXPECT_EQ(parse_time_scheme(to_string(TimeScheme::euler)), TimeScheme::euler);
  EXPECT_EQ(parse_time_scheme(to_string(TimeScheme::ssp_rk3)), TimeScheme::ssp_rk3);
  EXPECT_THROW(parse_time_scheme("rk4"), std::invalid_argument);
  EXPECT_EQ(parse_quadrature("trapezoid"), Quadrature::trapezoid);
  EXPECT_THROW(parse_quadrature("simpson"), std::invalid_argument);
}

TEST(WeakResidual, ConstantSolutionIsExact)
{
  const GeneratorND gen = build_generator(ConductanceProfile({membrane()}), 32);
  const SpectralGenerator sg(gen);
  const PhiFunction phi = PhiFunction::quadratic(0.3);
  const PdeSolution sol = solve(gen, phi, Field(gen.lattice, 0.3), 0.1, uniform_times(0.1, 8));
  const Field h = profile_field(gen.lattice, 0.0, 1.0);
  EXPECT_LT(weak_residual(sol, sg, phi, h, 1.0), 1e-13);
  EXPECT_THROW(weak_residual(sol, sg, phi, h, 0.0), std::invalid_argument);
}

TEST(WeakResidual, SmallAndFirstOrderInStoredSpacing)
{
  const ConductanceProfile profile({membrane()});
  const WeakResidualStudy study =
    weak_residual_study(profile, 64, PhiFunction::quadratic(0.3), FunctionSpec::sine(0.5, 0.3),
                        FunctionSpec::cosine(0.0, 1.0), 0.05, {64, 128}, {0.1, 1.0, 10.0});
  for (std::size_t i = 0; i < study.lambdas.size(); ++i) {
    EXPECT_LE(study.residuals[0][i], 1e-4 * study.h_sup) << "lambda " << study.lambdas[i];
    const double ratio = study.residuals[1][i] / study.residuals[0][i];
    EXPECT_NEAR(ratio, 0.5, 0.1) << "lambda " << study.lambdas[i];
  }
}

TEST(WeakResidual, TrapezoidIsSecondOrder)
{
  const ConductanceProfile profile({membrane()});
  const WeakResidualStudy study =
    weak_residual_study(profile, 64, PhiFunction::quadratic(0.3), FunctionSpec::sine(0.5, 0.3),
                        FunctionSpec::cosine(0.0, 1.0), 0.05, {64, 128}, {1.0}, Quadrature::trapezoid);
  EXPECT_LT(study.residuals[1][0] / study.residuals[0][0], 0.3);
}
