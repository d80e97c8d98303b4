#ifndef HYDROSCALE_EXPERIMENTS_HPP
#define HYDROSCALE_EXPERIMENTS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "conductance.hpp"
#include "diagnostics.hpp"
#include "energy.hpp"
#include "ensemble.hpp"
#include "exact.hpp"
#include "exclusion.hpp"
#include "generator.hpp"
#include "hydro.hpp"
#include "lattice.hpp"
#include "random.hpp"

namespace hydroscale
{

struct Check
{
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
};

struct CheckList
{
  std::vector<Check> checks;

  void add(std::string name, bool passed, double value, double threshold)
  {
    checks.push_back({std::move(name), passed, value, threshold});
  }

  /// Records value <= threshold.
  void at_most(std::string name, double value, double threshold)
  {
    add(std::move(name), value <= threshold, value, threshold);
  }

  bool all_passed() const
  {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }
};

/**
 * Named analytic function of u in T^d:
 *   constant   value
 *   cosine     base + amplitude cos(2 pi frequency u_axis)
 *   sine       base + amplitude sin(2 pi frequency u_axis)
 *   step       low on [0, at), high on [at, 1) along axis
 */
struct FunctionSpec
{
  std::string kind = "constant";
  double value = 0.5;
  double base = 0.0;
  double amplitude = 1.0;
  int frequency = 1;
  int axis = 0;
  double low = 0.0;
  double high = 1.0;
  double at = 0.5;

  static FunctionSpec constant(double v)
  {
    FunctionSpec f;
    f.kind = "constant";
    f.value = v;
    return f;
  }

  static FunctionSpec cosine(double base, double amplitude, int frequency = 1, int axis = 0)
  {
    FunctionSpec f;
    f.kind = "cosine";
    f.base = base;
    f.amplitude = amplitude;
    f.frequency = frequency;
    f.axis = axis;
    return f;
  }

  static FunctionSpec sine(double base, double amplitude, int frequency = 1, int axis = 0)
  {
    FunctionSpec f = cosine(base, amplitude, frequency, axis);
    f.kind = "sine";
    return f;
  }

  static FunctionSpec step(double low, double high, double at, int axis = 0)
  {
    FunctionSpec f;
    f.kind = "step";
    f.low = low;
    f.high = high;
    f.at = at;
    f.axis = axis;
    return f;
  }

  void validate(int dim) const
  {
    if (kind != "constant" && kind != "cosine" && kind != "sine" && kind != "step")
      throw std::invalid_argument("function spec: unknown kind '" + kind + "'");
    if (kind != "constant" && (axis < 0 || axis >= dim)) throw std::invalid_argument("function spec: axis out of range");
  }

  double operator()(const std::vector<double>& u) const
  {
    if (kind == "constant") return value;
    const double x = u.at(static_cast<std::size_t>(axis));
    if (kind == "cosine") return base + amplitude * std::cos(2.0 * std::numbers::pi * frequency * x);
    if (kind == "sine") return base + amplitude * std::sin(2.0 * std::numbers::pi * frequency * x);
    if (kind == "step") return x < at ? low : high;
    throw std::invalid_argument("function spec: unknown kind '" + kind + "'");
  }

  Field sample(const Lattice& lat) const
  {
    validate(lat.dim());
    return Field::sample(lat, *this);
  }
};

/// Independent uniform entries on [lo, hi).
inline Field random_field(const Lattice& lat, RandomStream& rng, double lo = -1.0, double hi = 1.0)
{
  Field f(lat);
  for (double& v : f.values) v = lo + (hi - lo) * rng.uniform();
  return f;
}

/// Dense matrix of L_N over all N^d sites.
inline Eigen::MatrixXd dense_generator(const GeneratorND& gen)
{
  const std::size_t n = gen.lattice.sites();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t y = 0; y < n; ++y) {
    Field e(gen.lattice);
    e.values[y] = 1.0;
    const Field col = apply_generator(gen, e);
    for (std::size_t x = 0; x < n; ++x) m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = col.values[x];
  }
  return m;
}

/// max_k |a_k - b_k| / max(|b_k|, 1) over two sorted lists of equal length.
inline double sorted_relative_gap(std::vector<double> a, std::vector<double> b)
{
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]) / std::max(std::abs(b[k]), 1.0));
  return worst;
}

struct SpectrumReport
{
  std::vector<double> eigenvalues;
  CheckList checks;
};

/// Every generator-level property on one profile and grid size.
inline SpectrumReport spectrum_report(const ConductanceProfile& profile, int n, std::uint64_t seed, int trials = 100)
{
  SpectrumReport rep;
  const GeneratorND gen = build_generator(profile, n);
  const SpectralGenerator spectral(gen);
  const Lattice& lat = gen.lattice;
  rep.eigenvalues = spectral.eigenvalues();

  bool smooth = true;
  for (const auto& w : profile.per_axis) smooth = smooth && w.atoms().empty();
  if (smooth) {
    std::vector<double> expected{0.0};
    for (int j = 0; j < profile.dim; ++j) {
      std::vector<double> next;
      for (double v : expected)
        for (int k = 0; k < n; ++k) {
          const double s = std::sin(std::numbers::pi * k / n);
          next.push_back(v + 4.0 * n * n * s * s / profile.axis(j).slope());
        }
      expected.swap(next);
    }
    rep.checks.at_most("closed_form_eigenvalues", sorted_relative_gap(rep.eigenvalues, expected), 1e-8);
  }

  if (lat.sites() <= 1024) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(-dense_generator(gen), Eigen::EigenvaluesOnly);
    std::vector<double> full(solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size());
    rep.checks.at_most("kronecker_eigen_sum", sorted_relative_gap(full, rep.eigenvalues), 1e-8);
  }

  const Field ones(lat, 1.0);
  rep.checks.at_most("zero_row_sums", sup_norm(apply_generator(gen, ones)) / (4.0 * n * n * gen.max_conductance()), 1e-12);

  RandomStream rng(seed, 0);
  double ortho = 0.0;
  double recon = 0.0;
  double ground = 0.0;
  for (int j = 0; j < lat.dim(); ++j) {
    const SpectralDecomposition1D& sp = spectral.spectrum(j);
    const Eigen::MatrixXd gram = sp.eigenvectors.transpose() * sp.eigenvectors / static_cast<double>(n);
    ortho = std::max(ortho, (gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff());
    const double top = sp.eigenvalues.back();
    ground = std::max(ground, std::abs(sp.eigenvalues.front()) / std::max(top, 1.0));
    ground = std::max(ground, (sp.eigenvectors.col(0).cwiseAbs().array() - 1.0).abs().maxCoeff());
    const Eigen::MatrixXd dense = gen.axis(j).dense();
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::VectorXd f(n);
      for (int x = 0; x < n; ++x) f(x) = 2.0 * rng.uniform() - 1.0;
      const Eigen::VectorXd coeff = sp.eigenvectors.transpose() * f / static_cast<double>(n);
      Eigen::VectorXd synth = Eigen::VectorXd::Zero(n);
      for (int k = 0; k < n; ++k) synth -= sp.eigenvalues[static_cast<std::size_t>(k)] * coeff(k) * sp.eigenvectors.col(k);
      const Eigen::VectorXd lf = dense * f;
      recon = std::max(recon, (lf - synth).norm() / (f.norm() * std::max(top, 1.0)));
    }
  }
  rep.checks.at_most("eigenvector_orthonormality", ortho, 1e-10);
  rep.checks.at_most("spectral_reconstruction", recon, 1e-8);
  rep.checks.at_most("ground_state", ground, 1e-8);

  double sym = 0.0;
  double nonpos = 0.0;
  double dissip = 0.0;
  double bij = 0.0;
  double l2_bound = 0.0;
  double dir_bound = 0.0;
  const double lambdas[] = {0.5, 1.0, 10.0};
  for (int trial = 0; trial < trials; ++trial) {
    const Field f = random_field(lat, rng);
    const Field g = random_field(lat, rng);
    const Field lf = apply_generator(gen, f);
    const Field lg = apply_generator(gen, g);
    sym = std::max(sym, std::abs(mean_product(lf, g) - mean_product(f, lg)) / (l2_norm(f) * l2_norm(g)));
    nonpos = std::max(nonpos, mean_product(lf, f) / mean_product(f, f));
    for (double lam : lambdas) {
      const Field image = lam * g - lg;
      dissip = std::max(dissip, l2_norm(lam * g) / l2_norm(image) - 1.0);
      const Field u = spectral.resolvent_solve(lam, f);
      const double h2 = mean_product(f, f);
      l2_bound = std::max(l2_bound, mean_product(u, u) / (h2 / (lam * lam)) - 1.0);
      dir_bound = std::max(dir_bound, dirichlet_form(gen, u, u) / (h2 / lam) - 1.0);
    }
    const Field u = spectral.resolvent_solve(1.0, f);
    bij = std::max(bij, sup_norm(u - apply_generator(gen, u) - f) / sup_norm(f));
  }
  rep.checks.at_most("symmetry", sym, 1e-10);
  rep.checks.at_most("non_positivity", nonpos, 1e-12);
  rep.checks.at_most("dissipativity", dissip, 1e-10);
  rep.checks.at_most("identity_minus_generator_bijective", bij, 1e-9);
  rep.checks.at_most("resolvent_l2_bound", l2_bound, 1e-10);
  rep.checks.at_most("resolvent_dirichlet_bound", dir_bound, 1e-10);
  return rep;
}

/// Kernel symmetry, product factorization and the mass identity for P_t^N.
inline CheckList semigroup_report(const ConductanceProfile& profile, int n, double t, std::uint64_t seed, int trials = 20)
{
  CheckList out;
  const GeneratorND gen = build_generator(profile, n);
  const SpectralGenerator spectral(gen);
  const Lattice& lat = gen.lattice;
  const Eigen::MatrixXd k = spectral.semigroup_kernel(t);
  out.at_most("kernel_symmetry", (k - k.transpose()).cwiseAbs().maxCoeff(), 1e-10);

  std::vector<Eigen::MatrixXd> axis_kernels;
  for (int j = 0; j < lat.dim(); ++j) axis_kernels.push_back(spectral.axis_semigroup(j, t));
  double fact = 0.0;
  for (std::size_t x = 0; x < lat.sites(); ++x)
    for (std::size_t y = 0; y < lat.sites(); ++y) {
      double prod = 1.0;
      for (int j = 0; j < lat.dim(); ++j)
        prod *= axis_kernels[static_cast<std::size_t>(j)](lat.coord(x, j), lat.coord(y, j));
      fact = std::max(fact, std::abs(prod - k(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y))));
    }
  out.at_most("kernel_factorization", fact, 1e-10);

  RandomStream rng(seed, 1);
  double mass = 0.0;
  double identity = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const Field h = random_field(lat, rng, 0.0, 1.0);
    mass = std::max(mass, std::abs(mean(spectral.semigroup_apply(t, h)) - mean(h)) / std::abs(mean(h)));
    identity = std::max(identity, sup_norm(spectral.semigroup_apply(0.0, h) - h));
  }
  out.at_most("mass_identity", mass, 1e-10);
  out.at_most("time_zero_identity", identity, 0.0);
  const Field c(lat, 0.7);
  out.at_most("constants_preserved", sup_norm(spectral.semigroup_apply(t, c) - c), 1e-10);
  return out;
}

struct ContinuumProxy
{
  std::vector<int> ns;
  std::vector<double> l1;
  int n_ref = 0;

  bool decreasing() const
  {
    for (std::size_t k = 1; k < l1.size(); ++k)
      if (!(l1[k] < l1[k - 1])) return false;
    return true;
  }
};

/// L1 distance between the extension of P_t^N H and P_t^{N_ref} H on the reference grid.
inline ContinuumProxy continuum_proxy(const ConductanceProfile& profile, const std::vector<int>& ns, int n_ref, double t,
                                      const FunctionSpec& h)
{
  ContinuumProxy out;
  out.ns = ns;
  out.n_ref = n_ref;
  const SpectralGenerator ref(build_generator(profile, n_ref));
  const Field reference = ref.semigroup_apply(t, h.sample(ref.generator().lattice));
  for (int n : ns) {
    const SpectralGenerator sg(build_generator(profile, n));
    const Field coarse = sg.semigroup_apply(t, h.sample(sg.generator().lattice));
    out.l1.push_back(l1_distance_to_reference(coarse, reference));
  }
  return out;
}

struct LinearExactness
{
  double linf = 0.0;
  double mass_drift = 0.0;
  double min_value = 0.0;
  double max_value = 0.0;
};

/// a = 0 solver output against the spectral heat solution at time t.
inline LinearExactness pde_linear_exactness(const ConductanceProfile& profile, int n, const FunctionSpec& gamma, double t,
                                            const PdeOptions& opts = {})
{
  const GeneratorND gen = build_generator(profile, n);
  const SpectralGenerator spectral(gen);
  const Field g = gamma.sample(gen.lattice);
  const PdeSolution sol = solve(gen, PhiFunction(), g, t, {0.0, t}, opts);
  const Field exact = heat_solution(spectral, g, t);
  LinearExactness out;
  out.linf = sup_norm(sol.fields.back() - exact);
  out.mass_drift = mass_drift(sol);
  out.min_value = *std::min_element(sol.fields.back().values.begin(), sol.fields.back().values.end());
  out.max_value = *std::max_element(sol.fields.back().values.begin(), sol.fields.back().values.end());
  return out;
}

/// Smallest and largest value over every stored field.
inline std::pair<double, double> solution_range(const PdeSolution& sol)
{
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const Field& f : sol.fields)
    for (double v : f.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  return {lo, hi};
}

struct MembraneJump
{
  int bond = 0;  // the membrane sits on bond {bond, bond + 1}
  double jump = 0.0;
  double adjacent = 0.0;
  double ratio = 0.0;
};

/// Index x of the bond cell (x/N, (x+1)/N] holding the point u.
inline int bond_cell(double u, int n)
{
  const int x = static_cast<int>(std::ceil(u * n - 1e-12)) - 1;
  return ((x % n) + n) % n;
}

/// Jump of rho across the membrane bond along axis 0 (fiber through the origin), against the two neighbouring increments.
inline MembraneJump membrane_jump(const Field& rho, double location)
{
  const Lattice& lat = rho.lattice;
  const int n = lat.side();
  const int x = bond_cell(location, n);
  const std::size_t st = lat.stride(0);
  auto at = [&](int k) { return rho.values[static_cast<std::size_t>(((k % n) + n) % n) * st]; };
  MembraneJump out;
  out.bond = x;
  out.jump = std::abs(at(x + 1) - at(x));
  out.adjacent = std::max(std::abs(at(x) - at(x - 1)), std::abs(at(x + 2) - at(x + 1)));
  out.ratio = out.adjacent > 0.0 ? out.jump / out.adjacent : std::numeric_limits<double>::infinity();
  return out;
}

struct WeakResidualStudy
{
  std::vector<int> stored_counts;
  std::vector<double> lambdas;
  std::vector<std::vector<double>> residuals;  // [count][lambda]
  double h_sup = 0.0;
  double mass_drift = 0.0;
  double min_value = 0.0;
  double max_value = 0.0;
};

inline WeakResidualStudy weak_residual_study(const ConductanceProfile& profile, int n, const PhiFunction& phi,
                                             const FunctionSpec& gamma, const FunctionSpec& h, double t,
                                             const std::vector<int>& stored_counts, const std::vector<double>& lambdas,
                                             Quadrature rule = Quadrature::left, const PdeOptions& opts = {})
{
  const GeneratorND gen = build_generator(profile, n);
  const SpectralGenerator spectral(gen);
  const Field g = gamma.sample(gen.lattice);
  const Field hf = h.sample(gen.lattice);
  WeakResidualStudy out;
  out.stored_counts = stored_counts;
  out.lambdas = lambdas;
  out.h_sup = sup_norm(hf);
  out.min_value = std::numeric_limits<double>::infinity();
  out.max_value = -std::numeric_limits<double>::infinity();
  for (int count : stored_counts) {
    const PdeSolution sol = solve(gen, phi, g, t, uniform_times(t, count), opts);
    out.mass_drift = std::max(out.mass_drift, mass_drift(sol));
    const auto [lo, hi] = solution_range(sol);
    out.min_value = std::min(out.min_value, lo);
    out.max_value = std::max(out.max_value, hi);
    std::vector<double> row;
    for (double lam : lambdas) row.push_back(weak_residual(sol, spectral, phi, hf, lam, rule));
    out.residuals.push_back(row);
  }
  return out;
}

/// int_0^T || d Phi(rho) / dW_j ||^2 ds for the PDE solution started from gamma.
inline double pde_energy(const ConductanceProfile& profile, int n, const PhiFunction& phi, const FunctionSpec& gamma,
                         double t, int stored, int axis = 0, const PdeOptions& opts = {})
{
  const GeneratorND gen = build_generator(profile, n);
  const PdeSolution sol = solve(gen, phi, gamma.sample(gen.lattice), t, uniform_times(t, stored), opts);
  return energy_functional(sol, phi, profile, axis);
}

// ---------------------------------------------------------------- particle experiments

struct OracleComparison
{
  std::vector<double> exact;
  std::vector<double> empirical;
  double tv = 0.0;
  std::uint64_t samples = 0;
};

/// Empirical law of eta_t over independent runs against p0 exp(t N^2 L_N), p0 the product law of rho0.
inline OracleComparison oracle_law_comparison(const SimParams& base, const FunctionSpec& rho0, double t,
                                              std::uint64_t samples, unsigned threads)
{
  SimParams params = base;
  params.horizon = t;
  params.observable_times.clear();
  params.validate();
  const Lattice lat = params.lattice();
  const std::size_t states = exact_state_count(params);
  const Field p = rho0.sample(lat);
  Eigen::VectorXd p0(static_cast<Eigen::Index>(states));
  for (std::size_t code = 0; code < states; ++code) {
    double prob = 1.0;
    for (std::size_t s = 0; s < lat.sites(); ++s) prob *= ((code >> s) & 1u) ? p.values[s] : 1.0 - p.values[s];
    p0[static_cast<Eigen::Index>(code)] = prob;
  }
  const Eigen::MatrixXd q = Eigen::MatrixXd(exact_generator_matrix(params));
  const Eigen::VectorXd pt = evolve_law(q, p0, t);

  const auto codes = run_replicates(samples, threads, [&](std::uint64_t r) {
    ExclusionProcess proc(params, sample_bernoulli_field(p, params.seed, r), r);
    proc.run_until(t);
    return encode_state(proc.state());
  });
  OracleComparison out;
  out.samples = samples;
  out.exact.assign(pt.data(), pt.data() + pt.size());
  out.empirical.assign(states, 0.0);
  for (std::uint32_t c : codes) out.empirical[c] += 1.0 / static_cast<double>(samples);
  for (std::size_t s = 0; s < states; ++s) out.tv += 0.5 * std::abs(out.exact[s] - out.empirical[s]);
  return out;
}

struct ConvergenceSetup
{
  int dim = 1;
  double a = 0.0;
  ConductanceProfile profile;
  PhiFunction phi;  // must equal alpha + a alpha^2
  FunctionSpec rho0 = FunctionSpec::constant(0.5);
  std::vector<std::pair<std::string, FunctionSpec>> tests;
  std::vector<double> times;
  std::vector<int> ns;
  std::uint64_t replicates = 200;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  int ref_factor = 4;
  PdeOptions pde;

  void validate() const
  {
    if (!(a > -0.5)) throw std::invalid_argument("converge: interaction a must be > -1/2");
    if (profile.dim != dim) throw std::invalid_argument("converge: profile dimension does not match d");
    if (ns.size() < 2) throw std::invalid_argument("converge: need at least two grid sizes");
    for (std::size_t k = 1; k < ns.size(); ++k)
      if (!(ns[k] > ns[k - 1])) throw std::invalid_argument("converge: grid sizes must be strictly increasing");
    if (ns.front() < 4) throw std::invalid_argument("converge: N must be >= 4");
    if (replicates < 2) throw std::invalid_argument("converge: at least two replicates are needed for a standard error");
    if (tests.empty()) throw std::invalid_argument("converge: no test functions");
    if (times.empty()) throw std::invalid_argument("converge: no observable times");
    for (std::size_t k = 0; k < times.size(); ++k)
      if (!(times[k] > 0.0) || (k > 0 && !(times[k] > times[k - 1])))
        throw std::invalid_argument("converge: observable times must be positive and increasing");
    if (ref_factor < 1) throw std::invalid_argument("converge: reference factor must be >= 1");
    rho0.validate(dim);
    for (const auto& t : tests) t.second.validate(dim);
  }
};

struct ConvergenceRow
{
  int n = 0;
  std::string test;
  double time = 0.0;
  double mean_error = 0.0;
  double std_error = 0.0;
  std::uint64_t replicates = 0;
};

struct ConvergenceReport
{
  std::vector<ConvergenceRow> rows;  // ordered by (N, test, time)
  int n_ref = 0;

  const ConvergenceRow& row(int n, const std::string& test, double time) const
  {
    for (const auto& r : rows)
      if (r.n == n && r.test == test && r.time == time) return r;
    throw std::out_of_range("convergence report: no such row");
  }

  /// Mean error never grows by more than one combined standard error between successive N.
  bool non_increasing(const std::string& test, double time) const
  {
    const ConvergenceRow* prev = nullptr;
    for (const auto& r : rows) {
      if (r.test != test || r.time != time) continue;
      if (prev && r.mean_error - prev->mean_error > std::hypot(r.std_error, prev->std_error)) return false;
      prev = &r;
    }
    return true;
  }
};

/// rho_ref evaluated at the points x/N of a coarser grid (nearest reference site at or below).
inline Field restrict_to_grid(const Field& fine, const Lattice& coarse)
{
  Field out(coarse);
  std::vector<int> c(static_cast<std::size_t>(coarse.dim()));
  const long nf = fine.side();
  const long nc = coarse.side();
  for (std::size_t s = 0; s < coarse.sites(); ++s) {
    for (int j = 0; j < coarse.dim(); ++j)
      c[static_cast<std::size_t>(j)] = static_cast<int>((static_cast<long>(coarse.coord(s, j)) * nf) / nc);
    out.values[s] = fine.values[fine.lattice.index(c)];
  }
  return out;
}

/// Particle pairings <pi_t^N, H> against the reference PDE solution, for each N, H and t.
inline ConvergenceReport run_convergence(const ConvergenceSetup& setup)
{
  setup.validate();
  ConvergenceReport report;
  report.n_ref = setup.ref_factor * setup.ns.back();
  const GeneratorND ref_gen = build_generator(setup.profile, report.n_ref);
  const PdeSolution ref = solve(ref_gen, setup.phi, setup.rho0.sample(ref_gen.lattice), setup.times.back(),
                                setup.times, setup.pde);

  for (int n : setup.ns) {
    SimParams params;
    params.n = n;
    params.dim = setup.dim;
    params.a = setup.a;
    params.profile = setup.profile;
    params.horizon = setup.times.back();
    params.seed = setup.seed;
    params.observable_times = setup.times;
    params.validate();
    const Lattice lat = params.lattice();
    const Field p0 = setup.rho0.sample(lat);
    std::vector<Field> hs;
    for (const auto& t : setup.tests) hs.push_back(t.second.sample(lat));
    std::vector<std::vector<double>> target(setup.tests.size());
    for (std::size_t i = 0; i < hs.size(); ++i)
      for (const Field& rho : ref.fields) target[i].push_back(mean_product(restrict_to_grid(rho, lat), hs[i]));

    // errors[r][i * times + k]
    const auto errors = run_replicates(setup.replicates, setup.threads, [&](std::uint64_t r) {
      ExclusionProcess proc(params, sample_bernoulli_field(p0, params.seed, r), r);
      std::vector<double> e(hs.size() * setup.times.size());
      for (std::size_t k = 0; k < setup.times.size(); ++k) {
        proc.run_until(setup.times[k]);
        for (std::size_t i = 0; i < hs.size(); ++i)
          e[i * setup.times.size() + k] = std::abs(empirical_pairing(proc.state(), hs[i]) - target[i][k]);
      }
      return e;
    });
    for (std::size_t i = 0; i < hs.size(); ++i)
      for (std::size_t k = 0; k < setup.times.size(); ++k) {
        std::vector<double> xs;
        xs.reserve(errors.size());
        for (const auto& e : errors) xs.push_back(e[i * setup.times.size() + k]);
        const SampleStats st = summarize(xs);
        report.rows.push_back({n, setup.tests[i].first, setup.times[k], st.mean, st.std_error, setup.replicates});
      }
  }
  return report;
}

struct MembraneFlux
{
  double membrane_mean = 0.0;  // jumps per membrane bond per replicate
  double smooth_mean = 0.0;    // jumps per other axis-0 bond per replicate
  double ratio = 0.0;
  std::uint64_t replicates = 0;
};

/// Bond jump counts across the axis-0 membrane at `location`, started from nu_density.
inline MembraneFlux membrane_flux(const SimParams& params, double density, double location, std::uint64_t replicates,
                                  unsigned threads)
{
  params.validate();
  const Lattice lat = params.lattice();
  const int cell = bond_cell(location, lat.side());
  const Field p(lat, density);
  const auto counts = run_replicates(replicates, threads, [&](std::uint64_t r) {
    ExclusionProcess proc(params, sample_bernoulli_field(p, params.seed, r), r);
    BondJumpCounter counter(proc.bond_count());
    proc.run_until(params.horizon, counter);
    double membrane = 0.0;
    double smooth = 0.0;
    for (std::size_t x = 0; x < lat.sites(); ++x) {
      const double c = static_cast<double>(counter.counts[proc.bond_id(x, 0)]);
      (lat.coord(x, 0) == cell ? membrane : smooth) += c;
    }
    return std::pair<double, double>{membrane, smooth};
  });
  const double membrane_bonds = static_cast<double>(lat.sites() / static_cast<std::size_t>(lat.side()));
  const double smooth_bonds = static_cast<double>(lat.sites()) - membrane_bonds;
  MembraneFlux out;
  out.replicates = replicates;
  for (const auto& c : counts) {
    out.membrane_mean += c.first / membrane_bonds;
    out.smooth_mean += c.second / smooth_bonds;
  }
  out.membrane_mean /= static_cast<double>(replicates);
  out.smooth_mean /= static_cast<double>(replicates);
  out.ratio = out.smooth_mean > 0.0 ? out.membrane_mean / out.smooth_mean : std::numeric_limits<double>::infinity();
  return out;
}

struct ReplacementStudy
{
  std::vector<double> eps;
  std::vector<SampleStats> gaps;  // time-averaged: replacement_gap / t
};

inline ReplacementStudy replacement_study(const SimParams& base, const FunctionSpec& rho0, const FunctionSpec& f,
                                          const CylinderFunction& g, const std::vector<double>& eps, double t,
                                          int snapshots, std::uint64_t replicates, unsigned threads)
{
  if (!(t > 0.0)) throw std::invalid_argument("replacement study: t must be > 0");
  SimParams params = base;
  params.horizon = t;
  params.observable_times = uniform_times(t, snapshots);
  params.validate();
  const Lattice lat = params.lattice();
  const Field p0 = rho0.sample(lat);
  const Field ff = f.sample(lat);
  const auto per_rep = run_replicates(replicates, threads, [&](std::uint64_t r) {
    const TrajectoryRecord traj = simulate(params, sample_bernoulli_field(p0, params.seed, r), r);
    std::vector<double> gaps;
    for (double e : eps) gaps.push_back(replacement_gap(traj, ff, g, e, t) / t);
    return gaps;
  });
  ReplacementStudy out;
  out.eps = eps;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    std::vector<double> xs;
    for (const auto& v : per_rep) xs.push_back(v[i]);
    out.gaps.push_back(summarize(xs));
  }
  return out;
}

struct MartingaleStudy
{
  std::vector<int> ns;
  std::vector<SampleStats> final_value;  // M_T
  std::vector<SampleStats> sup_abs;      // sup_t |M_t|
  std::vector<double> qv_bound;          // C(H) T / (lambda N^d)
  std::vector<double> mean_qv;           // mean predictable quadratic variation at T
  double slope = 0.0;                    // least-squares slope of log mean sup vs log N
};

inline double log_log_slope(const std::vector<int>& ns, const std::vector<double>& ys)
{
  const std::size_t m = ns.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double x = std::log(static_cast<double>(ns[k]));
    const double y = std::log(ys[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

inline MartingaleStudy martingale_study(const SimParams& base, const FunctionSpec& rho0, const FunctionSpec& h,
                                        double lambda, double horizon, const std::vector<int>& ns,
                                        std::uint64_t replicates, unsigned threads)
{
  MartingaleStudy out;
  out.ns = ns;
  std::vector<double> sups;
  for (int n : ns) {
    SimParams params = base;
    params.n = n;
    params.horizon = horizon;
    params.observable_times = {horizon};
    params.validate();
    const Lattice lat = params.lattice();
    const SpectralGenerator spectral(build_generator(params.profile, n));
    const Field hf = h.sample(lat);
    const Field p0 = rho0.sample(lat);
    const auto paths = run_replicates(replicates, threads, [&](std::uint64_t r) {
      return martingale_residual(params, sample_bernoulli_field(p0, params.seed, r), spectral, hf, lambda, r);
    });
    std::vector<double> finals, sup, qv;
    for (const auto& p : paths) {
      finals.push_back(p.values.back());
      sup.push_back(p.sup_abs);
      qv.push_back(p.predictable_qv.back());
    }
    out.final_value.push_back(summarize(finals));
    out.sup_abs.push_back(summarize(sup));
    out.mean_qv.push_back(summarize(qv).mean);
    out.qv_bound.push_back(martingale_qv_bound(hf, params.a, lambda, horizon));
    sups.push_back(out.sup_abs.back().mean);
  }
  if (ns.size() >= 2) out.slope = log_log_slope(ns, sups);
  return out;
}

/// Time average over [0, t] of W_N^j for one test function, per replicate.
inline SampleStats energy_statistic_study(const SimParams& base, const FunctionSpec& rho0, const FunctionSpec& h,
                                          const PhiFunction& phi, double eps, double delta, int axis, double k1,
                                          double t, int snapshots, std::uint64_t replicates, unsigned threads)
{
  SimParams params = base;
  params.horizon = t;
  params.observable_times = uniform_times(t, snapshots);
  params.validate();
  const Lattice lat = params.lattice();
  const Field p0 = rho0.sample(lat);
  const std::vector<TestFunction> dict{{"h", h.sample(lat)}};
  const auto values = run_replicates(replicates, threads, [&](std::uint64_t r) {
    const TrajectoryRecord traj = simulate(params, sample_bernoulli_field(p0, params.seed, r), r);
    return energy_statistic_sup(traj, dict, eps, delta, axis, k1, params.profile, phi);
  });
  return summarize(values);
}

}  // namespace hydroscale

#endif  // HYDROSCALE_EXPERIMENTS_HPP
