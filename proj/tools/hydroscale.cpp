#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "hydroscale/hydroscale.hpp"
#include "hydroscale/io.hpp"

namespace fs = std::filesystem;
using namespace hydroscale;
using io::get_or;
using io::json;

namespace
{

struct RunContext
{
  json cfg;
  fs::path out;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

std::ofstream open_out(const RunContext& ctx, const std::string& name)
{
  std::ofstream os(ctx.out / name);
  if (!os) throw std::runtime_error("cannot write " + (ctx.out / name).string());
  return os;
}

json checks_json(const CheckList& list)
{
  json arr = json::array();
  for (const auto& c : list.checks) arr.push_back(io::to_json(c));
  return arr;
}

int grid_size(const json& cfg, int fallback)
{
  const int n = get_or(cfg, "N", fallback);
  if (n < 4 && !get_or(cfg, "oracle_mode", false)) throw std::invalid_argument("config: N must be >= 4");
  return n;
}

int dimension(const json& cfg)
{
  const int d = get_or(cfg, "dim", 1);
  if (d < 1) throw std::invalid_argument("config: dim must be >= 1");
  return d;
}

json cmd_spectrum(const RunContext& ctx)
{
  const json& cfg = ctx.cfg;
  const int dim = dimension(cfg);
  const ConductanceProfile profile = io::parse_profile(cfg, dim);
  std::vector<int> ns = cfg.contains("Ns") ? cfg.at("Ns").get<std::vector<int>>() : std::vector<int>{grid_size(cfg, 16)};
  for (int n : ns)
    if (n < 2) throw std::invalid_argument("config: grid sizes must be >= 2");
  const int trials = get_or(cfg, "trials", 100);
  const double t = get_or(cfg, "semigroup_time", 0.01);

  json summary{{"command", "spectrum"}, {"dim", dim}};
  std::vector<std::pair<std::string, Check>> rows;
  bool passed = true;
  json per_n = json::array();
  for (int n : ns) {
    const SpectrumReport rep = spectrum_report(profile, n, ctx.seed, trials);
    auto os = open_out(ctx, "spectrum_N" + std::to_string(n) + ".csv");
    write_spectrum_csv(os, rep.eigenvalues);
    json entry{{"N", n}, {"eigenvalue_count", rep.eigenvalues.size()}, {"checks", checks_json(rep.checks)}};
    passed = passed && rep.checks.all_passed();
    for (const auto& c : rep.checks.checks) rows.emplace_back("generator_N" + std::to_string(n), c);
    if (Lattice(dim, n).sites() <= 4096) {
      const CheckList sg = semigroup_report(profile, n, t, ctx.seed);
      entry["semigroup_checks"] = checks_json(sg);
      passed = passed && sg.all_passed();
      for (const auto& c : sg.checks) rows.emplace_back("semigroup_N" + std::to_string(n), c);
    }
    per_n.push_back(entry);
  }
  summary["grids"] = per_n;

  if (cfg.contains("continuum_proxy")) {
    const json& pc = cfg.at("continuum_proxy");
    if (dim != 1) throw std::invalid_argument("config: continuum_proxy is available for d = 1 only");
    const auto proxy = continuum_proxy(profile, get_or(pc, "Ns", std::vector<int>{8, 16, 32, 64}),
                                       get_or(pc, "N_ref", 512), get_or(pc, "t", 0.01),
                                       pc.contains("H") ? io::parse_function(pc.at("H"), dim) : FunctionSpec::cosine(0, 1));
    summary["continuum_proxy"] = {{"Ns", proxy.ns}, {"N_ref", proxy.n_ref}, {"l1", proxy.l1},
                                  {"decreasing", proxy.decreasing()}};
    passed = passed && proxy.decreasing();
  }
  auto os = open_out(ctx, "checks.csv");
  io::write_checks_csv(os, rows);
  summary["passed"] = passed;
  return summary;
}

SimParams sim_params(const json& cfg, std::uint64_t seed)
{
  SimParams p;
  p.dim = dimension(cfg);
  p.oracle_mode = get_or(cfg, "oracle_mode", false);
  p.n = grid_size(cfg, 16);
  p.a = io::parse_interaction(cfg);
  p.profile = io::parse_profile(cfg, p.dim);
  p.seed = seed;
  return p;
}

json cmd_simulate(const RunContext& ctx)
{
  const json& cfg = ctx.cfg;
  SimParams params = sim_params(cfg, ctx.seed);
  params.horizon = io::require<double>(cfg, "T");
  params.observable_times = io::parse_times(cfg, params.horizon, "observable_times", "snapshots", 10);
  params.validate();
  const std::uint64_t reps = io::parse_replicates(cfg, 1);
  const FunctionSpec rho0 = cfg.contains("rho0") ? io::parse_function(cfg.at("rho0"), params.dim) : FunctionSpec::constant(0.5);
  const Field p0 = rho0.sample(params.lattice());
  require_density(p0);

  const auto recs = run_replicates(reps, ctx.threads, [&](std::uint64_t r) {
    return simulate(params, sample_bernoulli_field(p0, params.seed, r), r);
  });

  const std::string exp = get_or<std::string>(cfg, "export", "trajectory");
  if (exp == "trajectory" || exp == "both") {
    auto os = open_out(ctx, "trajectories.csv");
    io::write_trajectory_csv(os, recs);
  }
  if (exp == "density" || exp == "both") {
    auto os = open_out(ctx, "density.csv");
    io::write_density_csv(os, recs, get_or(cfg, "box", 1));
  }
  if (exp != "trajectory" && exp != "density" && exp != "both")
    throw std::invalid_argument("config: export must be trajectory, density or both");

  bool conserved = true;
  std::uint64_t jumps = 0;
  for (const auto& r : recs) {
    jumps += r.jump_count;
    for (const auto& s : r.snapshots) conserved = conserved && s.particles() == r.snapshots.front().particles();
  }
  json summary{{"command", "simulate"}, {"N", params.n}, {"dim", params.dim}, {"a", params.a},
               {"T", params.horizon}, {"replicates", reps}, {"total_jumps", jumps},
               {"particle_number_conserved", conserved}};
  bool passed = conserved;
  if (params.oracle_mode && params.lattice().sites() <= 16) {
    const json oc = cfg.contains("oracle") ? cfg.at("oracle") : json::object();
    const double t = get_or(oc, "t", params.horizon);
    const auto samples = get_or<std::uint64_t>(oc, "samples", 100000);
    const double tol = get_or(oc, "tolerance", 0.01);
    const OracleComparison cmp = oracle_law_comparison(params, rho0, t, samples, ctx.threads);
    summary["oracle"] = {{"t", t}, {"samples", samples}, {"total_variation", cmp.tv}, {"tolerance", tol},
                         {"exact_law", cmp.exact}, {"empirical_law", cmp.empirical}, {"passed", cmp.tv <= tol}};
    passed = passed && cmp.tv <= tol;
  }
  summary["passed"] = passed;
  return summary;
}

json cmd_pde(const RunContext& ctx)
{
  const json& cfg = ctx.cfg;
  const int dim = dimension(cfg);
  const int n = grid_size(cfg, 128);
  const double a = io::parse_interaction(cfg);
  const ConductanceProfile profile = io::parse_profile(cfg, dim);
  const PhiFunction phi = io::parse_phi(cfg, a);
  const double horizon = io::require<double>(cfg, "T");
  const std::vector<double> times = io::parse_times(cfg, horizon, "output_times", "stored", 64);
  PdeOptions opts;
  opts.scheme = parse_time_scheme(get_or<std::string>(cfg, "scheme", "ssp_rk3"));
  opts.theta = get_or(cfg, "theta", 0.9);
  if (cfg.contains("dt")) opts.dt = cfg.at("dt").get<double>();
  const Quadrature rule = parse_quadrature(get_or<std::string>(cfg, "quadrature", "left"));
  const FunctionSpec gamma =
    cfg.contains("gamma") ? io::parse_function(cfg.at("gamma"), dim) : FunctionSpec::cosine(0.5, 0.3);
  const FunctionSpec h = cfg.contains("H") ? io::parse_function(cfg.at("H"), dim) : FunctionSpec::cosine(0.0, 1.0);
  const auto lambdas = get_or(cfg, "lambdas", std::vector<double>{1.0, 10.0});

  const GeneratorND gen = build_generator(profile, n);
  const SpectralGenerator spectral(gen);
  const Field g0 = gamma.sample(gen.lattice);
  const PdeSolution sol = solve(gen, phi, g0, horizon, times, opts);
  {
    auto os = open_out(ctx, "solution.csv");
    io::write_solution_csv(os, sol);
  }

  CheckList checks;
  checks.at_most("mass_conservation", mass_drift(sol), 1e-8);
  const auto [lo, hi] = solution_range(sol);
  checks.add("range_preservation", lo >= -1e-12 && hi <= 1.0 + 1e-12, std::max(-lo, hi - 1.0), 1e-12);
  const Field hf = h.sample(gen.lattice);
  json residuals = json::array();
  if (sol.fields.size() >= 2)
    for (double lam : lambdas) {
      const double r = weak_residual(sol, spectral, phi, hf, lam, rule);
      residuals.push_back({{"lambda", lam}, {"residual", r}});
      checks.at_most("weak_residual_lambda_" + fmt17(lam), r, 1e-4 * sup_norm(hf));
    }
  bool linear = true;
  for (double c : phi.coefficients()) linear = linear && c == 0.0;
  if (linear) {
    double worst = 0.0;
    for (std::size_t k = 0; k < sol.fields.size(); ++k)
      worst = std::max(worst, sup_norm(sol.fields[k] - heat_solution(spectral, g0, sol.times[k])));
    checks.at_most("spectral_heat_agreement", worst, 1e-6);
  }
  json membranes = json::array();
  for (const Atom& at : profile.axis(0).atoms()) {
    const MembraneJump mj = membrane_jump(sol.fields.back(), at.location);
    membranes.push_back({{"location", at.location}, {"bond", mj.bond}, {"jump", mj.jump}, {"adjacent_increment", mj.adjacent},
                         {"ratio", mj.ratio}});
  }
  std::vector<io::EnergyRow> energy_rows;
  for (int j = 0; j < dim; ++j)
    energy_rows.push_back({j, n, energy_functional(sol, phi, profile, j),
                           "T=" + fmt17(horizon) + ";stored=" + std::to_string(sol.times.size())});
  {
    auto os = open_out(ctx, "energy.csv");
    io::write_energy_csv(os, energy_rows);
  }
  json energies = json::array();
  for (const auto& r : energy_rows) energies.push_back({{"axis", r.axis}, {"energy", r.energy}});

  return json{{"command", "pde"},
              {"N", n},
              {"dim", dim},
              {"scheme", to_string(sol.scheme)},
              {"quadrature", to_string(rule)},
              {"dt", sol.dt},
              {"steps", sol.steps},
              {"weak_residuals", residuals},
              {"membranes", membranes},
              {"energy", energies},
              {"checks", checks_json(checks)},
              {"passed", checks.all_passed()}};
}

json cmd_converge(const RunContext& ctx)
{
  const json& cfg = ctx.cfg;
  ConvergenceSetup s;
  s.dim = dimension(cfg);
  s.a = io::parse_interaction(cfg);
  s.profile = io::parse_profile(cfg, s.dim);
  s.phi = io::parse_phi(cfg, s.a);
  s.rho0 = cfg.contains("rho0") ? io::parse_function(cfg.at("rho0"), s.dim) : FunctionSpec::cosine(0.5, 0.3);
  if (cfg.contains("tests")) {
    for (auto it = cfg.at("tests").begin(); it != cfg.at("tests").end(); ++it)
      s.tests.emplace_back(it.key(), io::parse_function(it.value(), s.dim));
  } else {
    s.tests.emplace_back("cos", FunctionSpec::cosine(0.0, 1.0));
  }
  s.times = io::require<std::vector<double>>(cfg, "times");
  s.ns = io::require<std::vector<int>>(cfg, "Ns");
  s.replicates = io::parse_replicates(cfg, 200);
  s.seed = ctx.seed;
  s.threads = ctx.threads;
  s.ref_factor = get_or(cfg, "ref_factor", 4);
  s.pde.scheme = parse_time_scheme(get_or<std::string>(cfg, "scheme", "ssp_rk3"));
  require_density(s.rho0.sample(Lattice(s.dim, s.ns.empty() ? 4 : s.ns.front())));

  const ConvergenceReport rep = run_convergence(s);
  {
    auto os = open_out(ctx, "convergence.csv");
    io::write_convergence_csv(os, rep);
  }
  CheckList checks;
  for (const auto& t : s.tests)
    for (double time : s.times)
      checks.add("non_increasing_" + t.first + "_t" + fmt17(time), rep.non_increasing(t.first, time), 0.0, 0.0);
  if (cfg.contains("target_error")) {
    const double target = cfg.at("target_error").get<double>();
    for (const auto& t : s.tests) {
      const auto& row = rep.row(s.ns.back(), t.first, s.times.back());
      checks.add("final_error_" + t.first, row.mean_error < target, row.mean_error, target);
    }
  }
  return json{{"command", "converge"},
              {"N_ref", rep.n_ref},
              {"replicates", s.replicates},
              {"checks", checks_json(checks)},
              {"passed", checks.all_passed()}};
}

json cmd_diagnose(const RunContext& ctx)
{
  const json& cfg = ctx.cfg;
  SimParams base = sim_params(cfg, ctx.seed);
  const FunctionSpec rho0 = cfg.contains("rho0") ? io::parse_function(cfg.at("rho0"), base.dim) : FunctionSpec::constant(0.5);
  const json all = json::object();
  const bool run_all = !cfg.contains("replacement") && !cfg.contains("martingale") && !cfg.contains("energy");
  CheckList checks;
  json summary{{"command", "diagnose"}};

  if (run_all || cfg.contains("replacement")) {
    const json& rc = cfg.contains("replacement") ? cfg.at("replacement") : all;
    SimParams p = base;
    p.n = get_or(rc, "N", base.n);
    const auto eps = get_or(rc, "eps", std::vector<double>{0.125, 0.5});
    const double t = get_or(rc, "t", 0.1);
    const std::uint64_t reps = io::parse_replicates(rc, 50);
    const FunctionSpec f = rc.contains("F") ? io::parse_function(rc.at("F"), p.dim) : FunctionSpec::cosine(0.0, 1.0);
    const CylinderFunction g = rc.contains("g") ? io::parse_cylinder(rc.at("g"), p.a) : CylinderFunction::pair(0);
    const ReplacementStudy st = replacement_study(p, rho0, f, g, eps, t, get_or(rc, "snapshots", 64), reps, ctx.threads);
    auto os = open_out(ctx, "replacement.csv");
    os << "eps,mean_gap,stderr,replicates\n";
    json rows = json::array();
    for (std::size_t i = 0; i < eps.size(); ++i) {
      os << fmt17(eps[i]) << ',' << fmt17(st.gaps[i].mean) << ',' << fmt17(st.gaps[i].std_error) << ',' << reps << '\n';
      rows.push_back({{"eps", eps[i]}, {"gap", io::to_json(st.gaps[i])}});
    }
    summary["replacement"] = rows;
    if (eps.size() >= 2) {
      std::size_t lo = 0, hi = 0;
      for (std::size_t i = 0; i < eps.size(); ++i) {
        if (eps[i] < eps[lo]) lo = i;
        if (eps[i] > eps[hi]) hi = i;
      }
      const double sep = (st.gaps[hi].mean - st.gaps[hi].std_error) - (st.gaps[lo].mean + st.gaps[lo].std_error);
      checks.add("replacement_gap_decreases_with_eps", sep > 0.0, sep, 0.0);
    }
  }

  if (run_all || cfg.contains("martingale")) {
    const json& mc = cfg.contains("martingale") ? cfg.at("martingale") : all;
    const auto ns = get_or(mc, "Ns", std::vector<int>{32, 64, 128});
    const double lambda = get_or(mc, "lambda", 1.0);
    const double horizon = get_or(mc, "T", 0.1);
    const std::uint64_t reps = io::parse_replicates(mc, 200);
    const FunctionSpec h = mc.contains("H") ? io::parse_function(mc.at("H"), base.dim) : FunctionSpec::cosine(0.0, 1.0);
    const MartingaleStudy st = martingale_study(base, rho0, h, lambda, horizon, ns, reps, ctx.threads);
    auto os = open_out(ctx, "martingale.csv");
    os << "N,mean_M_T,stderr_M_T,mean_sup_abs,stderr_sup_abs,mean_predictable_qv,qv_bound\n";
    json rows = json::array();
    for (std::size_t k = 0; k < ns.size(); ++k) {
      os << ns[k] << ',' << fmt17(st.final_value[k].mean) << ',' << fmt17(st.final_value[k].std_error) << ','
         << fmt17(st.sup_abs[k].mean) << ',' << fmt17(st.sup_abs[k].std_error) << ',' << fmt17(st.mean_qv[k]) << ','
         << fmt17(st.qv_bound[k]) << '\n';
      rows.push_back({{"N", ns[k]}, {"M_T", io::to_json(st.final_value[k])}, {"sup_abs", io::to_json(st.sup_abs[k])},
                      {"mean_predictable_qv", st.mean_qv[k]}, {"qv_bound", st.qv_bound[k]}});
      const double z = st.final_value[k].std_error > 0.0 ? std::abs(st.final_value[k].mean) / st.final_value[k].std_error : 0.0;
      checks.at_most("martingale_mean_zero_N" + std::to_string(ns[k]), z, 4.0);
      checks.at_most("martingale_qv_bound_N" + std::to_string(ns[k]), st.mean_qv[k], st.qv_bound[k]);
    }
    summary["martingale"] = {{"rows", rows}, {"log_sup_slope", st.slope}};
    if (ns.size() >= 2)
      checks.at_most("martingale_scale_slope", std::abs(st.slope + 0.5 * base.dim), 0.2);
  }

  if (run_all || cfg.contains("energy")) {
    const json& ec = cfg.contains("energy") ? cfg.at("energy") : all;
    const auto ns = get_or(ec, "Ns", std::vector<int>{64, 128});
    const FunctionSpec h = ec.contains("H") ? io::parse_function(ec.at("H"), base.dim) : FunctionSpec::cosine(0.0, 1.0);
    const PhiFunction phi = io::parse_phi(cfg, base.a);
    const double eps = get_or(ec, "eps", 0.125);
    const double delta = get_or(ec, "delta", 0.0625);
    const double k1 = get_or(ec, "K1", 4.0);
    const int axis = get_or(ec, "axis", 0);
    const double t = get_or(ec, "T", 0.05);
    const std::uint64_t reps = io::parse_replicates(ec, 50);
    auto os = open_out(ctx, "energy_statistic.csv");
    os << "axis,N,mean,stderr,replicates\n";
    json rows = json::array();
    std::vector<SampleStats> stats;
    for (int n : ns) {
      SimParams p = base;
      p.n = n;
      stats.push_back(energy_statistic_study(p, rho0, h, phi, eps, delta, axis, k1, t, get_or(ec, "snapshots", 16), reps,
                                             ctx.threads));
      os << axis << ',' << n << ',' << fmt17(stats.back().mean) << ',' << fmt17(stats.back().std_error) << ',' << reps
         << '\n';
      rows.push_back({{"N", n}, {"statistic", io::to_json(stats.back())}});
    }
    summary["energy_statistic"] = rows;
    for (std::size_t k = 1; k < stats.size(); ++k) {
      const double excess = stats[k].mean - stats[0].mean - 3.0 * std::hypot(stats[k].std_error, stats[0].std_error);
      checks.at_most("energy_statistic_bounded_N" + std::to_string(ns[k]), excess, 0.0);
    }
  }
  summary["checks"] = checks_json(checks);
  summary["passed"] = checks.all_passed();
  return summary;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Exclusion processes with conductances: simulation, hydrodynamic PDE and diagnostics"};
  app.require_subcommand(1, 1);
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool seed_given = false;
  const char* names[] = {"spectrum", "simulate", "pde", "converge", "diagnose"};
  const char* help[] = {"generator spectra and property checks", "exclusion process ensembles",
                        "hydrodynamic equation solve and weak-form residuals", "particle vs PDE convergence study",
                        "replacement, martingale and energy diagnostics"};
  for (int i = 0; i < 5; ++i) {
    auto* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", config, "JSON configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory")->required();
    sub->add_option("--seed", seed, "64-bit seed (overrides the config)");
    sub->add_option("--threads", threads, "worker threads for replicate ensembles (0 = all cores)");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();
  seed_given = app.get_subcommands().front()->count("--seed") > 0;

  try {
    RunContext ctx;
    ctx.cfg = io::load_json(config);
    ctx.out = out;
    ctx.seed = seed_given ? seed : get_or<std::uint64_t>(ctx.cfg, "seed", 0);
    ctx.threads = app.get_subcommands().front()->count("--threads") ? threads : get_or<unsigned>(ctx.cfg, "threads", 1);
    fs::create_directories(ctx.out);

    json summary;
    if (cmd == "spectrum") summary = cmd_spectrum(ctx);
    else if (cmd == "simulate") summary = cmd_simulate(ctx);
    else if (cmd == "pde") summary = cmd_pde(ctx);
    else if (cmd == "converge") summary = cmd_converge(ctx);
    else summary = cmd_diagnose(ctx);
    summary["seed"] = ctx.seed;

    std::ofstream js(ctx.out / "summary.json");
    js << io::dump17(summary);
    const bool passed = summary.at("passed").get<bool>();
    std::cout << cmd << ": " << (passed ? "PASS" : "FAIL") << " (" << (ctx.out / "summary.json").string() << ")\n";
    return passed ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "hydroscale " << cmd << ": invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "hydroscale " << cmd << ": " << e.what() << '\n';
    return 3;
  }
}
