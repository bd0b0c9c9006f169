#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <initializer_list>
#include <iostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "emot/errors.hpp"
#include "emot/heston.hpp"
#include "emot/io.hpp"
#include "emot/market.hpp"
#include "emot/measure.hpp"
#include "emot/oracle.hpp"
#include "emot/potentials.hpp"
#include "emot/problem.hpp"
#include "emot/sinkhorn.hpp"

namespace emot {

/// Stable exit codes (public API).
enum ExitCode : int {
  exit_ok = 0,
  exit_verification_failure = 1,
  exit_config_error = 2,
  exit_simulation_error = 3,
  exit_infeasible = 4,
  exit_solver_abort = 5,
};

namespace detail {

inline void require_keys(const nlohmann::json& j,
                         std::initializer_list<const char*> allowed, const char* section) {
  if (!j.is_object())
    throw ConfigError(std::string("config: section '") + section + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw ConfigError("config: unknown key '" + it.key() + "' in section '" + section +
                        "'");
  }
}

template <typename T>
void get_if_present(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string("config: key '") + key + "' has the wrong type");
    }
  }
}

}  // namespace detail

/// Whole-pipeline configuration. Defaults reproduce the reference experiment:
/// desk-scale stochastic-volatility simulation on the 40x50x5 grid with
/// noise scales (100, 150, 0.01).
struct AppConfig {
  HestonParams heston;
  GridSpec grid_x{3400.0, 6400.0, 40};
  GridSpec grid_y{3200.0, 6700.0, 50};
  GridSpec grid_z{0.135, 0.165, 5};
  NoiseSpec noise;
  SolverConfig solver;
  double cost_cap = 30.0;      // reference-measure cost for empty populated-product cells
  bool match_means = true;     // reconcile E[x] and E[y] before solving
  bool export_sample = false;  // also write raw (s1, s2, v1) triples
  std::size_t verify_cases = 20;
  std::uint64_t verify_seed = 71;

  static AppConfig from_json(const nlohmann::json& j) {
    AppConfig c;
    detail::require_keys(
        j, {"heston", "grids", "noise", "solver", "reference", "pipeline", "io", "verify"},
        "(top level)");
    if (j.contains("heston")) {
      const auto& h = j.at("heston");
      detail::require_keys(h,
                           {"s0", "v0", "v_bar", "lambda", "eta", "t1", "t2", "dt",
                            "correlation", "n_paths", "seed"},
                           "heston");
      detail::get_if_present(h, "s0", c.heston.s0);
      detail::get_if_present(h, "v0", c.heston.v0);
      detail::get_if_present(h, "v_bar", c.heston.v_bar);
      detail::get_if_present(h, "lambda", c.heston.lambda);
      detail::get_if_present(h, "eta", c.heston.eta);
      detail::get_if_present(h, "t1", c.heston.t1);
      detail::get_if_present(h, "t2", c.heston.t2);
      detail::get_if_present(h, "dt", c.heston.dt);
      detail::get_if_present(h, "correlation", c.heston.correlation);
      detail::get_if_present(h, "n_paths", c.heston.n_paths);
      detail::get_if_present(h, "seed", c.heston.seed);
    }
    if (j.contains("grids")) {
      const auto& g = j.at("grids");
      detail::require_keys(g, {"x", "y", "z"}, "grids");
      const auto read_grid = [](const nlohmann::json& spec, const char* name) {
        detail::require_keys(spec, {"lower", "upper", "count"}, name);
        GridSpec out;
        detail::get_if_present(spec, "lower", out.lower);
        detail::get_if_present(spec, "upper", out.upper);
        detail::get_if_present(spec, "count", out.count);
        return out;
      };
      if (g.contains("x")) c.grid_x = read_grid(g.at("x"), "grids.x");
      if (g.contains("y")) c.grid_y = read_grid(g.at("y"), "grids.y");
      if (g.contains("z")) c.grid_z = read_grid(g.at("z"), "grids.z");
    }
    if (j.contains("noise")) {
      const auto& s = j.at("noise");
      detail::require_keys(s, {"sigma1", "sigma2", "sigma3"}, "noise");
      detail::get_if_present(s, "sigma1", c.noise.sigma1);
      detail::get_if_present(s, "sigma2", c.noise.sigma2);
      detail::get_if_present(s, "sigma3", c.noise.sigma3);
    }
    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      detail::require_keys(s,
                           {"max_iters", "g_tol", "marginal_tol", "martingale_tol",
                            "root_tolerance", "overflow_guard", "trace_every"},
                           "solver");
      detail::get_if_present(s, "max_iters", c.solver.max_iters);
      detail::get_if_present(s, "g_tol", c.solver.g_tol);
      detail::get_if_present(s, "marginal_tol", c.solver.marginal_tol);
      detail::get_if_present(s, "martingale_tol", c.solver.martingale_tol);
      detail::get_if_present(s, "root_tolerance", c.solver.root_tolerance);
      detail::get_if_present(s, "overflow_guard", c.solver.overflow_guard);
      detail::get_if_present(s, "trace_every", c.solver.trace_every);
    }
    if (j.contains("reference")) {
      detail::require_keys(j.at("reference"), {"cost_cap"}, "reference");
      detail::get_if_present(j.at("reference"), "cost_cap", c.cost_cap);
    }
    if (j.contains("pipeline")) {
      detail::require_keys(j.at("pipeline"), {"match_means"}, "pipeline");
      detail::get_if_present(j.at("pipeline"), "match_means", c.match_means);
    }
    if (j.contains("io")) {
      detail::require_keys(j.at("io"), {"export_sample"}, "io");
      detail::get_if_present(j.at("io"), "export_sample", c.export_sample);
    }
    if (j.contains("verify")) {
      const auto& v = j.at("verify");
      detail::require_keys(v, {"cases", "seed"}, "verify");
      detail::get_if_present(v, "cases", c.verify_cases);
      detail::get_if_present(v, "seed", c.verify_seed);
    }
    return c;
  }

  static AppConfig from_file(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return from_json(j);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["heston"] = {{"s0", heston.s0},
                   {"v0", heston.v0},
                   {"v_bar", heston.v_bar},
                   {"lambda", heston.lambda},
                   {"eta", heston.eta},
                   {"t1", heston.t1},
                   {"t2", heston.t2},
                   {"dt", heston.dt},
                   {"correlation", heston.correlation},
                   {"n_paths", heston.n_paths},
                   {"seed", heston.seed}};
    j["grids"] = {{"x", {{"lower", grid_x.lower}, {"upper", grid_x.upper}, {"count", grid_x.count}}},
                  {"y", {{"lower", grid_y.lower}, {"upper", grid_y.upper}, {"count", grid_y.count}}},
                  {"z", {{"lower", grid_z.lower}, {"upper", grid_z.upper}, {"count", grid_z.count}}}};
    j["noise"] = {{"sigma1", noise.sigma1}, {"sigma2", noise.sigma2}, {"sigma3", noise.sigma3}};
    j["solver"] = {{"max_iters", solver.max_iters},
                   {"g_tol", solver.g_tol},
                   {"marginal_tol", solver.marginal_tol},
                   {"martingale_tol", solver.martingale_tol},
                   {"root_tolerance", solver.root_tolerance},
                   {"overflow_guard", solver.overflow_guard},
                   {"trace_every", solver.trace_every}};
    j["reference"] = {{"cost_cap", cost_cap}};
    j["pipeline"] = {{"match_means", match_means}};
    j["io"] = {{"export_sample", export_sample}};
    j["verify"] = {{"cases", verify_cases}, {"seed", verify_seed}};
    return j;
  }

  std::string config_hash() const { return fnv1a64_hex(to_json().dump()); }
};

namespace detail {

/// Trace serialization with the wall-clock column zeroed; manifests hash this
/// canonical form so reruns stay hash-stable while trace.csv itself keeps
/// honest timings.
inline std::string trace_to_csv_canonical(const SolveTrace& trace) {
  SolveTrace flat = trace;
  for (auto& r : flat.records) r.wall_ms = 0.0;
  return trace_to_csv(flat);
}

inline nlohmann::json manifest_skeleton(const char* command, const AppConfig& cfg) {
  nlohmann::json m;
  m["format_version"] = 1;
  m["command"] = command;
  m["rng"] = rng_identity();
  m["seed"] = cfg.heston.seed;
  m["config"] = cfg.to_json();
  m["config_hash"] = cfg.config_hash();
  m["files"] = nlohmann::json::object();
  return m;
}

inline void write_with_manifest(nlohmann::json& manifest, const std::filesystem::path& dir,
                                const std::string& name, const std::string& content) {
  write_text_file(dir / name, content);
  manifest["files"][name] = fnv1a64_hex(content);
}

inline nlohmann::json feasibility_to_json(const FeasibilityReport& r) {
  return {{"straddle_ok", r.straddle_ok},
          {"mean_ok", r.mean_ok},
          {"nu_nondegenerate", r.nu_nondegenerate},
          {"convex_order_ok", r.convex_order_ok},
          {"mean_gap", r.mean_gap},
          {"mean_tolerance", r.mean_tolerance},
          {"max_convex_order_violation", r.max_convex_order_violation}};
}

constexpr std::uint64_t noise_seed_lane = 1000000007ULL;

}  // namespace detail

/// simulate: run the market pipeline and write the instance artifacts
/// (cost tensor + sidecar, three marginal CSVs, manifest) into out_dir.
inline int cmd_simulate(const AppConfig& cfg, const std::filesystem::path& out_dir,
                        std::size_t threads = 1, std::ostream& err = std::cerr) {
  try {
    cfg.heston.validate();
    cfg.grid_x.validate();
    cfg.grid_y.validate();
    cfg.grid_z.validate();
    cfg.noise.validate();
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config_error;
  }

  try {
    std::filesystem::create_directories(out_dir);
    const PathSample sample = simulate_heston(cfg.heston, threads);
    const ReferenceBuild ref =
        build_reference(sample, cfg.grid_x, cfg.grid_y, cfg.grid_z, cfg.cost_cap);
    NoisedMarginals nm =
        noised_marginals(sample, cfg.noise, cfg.grid_x, cfg.grid_y, cfg.grid_z,
                         detail::derive_seed(cfg.heston.seed, detail::noise_seed_lane));

    nlohmann::json manifest = detail::manifest_skeleton("simulate", cfg);
    if (nm.mass_outside_warning()) {
      err << "warning: noised mass outside the grid exceeds "
          << NoisedMarginals::mass_outside_warn_level * 100 << "% on some axis (fractions "
          << nm.outside_fraction[0] << ", " << nm.outside_fraction[1] << ", "
          << nm.outside_fraction[2] << "); points were clipped to boundary cells\n";
    }
    manifest["warnings"] = {{"mass_outside_grid", nm.mass_outside_warning()},
                            {"outside_fraction",
                             {nm.outside_fraction[0], nm.outside_fraction[1],
                              nm.outside_fraction[2]}}};

    if (cfg.match_means) {
      // A martingale coupling forces E[x] = E[y]; reconcile the sampled
      // marginals by tilting nu onto mu's mean before solving.
      nm.nu = tilt_to_mean(nm.nu, nm.mu.mean());
    }

    const std::string cost_bytes = doubles_to_bytes_le(ref.cost.values);
    nlohmann::json cost_sidecar = {
        {"shape", {ref.cost.shape[0], ref.cost.shape[1], ref.cost.shape[2]}},
        {"order", "ijk"},
        {"kind", "cost"},
        {"cost_cap", ref.cost_cap},
        {"populated_cells", ref.populated_cells}};
    detail::write_with_manifest(manifest, out_dir, "cost.bin", cost_bytes);
    detail::write_with_manifest(manifest, out_dir, "cost.json", cost_sidecar.dump(2) + "\n");
    detail::write_with_manifest(manifest, out_dir, "mu.csv", measure_to_csv(nm.mu));
    detail::write_with_manifest(manifest, out_dir, "nu.csv", measure_to_csv(nm.nu));
    detail::write_with_manifest(manifest, out_dir, "rho.csv", measure_to_csv(nm.rho));
    if (cfg.export_sample) {
      write_sample_triples(out_dir / "sample.bin", sample);
      manifest["files"]["sample.bin"] = hash_file(out_dir / "sample.bin");
    }
    write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return exit_ok;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config_error;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return exit_config_error;
  } catch (const Error& e) {
    err << "simulation error: " << e.what() << "\n";
    return exit_simulation_error;
  } catch (const std::exception& e) {
    err << "simulation error: " << e.what() << "\n";
    return exit_simulation_error;
  }
}

/// Loads the instance artifacts written by cmd_simulate from dir.
inline ProblemInstance load_instance(const std::filesystem::path& dir) {
  DiscreteMeasure mu = read_measure_csv(dir / "mu.csv");
  DiscreteMeasure nu = read_measure_csv(dir / "nu.csv");
  DiscreteMeasure rho = read_measure_csv(dir / "rho.csv");
  TensorFile cost = read_tensor(dir / "cost.bin", dir / "cost.json");
  return ProblemInstance(std::move(mu), std::move(nu), std::move(rho),
                         CostTensor(cost.shape, std::move(cost.values)));
}

/// solve: read the instance from dir, run the solver, write potentials,
/// plan, trace, summary, and a solve manifest back into dir.
inline int cmd_solve(const AppConfig& cfg, const std::filesystem::path& dir,
                     std::ostream& err = std::cerr) {
  ProblemInstance inst;
  try {
    inst = load_instance(dir);
  } catch (const std::exception& e) {
    err << "input error: " << e.what() << "\n";
    return exit_config_error;
  }

  nlohmann::json manifest = detail::manifest_skeleton("solve", cfg);
  manifest["inputs"] = {{"mu.csv", hash_file(dir / "mu.csv")},
                        {"nu.csv", hash_file(dir / "nu.csv")},
                        {"rho.csv", hash_file(dir / "rho.csv")},
                        {"cost.bin", hash_file(dir / "cost.bin")},
                        {"cost.json", hash_file(dir / "cost.json")}};

  try {
    validate_instance(inst);
  } catch (const InfeasibilityError& e) {
    nlohmann::json rep = detail::feasibility_to_json(e.report);
    rep["message"] = e.what();
    write_text_file(dir / "feasibility.json", rep.dump(2) + "\n");
    err << "infeasible instance: " << e.what() << "\n";
    return exit_infeasible;
  }

  SolveResult result = iterate(inst, DualPotentials::zeros(inst.mu.size(), inst.nu.size()),
                               cfg.solver);

  nlohmann::json summary;
  summary["g_value"] = result.trace.records.empty()
                           ? nlohmann::json()
                           : nlohmann::json(result.trace.records.back().g_value);
  summary["iterations"] = result.iterations;
  summary["termination"] = to_string(result.reason);
  summary["abort_message"] = result.abort_message;
  if (result.plan.values.empty()) {
    summary["plan"] = nullptr;
  } else {
    summary["plan"] = {{"total_mass", result.plan.total_mass},
                       {"x_marginal_error", result.plan.x_marginal_error},
                       {"y_marginal_error", result.plan.y_marginal_error},
                       {"max_martingale_rel", result.plan.max_martingale_rel}};
  }
  try {
    const RateFit rate = fit_convergence_rate(result.trace);
    summary["rate"] = {{"rate", rate.rate},
                       {"r_squared", rate.r_squared},
                       {"points_used", rate.points_used},
                       {"epsilon_floor", rate.epsilon_floor}};
  } catch (const InsufficientTrace&) {
    summary["rate"] = nullptr;
  }

  detail::write_with_manifest(manifest, dir, "potentials_x.csv",
                              x_potentials_to_csv(inst.mu, result.potentials.f,
                                                  result.potentials.h));
  detail::write_with_manifest(manifest, dir, "potentials_y.csv",
                              y_potentials_to_csv(inst.nu, result.potentials.g));
  if (!result.plan.values.empty()) {
    const std::string plan_bytes = doubles_to_bytes_le(result.plan.values);
    nlohmann::json plan_sidecar = {
        {"shape", {result.plan.shape[0], result.plan.shape[1], result.plan.shape[2]}},
        {"order", "ijk"},
        {"kind", "plan"},
        {"total_mass", result.plan.total_mass},
        {"x_marginal_error", result.plan.x_marginal_error},
        {"y_marginal_error", result.plan.y_marginal_error},
        {"max_martingale_rel", result.plan.max_martingale_rel}};
    detail::write_with_manifest(manifest, dir, "plan.bin", plan_bytes);
    detail::write_with_manifest(manifest, dir, "plan.json", plan_sidecar.dump(2) + "\n");
  }
  write_trace_csv(dir / "trace.csv", result.trace);
  manifest["files"]["trace.csv"] = fnv1a64_hex(detail::trace_to_csv_canonical(result.trace));
  manifest["trace_hash_excludes_ms"] = true;
  detail::write_with_manifest(manifest, dir, "summary.json", summary.dump(2) + "\n");
  write_text_file(dir / "solve_manifest.json", manifest.dump(2) + "\n");

  if (result.reason == Termination::infeasible_suspect) {
    err << "solver abort: " << result.abort_message << "\n";
    return exit_solver_abort;
  }
  return exit_ok;
}

/// verify: randomized cross-checks of the two independent solvers plus
/// first-order and duality-gap certificates; prints one row per case.
inline int cmd_verify(const AppConfig& cfg, std::ostream& out = std::cout,
                      std::ostream& err = std::cerr) {
  std::mt19937_64 rng(cfg.verify_seed);
  std::uniform_int_distribution<std::size_t> draw_n(2, 5), draw_m(3, 7), draw_l(1, 3);

  SolverConfig tight;
  tight.max_iters = 20000;
  tight.g_tol = 0.0;  // run to the fixed point's noise floor
  tight.marginal_tol = 1e-13;
  tight.martingale_tol = 1e-12;

  AscentConfig ascent;
  ascent.grad_tol = 1e-11;
  ascent.max_iters = 2000000;

  bool all_ok = true;
  out << "case  shape   |dG|        TV          kkt         gap         verdict\n";
  for (std::size_t cse = 0; cse < cfg.verify_cases; ++cse) {
    const std::size_t n = draw_n(rng), m = draw_m(rng), l = draw_l(rng);
    try {
      RandomInstance ri = random_instance(rng, n, m, l);
      const SolveResult sink = iterate(ri.instance, DualPotentials::zeros(n, m), tight);
      const DualPotentials opot = full_gradient_ascent(
          ri.instance, DualPotentials::zeros(n, m), ascent);
      const TransportPlan oplan = induced_plan(ri.instance, opot);
      const double g_sink = dual_objective(ri.instance, sink.potentials);
      const double g_orac = dual_objective(ri.instance, opot);
      const double dg = std::abs(g_sink - g_orac);
      const double tv = plan_total_variation(sink.plan, oplan);
      const double kkt = std::max(check_first_order(ri.instance, sink.potentials).max_residual(),
                                  check_first_order(ri.instance, opot).max_residual());
      const double gap = std::abs(duality_gap(ri.instance, oplan, opot));
      const bool ok = dg <= 1e-8 && tv <= 1e-8 && kkt <= 1e-8 && gap <= 1e-8;
      all_ok = all_ok && ok;
      char line[160];
      std::snprintf(line, sizeof(line), "%-5zu %zux%zux%zu  %-11.3e %-11.3e %-11.3e %-11.3e %s\n",
                    cse, n, m, l, dg, tv, kkt, gap, ok ? "pass" : "FAIL");
      out << line;
    } catch (const std::exception& e) {
      err << "case " << cse << " failed: " << e.what() << "\n";
      all_ok = false;
    }
  }
  out << (all_ok ? "verify: all checks passed\n" : "verify: FAILURES present\n");
  return all_ok ? exit_ok : exit_verification_failure;
}

/// export-plots: turn solve artifacts in dir into plot-ready CSVs under
/// dir/plots (marginal overlay, per-x drift residual, convergence curve,
/// plan slice at a fixed z index).
inline int cmd_export_plots(const std::filesystem::path& dir,
                            std::size_t z_index = static_cast<std::size_t>(-1),
                            std::ostream& err = std::cerr) {
  try {
    const DiscreteMeasure mu = read_measure_csv(dir / "mu.csv");
    const DiscreteMeasure nu = read_measure_csv(dir / "nu.csv");
    const DiscreteMeasure rho = read_measure_csv(dir / "rho.csv");
    const TensorFile plan = read_tensor(dir / "plan.bin", dir / "plan.json");
    const SolveTrace trace = read_trace_csv(dir / "trace.csv");
    if (plan.shape[0] != mu.size() || plan.shape[1] != nu.size() || plan.shape[2] != rho.size())
      throw IoError("plan shape disagrees with the marginal files");

    // Reuse the solver's own reduction layout so the overlay reproduces the
    // summary's marginal errors bit for bit.
    ProblemInstance shape_only(mu, nu, rho,
                               CostTensor::zeros(mu.size(), nu.size(), rho.size()));
    const detail::PlanBody body = detail::analyze_plan(shape_only, plan.values);

    const std::filesystem::path plots = dir / "plots";
    std::filesystem::create_directories(plots);

    std::string overlay = "axis,point,target,achieved\n";
    for (std::size_t i = 0; i < mu.size(); ++i)
      overlay += "x," + format_double(mu.points[i]) + "," + format_double(mu.weights[i]) +
                 "," + format_double(body.row_mass[i]) + "\n";
    for (std::size_t j = 0; j < nu.size(); ++j)
      overlay += "y," + format_double(nu.points[j]) + "," + format_double(nu.weights[j]) +
                 "," + format_double(body.col_mass[j]) + "\n";
    write_text_file(plots / "marginal_overlay.csv", overlay);

    std::string resid = "i,x,residual,relative\n";
    for (std::size_t i = 0; i < mu.size(); ++i)
      resid += std::to_string(i) + "," + format_double(mu.points[i]) + "," +
               format_double(body.mart_signed[i]) + "," + format_double(body.mart_rel[i]) +
               "\n";
    write_text_file(plots / "martingale_residual.csv", resid);

    double g_best = trace.records.empty() ? 0.0 : trace.records.front().g_value;
    for (const auto& r : trace.records) g_best = std::max(g_best, r.g_value);
    std::string conv = "iter,gap\n";
    for (const auto& r : trace.records)
      conv += std::to_string(r.iter) + "," + format_double(g_best - r.g_value) + "\n";
    write_text_file(plots / "convergence.csv", conv);

    const std::size_t zi = z_index == static_cast<std::size_t>(-1) ? rho.size() / 2 : z_index;
    if (zi >= rho.size()) throw ConfigError("z index out of range");
    std::string heat = "i,j,x,y,value\n";
    for (std::size_t i = 0; i < mu.size(); ++i)
      for (std::size_t j = 0; j < nu.size(); ++j)
        heat += std::to_string(i) + "," + std::to_string(j) + "," +
                format_double(mu.points[i]) + "," + format_double(nu.points[j]) + "," +
                format_double(plan.values[(i * nu.size() + j) * rho.size() + zi]) + "\n";
    write_text_file(plots / "plan_slice.csv", heat);

    nlohmann::json manifest;
    manifest["format_version"] = 1;
    manifest["command"] = "export-plots";
    manifest["z_index"] = zi;
    manifest["inputs"] = {{"plan.bin", hash_file(dir / "plan.bin")},
                          {"trace.csv", fnv1a64_hex(detail::trace_to_csv_canonical(trace))}};
    manifest["files"] = {{"marginal_overlay.csv", hash_file(plots / "marginal_overlay.csv")},
                         {"martingale_residual.csv",
                          hash_file(plots / "martingale_residual.csv")},
                         {"convergence.csv", hash_file(plots / "convergence.csv")},
                         {"plan_slice.csv", hash_file(plots / "plan_slice.csv")}};
    write_text_file(plots / "plots_manifest.json", manifest.dump(2) + "\n");
    return exit_ok;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config_error;
  } catch (const std::exception& e) {
    err << "input error: " << e.what() << "\n";
    return exit_config_error;
  }
}

/// inspect: print shape/summary information for a result directory or a
/// single artifact file (manifest echo, measure stats, tensor shapes, or the
/// implied marginal of a strike/price table).
inline int cmd_inspect(const std::filesystem::path& target, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  try {
    if (std::filesystem::is_directory(target)) {
      for (const char* name : {"manifest.json", "solve_manifest.json", "summary.json"}) {
        const auto p = target / name;
        if (std::filesystem::exists(p)) {
          const auto j = nlohmann::json::parse(read_text_file(p));
          out << name << ":\n";
          if (j.contains("command")) out << "  command: " << j["command"] << "\n";
          if (j.contains("seed")) out << "  seed: " << j["seed"] << "\n";
          if (j.contains("rng")) out << "  rng: " << j["rng"] << "\n";
          if (j.contains("config_hash")) out << "  config_hash: " << j["config_hash"] << "\n";
          if (j.contains("termination")) out << "  termination: " << j["termination"] << "\n";
          if (j.contains("g_value")) out << "  g_value: " << j["g_value"] << "\n";
          if (j.contains("files"))
            for (auto it = j["files"].begin(); it != j["files"].end(); ++it)
              out << "  file " << it.key() << " fnv1a64=" << it.value() << "\n";
        }
      }
      for (const char* name : {"cost", "plan"}) {
        const auto bin = target / (std::string(name) + ".bin");
        const auto side = target / (std::string(name) + ".json");
        if (std::filesystem::exists(bin) && std::filesystem::exists(side)) {
          const TensorFile t = read_tensor(bin, side);
          out << name << ": shape " << t.shape[0] << "x" << t.shape[1] << "x" << t.shape[2]
              << ", " << t.values.size() << " values\n";
        }
      }
      return exit_ok;
    }
    if (!std::filesystem::exists(target)) throw IoError("no such file: " + target.string());
    const std::string ext = target.extension().string();
    if (ext == ".json") {
      out << nlohmann::json::parse(read_text_file(target)).dump(2) << "\n";
      return exit_ok;
    }
    if (ext == ".csv") {
      const std::string head = read_text_file(target).substr(0, 64);
      if (head.rfind("point,weight", 0) == 0) {
        const DiscreteMeasure m = read_measure_csv(target);
        out << "measure: " << m.size() << " points on [" << format_double(m.points.front())
            << ", " << format_double(m.points.back()) << "], mean " << format_double(m.mean())
            << ", effective support " << m.effective_count() << "\n";
        return exit_ok;
      }
      if (head.rfind("strike,price", 0) == 0) {
        const auto [strikes, prices] = read_price_csv(target);
        const DiscreteMeasure m = implied_marginal_from_calls(strikes, prices);
        out << "implied marginal from " << strikes.size() << " call prices: " << m.size()
            << " interior points, mean " << format_double(m.mean()) << "\n";
        return exit_ok;
      }
      if (head.rfind("iter,G", 0) == 0) {
        const SolveTrace t = read_trace_csv(target);
        out << "trace: " << t.records.size() << " records";
        if (!t.records.empty())
          out << ", final G " << format_double(t.records.back().g_value) << " at iteration "
              << t.records.back().iter;
        out << "\n";
        return exit_ok;
      }
      out << "csv with unrecognized header: " << head.substr(0, head.find('\n')) << "\n";
      return exit_ok;
    }
    throw IoError("cannot inspect " + target.string() +
                  " (expected a directory, .json, or .csv)");
  } catch (const std::exception& e) {
    err << "inspect error: " << e.what() << "\n";
    return exit_config_error;
  }
}

}  // namespace emot
