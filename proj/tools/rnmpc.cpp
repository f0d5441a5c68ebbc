// Copyright 2026 The rnmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// rnmpc command-line tool: solve, explore, regions, simulate, coverage, pipeline.

#include <rnmpc/rnmpc.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace rnmpc;

enum ExitCode : int {
  kOk = 0,
  kBadInput = 1,
  kInfeasible = 2,
  kSolverFailure = 3,
  kStoreError = 4,
  kStageFailure = 5,
};

struct Config {
  std::string model = "builtin:pannocchia2011";
  std::string x0;
  std::string window;
  std::string grid = "241";
  int steps = 30;
  std::string store;
  std::string atlas;
  std::string out;
  std::uint64_t seed = 1;
  double eps_act = 1e-6;
  double eps_lambda = 1e-8;
  int max_ellipsoids = 2;
  int verify_samples = 2000;
  int samples = 100000;
  bool no_store = false;
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ContractViolation(std::string("cannot parse ") + what + " '" + text + "'");
    }
  }
  return out;
}

Vector parse_state(const std::string& text, int n) {
  const auto v = parse_list(text, "--x0");
  detail::require(static_cast<int>(v.size()) == n, "--x0 needs " + std::to_string(n) + " comma-separated values");
  return Eigen::Map<const Vector>(v.data(), n);
}

/// "lo1,hi1,lo2,hi2,..."; empty gives the default window.
Window parse_window(const std::string& text, int n) {
  if (text.empty()) return default_window();
  const auto v = parse_list(text, "--window");
  detail::require(static_cast<int>(v.size()) == 2 * n, "--window needs lower,upper per axis");
  Vector lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    lo[i] = v[static_cast<std::size_t>(2 * i)];
    hi[i] = v[static_cast<std::size_t>(2 * i + 1)];
  }
  return make_window(lo, hi);
}

std::vector<int> parse_grid(const std::string& text, int n) {
  const auto v = parse_list(text, "--grid");
  detail::require(v.size() == 1 || static_cast<int>(v.size()) == n, "--grid needs one count or one per axis");
  std::vector<int> out;
  for (int i = 0; i < n; ++i) out.push_back(static_cast<int>(v[v.size() == 1 ? 0 : static_cast<std::size_t>(i)]));
  return out;
}

Json config_json(const Config& c, const SystemModel& model) {
  return {{"model", c.model},         {"model_hash", model_hash(model)}, {"window", c.window},
          {"grid", c.grid},           {"seed", c.seed},                 {"eps_act", c.eps_act},
          {"eps_lambda", c.eps_lambda}, {"max_ellipsoids", c.max_ellipsoids}, {"verify_samples", c.verify_samples},
          {"samples", c.samples},     {"law_tolerance", 1e-6},          {"kkt_tolerance", SolverOptions{}.kkt_tolerance}};
}

std::string path_in(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

int cmd_solve(const Config& c) {
  const SystemModel model = resolve_model(c.model);
  const Vector x0 = parse_state(c.x0, model.state_dim);
  const OCPInstance ocp(model, x0);
  const NLPSolution sol = solve_ocp(ocp);
  Json r = {{"x0", to_json(x0)},
            {"status", to_string(sol.status)},
            {"iterations", sol.iterations},
            {"config", config_json(c, model)}};
  if (sol.converged()) {
    const ActiveSetInfo info = classify_active_sets(ocp, sol, c.eps_act, c.eps_lambda);
    r["U_star"] = to_json(sol.U_star);
    r["u_star"] = to_json(sol.feedback(model.input_dim));
    r["lambda_star"] = to_json(sol.lambda_star);
    r["V_star"] = sol.V_star;
    r["kkt_residual"] = sol.kkt_residual;
    r["A"] = one_based(info.active);
    r["A_tilde"] = one_based(saturated_subset(info.active, model.input_rows()));
    r["weak"] = one_based(info.weak);
    r["regular"] = check_region_regularity(ocp, sol, info);
  }
  std::cout << r.dump(2) << '\n';
  switch (sol.status) {
    case SolveStatus::Converged: return kOk;
    case SolveStatus::Infeasible: return kInfeasible;
    default: return kSolverFailure;
  }
}

SampleAtlas run_explore(const Config& c, const SystemModel& model) {
  AtlasOptions opt;
  opt.eps_act = c.eps_act;
  opt.eps_lambda = c.eps_lambda;
  const auto grid = parse_grid(c.grid, model.state_dim);
  const Window window = parse_window(c.window, model.state_dim);
  return explore_grid(model, window, grid, opt);
}

void write_atlas(const SampleAtlas& atlas, const Config& c, const SystemModel& model, const std::string& json_path) {
  write_text_file(json_path, atlas_to_json(atlas, config_json(c, model)).dump() + "\n");
  std::filesystem::path csv(json_path);
  csv.replace_extension(".csv");
  write_text_file(csv.string(), atlas_to_csv(atlas));
}

void print_atlas_summary(const SampleAtlas& atlas, const SystemModel& model, std::ostream& os) {
  const auto sets = atlas.distinct_active_sets();
  os << "samples " << atlas.samples.size() << ", feasible " << atlas.feasible_count() << ", solver failures "
     << atlas.failure_count() << ", distinct active sets " << sets.size() << '\n';
  for (const auto& cls : group_by_subset(atlas, model)) {
    os << "class A~=" << format_index_set(cls.subset) << " u*=" << cls.u_star.transpose() << " samples "
       << cls.cloud.size() << " active sets " << cls.member_active_sets.size()
       << (cls.weakly_active ? " (weakly active member)" : "") << '\n';
  }
}

int cmd_explore(const Config& c) {
  detail::require(!c.out.empty(), "--out is required");
  const SystemModel model = resolve_model(c.model);
  const SampleAtlas atlas = run_explore(c, model);
  write_atlas(atlas, c, model, c.out);
  print_atlas_summary(atlas, model, std::cout);
  return atlas.feasible_count() ? kOk : kStageFailure;
}

FitOptions fit_options(const Config& c) {
  FitOptions f;
  f.seed = c.seed;
  f.verify_samples = c.verify_samples;
  return f;
}

RegionStore run_regions(const Config& c, const SystemModel& model, const SampleAtlas& atlas) {
  const auto classes = group_by_subset(atlas, model);
  RegionStore store = build_store(model, atlas, classes, c.max_ellipsoids, fit_options(c));
  store.metadata = {{"config", config_json(c, model)},
                    {"atlas", {{"window", window_to_json(atlas.window)}, {"resolution", atlas.resolution}}}};
  return store;
}

void print_store_summary(const RegionStore& store, std::ostream& os) {
  os << "ellipsoids " << store.entries.size() << '\n';
  for (std::size_t k = 0; k < store.entries.size(); ++k) {
    const auto& e = store.entries[k];
    os << "  [" << k << "] A~=" << format_index_set(e.subset) << " u*=" << e.u_star.transpose()
       << " center=" << e.ellipsoid.center.transpose() << " verified " << e.n_samples << " samples, worst "
       << e.worst_margin << '\n';
  }
}

int cmd_regions(const Config& c) {
  detail::require(!c.atlas.empty() && !c.out.empty(), "--atlas and --out are required");
  const SystemModel model = resolve_model(c.model);
  const SampleAtlas atlas = atlas_from_json(read_json_file(c.atlas));
  if (atlas.model_hash != model_hash(model)) throw StoreError("atlas was built for a different model");
  const RegionStore store = run_regions(c, model, atlas);
  save_store(store, c.out);
  print_store_summary(store, std::cout);
  return kOk;
}

int cmd_simulate(const Config& c) {
  const SystemModel model = resolve_model(c.model);
  const Vector x0 = parse_state(c.x0, model.state_dim);
  std::optional<RegionStore> store;
  if (!c.no_store) {
    detail::require(!c.store.empty(), "--store is required unless --no-store is given");
    store = load_store(c.store, model);
  }
  SolverContext ctx;
  const Trajectory traj = run_closed_loop(x0, c.steps, store ? &*store : nullptr, model, ctx);
  if (!c.out.empty()) write_text_file(c.out, trajectory_to_csv(traj));
  Json summary = {{"steps", traj.steps.size()},
                  {"ocp_avoided", traj.ocp_avoided_fraction()},
                  {"closed_loop_cost", traj.cost},
                  {"final_state", to_json(traj.final_state)},
                  {"aborted", traj.aborted},
                  {"config", config_json(c, model)}};
  if (traj.aborted) summary["abort_status"] = to_string(traj.abort_status);
  std::cout << summary.dump(2) << '\n';
  if (!traj.aborted) return kOk;
  return traj.abort_status == SolveStatus::Infeasible ? kInfeasible : kSolverFailure;
}

Json coverage_json(const CoverageResult& r, const Window& w, const Config& c, const SystemModel& model) {
  return {{"coverage", r.fraction},
          {"half_width_95", r.half_width},
          {"feasible", r.feasible},
          {"covered", r.covered},
          {"draws", r.draws},
          {"window", window_to_json(w)},
          {"config", config_json(c, model)}};
}

int cmd_coverage(const Config& c) {
  detail::require(!c.store.empty(), "--store is required");
  const SystemModel model = resolve_model(c.model);
  const RegionStore store = load_store(c.store, model);
  Window w = default_window();
  if (!c.window.empty()) w = parse_window(c.window, model.state_dim);
  else if (!c.atlas.empty()) w = feasible_bounding_window(atlas_from_json(read_json_file(c.atlas)));
  const CoverageResult r = coverage_estimate(store, model, w, c.samples, c.seed);
  const Json j = coverage_json(r, w, c, model);
  if (!c.out.empty()) write_text_file(c.out, j.dump(2) + "\n");
  std::cout << j.dump(2) << '\n';
  return kOk;
}

int cmd_pipeline(const Config& c) {
  detail::require(!c.out.empty(), "--out (output directory) is required");
  const SystemModel model = resolve_model(c.model);
  std::filesystem::create_directories(c.out);
  const std::string marker = path_in(c.out, "FAILED");
  std::filesystem::remove(marker);
  std::string stage = "explore";
  try {
    std::cerr << "exploring grid...\n";
    const SampleAtlas atlas = run_explore(c, model);
    write_atlas(atlas, c, model, path_in(c.out, "atlas.json"));
    if (atlas.feasible_count() == 0) throw NoFeasibleSamples("no feasible samples in the window");
    stage = "regions";
    std::cerr << "fitting and verifying ellipsoids...\n";
    const RegionStore store = run_regions(c, model, atlas);
    save_store(store, path_in(c.out, "store.json"));
    stage = "coverage";
    std::cerr << "estimating coverage...\n";
    const Window w = feasible_bounding_window(atlas);
    const CoverageResult r = coverage_estimate(store, model, w, c.samples, c.seed);
    write_text_file(path_in(c.out, "coverage.json"), coverage_json(r, w, c, model).dump(2) + "\n");

    std::ostringstream summary;
    print_atlas_summary(atlas, model, summary);
    print_store_summary(store, summary);
    summary << "coverage " << r.fraction << " +- " << r.half_width << " (" << r.feasible << " feasible of " << r.draws
            << " draws)\n";
    write_text_file(path_in(c.out, "summary.txt"), summary.str());
    std::cout << summary.str();
    return kOk;
  } catch (const std::exception& e) {
    write_text_file(marker, "stage " + stage + ": " + e.what() + "\n");
    std::cerr << "pipeline failed at stage " << stage << ": " << e.what() << '\n';
    return kStageFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regional nonlinear MPC toolkit"};
  app.require_subcommand(1);
  Config c;

  auto add_model = [&](CLI::App* s) { s->add_option("--model", c.model, "builtin:pannocchia2011 or a model JSON file"); };
  auto add_tol = [&](CLI::App* s) {
    s->add_option("--eps-act", c.eps_act, "activity tolerance");
    s->add_option("--eps-lambda", c.eps_lambda, "weak-activity multiplier tolerance");
  };
  auto add_grid = [&](CLI::App* s) {
    s->add_option("--window", c.window, "lo1,hi1,lo2,hi2 (default -6,6,-7,7)");
    s->add_option("--grid", c.grid, "points per axis, one value or one per axis");
  };
  auto add_fit = [&](CLI::App* s) {
    s->add_option("--seed", c.seed, "verification and sampling seed");
    s->add_option("--max-ellipsoids", c.max_ellipsoids, "ellipsoids per feedback class");
    s->add_option("--verify-samples", c.verify_samples, "OCP solves per final verification");
  };

  auto* solve = app.add_subcommand("solve", "solve the OCP at one state");
  add_model(solve);
  add_tol(solve);
  solve->add_option("--x0", c.x0, "initial state, comma separated")->required();

  auto* explore = app.add_subcommand("explore", "solve on a state grid and write the atlas");
  add_model(explore);
  add_tol(explore);
  add_grid(explore);
  explore->add_option("--out", c.out, "atlas JSON path (CSV written alongside)")->required();

  auto* regions = app.add_subcommand("regions", "fit and verify ellipsoids, write the region store");
  add_model(regions);
  add_fit(regions);
  regions->add_option("--atlas", c.atlas, "atlas JSON")->required();
  regions->add_option("--out", c.out, "store JSON path")->required();

  auto* simulate = app.add_subcommand("simulate", "closed-loop simulation");
  add_model(simulate);
  simulate->add_option("--x0", c.x0, "initial state")->required();
  simulate->add_option("--steps", c.steps, "number of steps");
  simulate->add_option("--store", c.store, "region store JSON");
  simulate->add_flag("--no-store", c.no_store, "plain NMPC baseline");
  simulate->add_option("--out", c.out, "trajectory CSV path");

  auto* coverage = app.add_subcommand("coverage", "Monte Carlo coverage of the feasible set");
  add_model(coverage);
  coverage->add_option("--store", c.store, "region store JSON")->required();
  coverage->add_option("--window", c.window, "sampling window lo1,hi1,lo2,hi2");
  coverage->add_option("--atlas", c.atlas, "use the atlas' padded feasible bounding box as window");
  coverage->add_option("--samples", c.samples, "feasible samples to draw (>= 1000)");
  coverage->add_option("--seed", c.seed, "sampling seed");
  coverage->add_option("--out", c.out, "report JSON path");

  auto* pipeline = app.add_subcommand("pipeline", "explore, fit, verify, store, coverage");
  add_model(pipeline);
  add_tol(pipeline);
  add_grid(pipeline);
  add_fit(pipeline);
  pipeline->add_option("--samples", c.samples, "coverage samples");
  pipeline->add_option("--out", c.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadInput;
  }

  try {
    if (solve->parsed()) return cmd_solve(c);
    if (explore->parsed()) return cmd_explore(c);
    if (regions->parsed()) return cmd_regions(c);
    if (simulate->parsed()) return cmd_simulate(c);
    if (coverage->parsed()) return cmd_coverage(c);
    if (pipeline->parsed()) return cmd_pipeline(c);
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const StoreError& e) {
    std::cerr << "store error: " << e.what() << '\n';
    return kStoreError;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kBadInput;
  } catch (const NoFeasibleSamples& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kStageFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
  return kBadInput;
}
