#include "occslam/cli.hpp"

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "occslam/experiment.hpp"
#include "occslam/io.hpp"
#include "occslam/simulator.hpp"

namespace occslam {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path DefaultOutDir() {
  const char* env = std::getenv(kOutDirEnv);
  return env && *env ? fs::path(env) : fs::path("occslam_out");
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
  std::string world_file;
  std::string trajectory_file;
  int poses = 0;
  std::uint64_t seed = 1;
  double odom_sigma_xy = NoiseSpec{}.odom_xy_sigma;
  double odom_sigma_theta = NoiseSpec{}.odom_theta_sigma;
  double range_sigma = SensorSpec{}.range_noise_sigma;
  int beams = SensorSpec{}.n_beams;
  double range_max = SensorSpec{}.range_max;
  std::string out;
};

int RunSimulate(const SimulateArgs& a, std::ostream& out) {
  World world;
  std::vector<Pose2> trajectory;
  if (!a.scenario.empty()) {
    Scenario sc = MakeScenario(a.scenario, a.poses);
    world = std::move(sc.world);
    trajectory = std::move(sc.trajectory);
  } else {
    if (a.trajectory_file.empty()) throw UsageError("--world needs --trajectory");
    world = ParseWorld(a.world_file);
    trajectory = Reanchor(ParseTrajectory(fs::path(a.trajectory_file)));
  }
  SensorSpec sensor;
  sensor.n_beams = a.beams;
  sensor.range_max = a.range_max;
  sensor.range_noise_sigma = a.range_sigma;
  NoiseSpec noise{a.odom_sigma_xy, a.odom_sigma_theta, a.seed};
  const Dataset ds = GenerateDataset(world, trajectory, sensor, noise);

  const fs::path dir = a.out.empty() ? DefaultOutDir() : fs::path(a.out);
  fs::create_directories(dir);
  WriteDataset(ds, dir / "dataset.txt");
  WriteWorld(world, dir / "world.json");
  WriteTrajectory(trajectory, dir / "ground_truth.txt");
  out << "wrote " << ds.size() << " scans to " << (dir / "dataset.txt").string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct SolveArgs {
  std::string dataset;
  std::string init = "odometry";
  std::string init_file;
  std::vector<double> perturb;
  std::string map_model = "continuous";
  std::string gradient = "node-blend";
  bool no_step_control = false;
  bool no_map_refit = false;
  bool quiet = false;
  ClassifyOptions classify;
  std::string out;
};

int RunSolve(const SolveArgs& a, SolverConfig config, std::ostream& out) {
  const Dataset ds = ParseDataset(fs::path(a.dataset));
  config.map_model = ParseMapModel(a.map_model);
  config.gradient_model = ParseGradientModel(a.gradient);
  config.step_control = !a.no_step_control;
  config.map_refit = !a.no_map_refit;

  std::vector<Pose2> init;
  if (a.init == "odometry") {
    if (!ds.HasOdometry()) throw std::runtime_error("dataset has no odometry to integrate");
    init = IntegrateOdometry(ds);
  } else if (!a.init_file.empty()) {
    init = ParseTrajectory(fs::path(a.init_file));
  } else if (ds.HasInitialPoses()) {
    init = ds.InitialPoses();
  } else {
    throw UsageError("--init file needs --init-file or INIT poses in the dataset");
  }
  if (init.size() != ds.size()) {
    throw std::runtime_error("initial trajectory has " + std::to_string(init.size()) +
                             " poses, dataset has " + std::to_string(ds.size()) + " scans");
  }
  if (!a.perturb.empty()) {
    init = PerturbPoses(Reanchor(init), a.perturb[0], a.perturb[1],
                        static_cast<std::uint64_t>(a.perturb[2]));
  }

  ProgressCallback progress;
  if (!a.quiet) {
    progress = [&out](const IterationInfo& it) {
      out << "iter " << std::setw(3) << it.k << "  cost " << std::setprecision(10) << it.cost
          << "  |d|^2 " << std::setprecision(4) << it.step_sq_norm << "  w_s " << it.w_s
          << "  halvings " << it.halvings << (it.accepted ? "" : "  (rejected)") << '\n';
    };
  }
  const SolveResult result = Solve(ds, init, config, progress);

  std::optional<Metrics> metrics;
  if (ds.HasGroundTruth()) {
    metrics = EvaluateAgainstGroundTruth(ds, result.poses, result.map, result.hits, config, true,
                                         a.classify);
  }
  const fs::path dir = a.out.empty() ? DefaultOutDir() : fs::path(a.out);
  const CovarianceSummary* cov = result.report.covariance ? &*result.report.covariance : nullptr;
  const OutputFiles files = WriteOutputs(result.poses, result.map, result.hits, cov, dir,
                                         metrics ? &*metrics : nullptr, a.classify);
  WriteSolveReport(result.report, dir / "report.txt");

  out << "stop: " << result.report.stop_reason << " after " << result.report.iterations
      << " iterations, cost " << std::setprecision(10) << result.report.final_cost << '\n';
  if (metrics) {
    out << "translation MAE " << metrics->poses.mae_translation << " m, rotation MAE "
        << metrics->poses.mae_rotation << " rad";
    if (metrics->map) out << ", map AUC " << metrics->map->auc;
    out << '\n';
  }
  out << "outputs in " << dir.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string estimate;
  std::string gt;
  std::string dataset;
  std::string grid;
  double min_beam_range = kDefaultMinBeamRange;
  ClassifyOptions classify;
  std::string out;
};

void PrintMetrics(const Metrics& m, std::ostream& out) {
  out << "mae_translation " << m.poses.mae_translation << '\n'
      << "mae_rotation " << m.poses.mae_rotation << '\n'
      << "rmse_translation " << m.poses.rmse_translation << '\n'
      << "rmse_rotation " << m.poses.rmse_rotation << '\n';
  if (m.map) {
    out << "auc " << m.map->auc << '\n' << "known_precision " << m.map->known_precision << '\n';
  }
}

int RunEvaluate(const EvaluateArgs& a, std::ostream& out) {
  if (a.gt.empty() == a.dataset.empty()) {
    throw UsageError("give exactly one of --gt and --dataset");
  }
  const std::vector<Pose2> estimate = ParseTrajectory(fs::path(a.estimate));
  std::optional<Dataset> ds;
  std::vector<Pose2> gt;
  if (!a.gt.empty()) {
    gt = ParseTrajectory(fs::path(a.gt));
  } else {
    ds = ParseDataset(fs::path(a.dataset));
    if (!ds->HasGroundTruth()) throw std::runtime_error("dataset has no ground-truth poses");
    gt = ds->GroundTruth();
  }
  Metrics m{PoseErrors(estimate, Reanchor(gt)), std::nullopt};
  if (!a.grid.empty()) {
    if (!ds) throw UsageError("--grid needs --dataset to build the reference map");
    const GridFile grid = ParseGrid(a.grid);
    SolverConfig cfg;
    cfg.min_beam_range = a.min_beam_range;
    m = EvaluateAgainstGroundTruth(*ds, estimate, grid.map, grid.hits, cfg, true, a.classify);
  }
  PrintMetrics(m, out);
  if (!a.out.empty()) WriteMetrics(m, a.out);
  return 0;
}

// ---------------------------------------------------------------------------

struct SubsampleArgs {
  double rate = 0.5;
  std::string in;
  std::string out;
};

int RunSubsample(const SubsampleArgs& a, std::ostream& out) {
  const Dataset ds = ParseDataset(fs::path(a.in));
  const Dataset sub = Subsample(ds, a.rate);
  WriteDataset(sub, fs::path(a.out));
  out << "kept " << sub.size() << " of " << ds.size() << " scans\n";
  return 0;
}

void AddClassifyFlags(CLI::App* app, ClassifyOptions* c) {
  app->add_option("--p-occupied", c->p_occupied, "Probability at or above which a cell is occupied")
      ->capture_default_str();
  app->add_option("--p-free", c->p_free, "Probability at or below which a cell is free")
      ->capture_default_str();
}

}  // namespace

int CliMain(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint pose and continuous occupancy map optimization for 2D lidar"};
  app.name("occslam");
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset");
  auto* scenario_opt = simulate->add_option("--scenario", sim.scenario, "Built-in scenario")
                           ->check(CLI::IsMember(ScenarioNames()));
  auto* world_opt = simulate->add_option("--world", sim.world_file, "World JSON file")
                        ->check(CLI::ExistingFile);
  scenario_opt->excludes(world_opt);
  simulate->add_option("--trajectory", sim.trajectory_file, "Trajectory file for --world")
      ->check(CLI::ExistingFile);
  simulate->add_option("--poses", sim.poses, "Number of poses (0: scenario default)")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--seed", sim.seed, "Noise seed")->capture_default_str();
  simulate->add_option("--odom-sigma-xy", sim.odom_sigma_xy, "Odometry noise, meters")
      ->capture_default_str();
  simulate->add_option("--odom-sigma-theta", sim.odom_sigma_theta, "Odometry noise, radians")
      ->capture_default_str();
  simulate->add_option("--range-sigma", sim.range_sigma, "Range noise, meters")
      ->capture_default_str();
  simulate->add_option("--beams", sim.beams, "Beams per scan")->capture_default_str();
  simulate->add_option("--range-max", sim.range_max, "Sensor range, meters")
      ->capture_default_str();
  simulate->add_option("--out", sim.out, "Output directory (default $OCCSLAM_OUT_DIR)");

  SolveArgs sol;
  SolverConfig cfg;
  CLI::App* solve = app.add_subcommand("solve", "Optimize poses and map for a dataset");
  solve->add_option("dataset", sol.dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  solve->add_option("--init", sol.init, "Initial guess source")
      ->check(CLI::IsMember({"odometry", "file"}))
      ->capture_default_str();
  solve->add_option("--init-file", sol.init_file, "Trajectory file for --init file")
      ->check(CLI::ExistingFile);
  solve->add_option("--perturb-init", sol.perturb,
                    "Add Gaussian noise to the initial poses: SIGMA_XY SIGMA_THETA SEED")
      ->expected(3);
  solve->add_option("--resolution", cfg.resolution_s, "Node and sample spacing, meters")
      ->capture_default_str();
  solve->add_option("--w-z", cfg.w_z, "Observation weight")->capture_default_str();
  solve->add_option("--w-o", cfg.w_o, "Odometry weight")->capture_default_str();
  solve->add_option("--w-s", cfg.w_s_initial, "Initial smoothing weight")->capture_default_str();
  solve->add_option("--d-s", cfg.d_s, "Smoothing weight divisor per annealing")
      ->capture_default_str();
  solve->add_option("--tau-s", cfg.tau_s, "Iterations between annealings")->capture_default_str();
  solve->add_option("--tau-k", cfg.tau_k, "Maximum iterations")->capture_default_str();
  solve->add_option("--tau-delta", cfg.tau_delta, "Stop when the squared step is below this")
      ->capture_default_str();
  solve->add_option("--w-s-floor", cfg.w_s_floor, "Lower bound on the smoothing weight")
      ->capture_default_str();
  solve->add_option("--margin", cfg.map_margin, "Map margin, meters")->capture_default_str();
  solve->add_flag("--no-step-control", sol.no_step_control, "Accept every Gauss-Newton step");
  solve->add_flag("--no-map-refit", sol.no_map_refit,
                  "Take the map part of the joint step instead of re-solving the map");
  solve->add_option("--max-halvings", cfg.max_halvings, "Step halvings before giving up")
      ->capture_default_str();
  solve->add_option("--tikhonov", cfg.tikhonov, "Diagonal regularization of the normal matrix")
      ->capture_default_str();
  solve->add_option("--min-hits", cfg.min_hits, "Drop samples whose hit count is below this")
      ->capture_default_str();
  solve->add_option("--min-beam-range", cfg.min_beam_range, "Ignore beams shorter than this")
      ->capture_default_str();
  solve->add_option("--map-model", sol.map_model, "Map read-out")
      ->check(CLI::IsMember({"continuous", "discrete"}))
      ->capture_default_str();
  solve->add_flag_callback("--discrete-map", [&sol] { sol.map_model = "discrete"; },
                           "Same as --map-model discrete");
  solve->add_option("--gradient", sol.gradient, "Map gradient model")
      ->check(CLI::IsMember({"node-blend", "exact"}))
      ->capture_default_str();
  solve->add_flag("--covariance", cfg.compute_covariance, "Export marginal uncertainty");
  solve->add_option("--threads", cfg.threads, "Worker threads (1 is deterministic)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  solve->add_flag("--quiet", sol.quiet, "No per-iteration progress");
  AddClassifyFlags(solve, &sol.classify);
  solve->add_option("--out", sol.out, "Output directory (default $OCCSLAM_OUT_DIR)");

  EvaluateArgs ev;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Compare an estimate with ground truth");
  evaluate->add_option("--estimate", ev.estimate, "Estimated trajectory file")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--gt", ev.gt, "Ground-truth trajectory file")->check(CLI::ExistingFile);
  evaluate->add_option("--dataset", ev.dataset, "Dataset with ground-truth poses")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--grid", ev.grid, "Estimated grid file (needs --dataset)")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--min-beam-range", ev.min_beam_range, "Beam cutoff of the reference map")
      ->capture_default_str();
  AddClassifyFlags(evaluate, &ev.classify);
  evaluate->add_option("--out", ev.out, "Metrics file");

  SubsampleArgs sub;
  CLI::App* subsample = app.add_subcommand("subsample", "Keep every k-th scan, k = round(1/rate)");
  subsample->add_option("--rate", sub.rate, "Fraction of scans kept")
      ->check(CLI::Range(1e-6, 1.0))
      ->capture_default_str();
  subsample->add_option("input", sub.in, "Input dataset")->required()->check(CLI::ExistingFile);
  subsample->add_option("output", sub.out, "Output dataset")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto parsed = app.get_subcommands();
    err << (parsed.empty() ? app.help() : parsed.front()->help());
    return 2;
  }

  try {
    if (simulate->parsed()) return RunSimulate(sim, out);
    if (solve->parsed()) return RunSolve(sol, cfg, out);
    if (evaluate->parsed()) return RunEvaluate(ev, out);
    if (subsample->parsed()) return RunSubsample(sub, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

int CliMain(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return CliMain(args, std::cout, std::cerr);
}

}  // namespace occslam
