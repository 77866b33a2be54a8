#include "klio_cli/commands.hpp"

#include <chrono>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "klio/errors.hpp"
#include "klio/estimation.hpp"
#include "klio/foc.hpp"
#include "klio/ioc.hpp"
#include "klio/lqg.hpp"
#include "klio/solver.hpp"
#include "klio/text_io.hpp"
#include "klio_cli/manifest.hpp"

namespace klio::cli {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

json load_json(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw ValidationError("cannot open: " + p.string());
  try {
    json j;
    is >> j;
    return j;
  } catch (const json::exception& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

namespace {

// Plot-friendly companion to the dataset format: one CSV row per pair plus
// the terminal state.
void save_trajectory_csv(const Dataset& ds, const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw ValidationError("cannot open for writing: " + p.string());
  os << "k";
  for (int i = 0; i < ds.state_dim(); ++i) os << ",x" << i;
  for (int i = 0; i < ds.input_dim(); ++i) os << ",u" << i;
  os << "\n";
  for (const auto& rec : ds.pairs) {
    os << rec.k;
    for (Eigen::Index i = 0; i < rec.x_prev.size(); ++i)
      os << "," << format_double(rec.x_prev[i]);
    for (Eigen::Index i = 0; i < rec.u.size(); ++i)
      os << "," << format_double(rec.u[i]);
    os << "\n";
  }
  os << ds.pairs.size();
  for (Eigen::Index i = 0; i < ds.terminal.size(); ++i)
    os << "," << format_double(ds.terminal[i]);
  for (int i = 0; i < ds.input_dim(); ++i) os << ",";
  os << "\n";
}

}  // namespace

GridPtr Scenario::state_grid() const {
  return kind == Kind::kPendulum ? pendulum_state_grid(pendulum)
                                 : robot_state_grid(robot);
}

GridPtr Scenario::action_grid() const {
  return kind == Kind::kPendulum ? pendulum_action_grid(pendulum)
                                 : robot_action_grid(robot);
}

Scenario load_scenario(const std::filesystem::path& p) {
  const json j = load_json(p);
  Scenario s;
  const std::string type = j.value("type", "");
  const json params = j.value("params", json::object());
  if (type == "pendulum") {
    s.kind = Scenario::Kind::kPendulum;
    PendulumParams& pp = s.pendulum;
    pp.mass = params.value("mass", pp.mass);
    pp.length = params.value("length", pp.length);
    pp.gravity = params.value("gravity", pp.gravity);
    pp.dt = params.value("dt", pp.dt);
    pp.theta_noise = params.value("theta_noise", pp.theta_noise);
    pp.omega_noise = params.value("omega_noise", pp.omega_noise);
    pp.noise_as_std = params.value("noise_as_std", pp.noise_as_std);
    pp.torque_limit = params.value("torque_limit", pp.torque_limit);
    pp.theta_bins = params.value("theta_bins", pp.theta_bins);
    pp.omega_bins = params.value("omega_bins", pp.omega_bins);
    pp.torque_bins = params.value("torque_bins", pp.torque_bins);
    pp.omega_max = params.value("omega_max", pp.omega_max);
  } else if (type == "robot") {
    s.kind = Scenario::Kind::kRobot;
    RobotParams& rp = s.robot;
    rp.dt = params.value("dt", rp.dt);
    rp.velocity_limit = params.value("velocity_limit", rp.velocity_limit);
    rp.boundary_margin = params.value("boundary_margin", rp.boundary_margin);
    if (params.contains("goal")) rp.goal = vector_from_json(params["goal"]).head<2>();
    if (params.contains("noise_cov")) rp.noise_cov = matrix_from_json(params["noise_cov"]);
    if (params.contains("area")) {
      const auto area = matrix_from_json(params["area"]);
      rp.area_lo = area.row(0).transpose();
      rp.area_hi = area.row(1).transpose();
    }
    if (params.contains("state_bins")) {
      const auto bins = params["state_bins"].get<std::vector<int>>();
      rp.state_bins_x = bins.at(0);
      rp.state_bins_y = bins.at(1);
    }
    rp.action_bins = params.value("action_bins", rp.action_bins);
    for (const auto& jo : params.value("obstacles", json::array())) {
      Obstacle o;
      o.center = vector_from_json(jo.at("center")).head<2>();
      o.cov = matrix_from_json(jo.at("cov"));
      o.radius = jo.value("radius", o.radius);
      rp.obstacles.push_back(std::move(o));
    }
  } else {
    throw ValidationError(p.string() + ": scenario type must be pendulum or robot");
  }
  return s;
}

int run_simulate(const SimulateOptions& opts) {
  const auto t0 = Clock::now();
  const Scenario scenario = load_scenario(opts.scenario);
  std::filesystem::create_directories(opts.out_dir);
  Manifest manifest("simulate", opts.seed);
  manifest.add_input(opts.scenario);
  manifest.set_setting("episodes", opts.episodes);
  manifest.set_setting("steps", opts.steps);
  manifest.set_setting("closed_loop", opts.policy.has_value());

  if (opts.emit_reference_policy) {
    if (scenario.kind != Scenario::Kind::kPendulum)
      throw ValidationError("only the pendulum scenario has a built-in reference policy");
    const auto policy = reference_pendulum_policy(scenario.pendulum,
                                                  opts.reference_policy_noise);
    save_policy_kernel(policy, *opts.emit_reference_policy);
    manifest.set_setting("reference_policy_noise", opts.reference_policy_noise);
    manifest.add_output(*opts.emit_reference_policy);
    manifest.add_timing_ms("simulate", ms_since(t0));
    manifest.write(opts.emit_reference_policy->string() + ".manifest.json");
    return kOk;
  }

  if (opts.policy) {
    const PolicyKernel policy = load_policy_kernel(*opts.policy);
    manifest.add_input(*opts.policy);
    if (opts.start.size() != 2)
      throw ValidationError("closed-loop simulate needs --start <coord> --start <coord>");
    for (int e = 0; e < opts.episodes; ++e) {
      Rng rng = derive_stream(opts.seed, static_cast<std::uint64_t>(e));
      Dataset ds;
      if (scenario.kind == Scenario::Kind::kPendulum) {
        ds = simulate_pendulum_policy(scenario.pendulum, policy,
                                      {opts.start[0], opts.start[1]}, opts.steps, rng);
      } else {
        const auto& rp = scenario.robot;
        const auto sg = scenario.state_grid();
        const auto ag = scenario.action_grid();
        Eigen::Vector2d x(opts.start[0], opts.start[1]);
        for (int k = 1; k <= opts.steps; ++k) {
          const std::int64_t cell = sg->locate(x);
          const std::int64_t a =
              sample_mass(policy.table_at_step(1).row(cell).transpose(), rng);
          StepRecord rec;
          rec.k = k;
          rec.x_prev = x;
          rec.u = ag->center(a);
          ds.pairs.push_back(std::move(rec));
          x = robot_step(rp, x, ag->center(a).head<2>(), rng);
        }
        ds.terminal = x;
      }
      char name[32];
      std::snprintf(name, sizeof(name), "rollout_%04d.txt", e);
      const auto path = opts.out_dir / name;
      save_dataset(ds, path);
      manifest.add_output(path);
      std::snprintf(name, sizeof(name), "rollout_%04d.csv", e);
      const auto csv_path = opts.out_dir / name;
      save_trajectory_csv(ds, csv_path);
      manifest.add_output(csv_path);
    }
  } else {
    Database db;
    if (scenario.kind == Scenario::Kind::kPendulum) {
      db = simulate_pendulum_database(scenario.pendulum, opts.episodes, opts.steps,
                                      opts.seed);
    } else {
      // Uniform-input exploration episodes from uniform starts.
      const auto& rp = scenario.robot;
      for (int e = 0; e < opts.episodes; ++e) {
        Rng rng = derive_stream(opts.seed, static_cast<std::uint64_t>(e));
        Eigen::Vector2d x(
            rp.area_lo[0] + (rp.area_hi[0] - rp.area_lo[0]) * uniform01(rng),
            rp.area_lo[1] + (rp.area_hi[1] - rp.area_lo[1]) * uniform01(rng));
        Dataset ds;
        for (int k = 1; k <= opts.steps; ++k) {
          const Eigen::Vector2d u(
              rp.velocity_limit * (2.0 * uniform01(rng) - 1.0),
              rp.velocity_limit * (2.0 * uniform01(rng) - 1.0));
          StepRecord rec;
          rec.k = k;
          rec.x_prev = x;
          rec.u = u;
          ds.pairs.push_back(std::move(rec));
          x = robot_step(rp, x, u, rng);
        }
        ds.terminal = x;
        db.push_back(std::move(ds));
      }
    }
    for (size_t e = 0; e < db.size(); ++e) {
      char name[32];
      std::snprintf(name, sizeof(name), "episode_%04d.txt", static_cast<int>(e));
      const auto path = opts.out_dir / name;
      save_dataset(db[e], path);
      manifest.add_output(path);
    }
  }
  manifest.add_timing_ms("simulate", ms_since(t0));
  manifest.write(opts.out_dir / "manifest.json");
  return kOk;
}

int run_estimate(const EstimateOptions& opts) {
  const auto t0 = Clock::now();
  const Scenario scenario = load_scenario(opts.scenario);
  Manifest manifest("estimate", 0);
  manifest.add_input(opts.scenario);
  manifest.set_setting("smoothing", opts.smoothing);
  manifest.set_setting("unvisited", opts.unvisited_stay ? "stay" : "uniform");

  Database db;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(opts.database_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".txt")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    db.push_back(load_dataset(f));
    manifest.add_input(f);
  }

  HistogramOptions hist;
  hist.smoothing = opts.smoothing;
  hist.unvisited = opts.unvisited_stay ? HistogramOptions::Unvisited::kStay
                                       : HistogramOptions::Unvisited::kUniform;
  const auto kernel =
      histogram_estimate(db, scenario.state_grid(), scenario.action_grid(), hist);
  save_transition_kernel(kernel, opts.out);
  manifest.add_output(opts.out);
  manifest.add_timing_ms("estimate", ms_since(t0));
  manifest.write(opts.out.string() + ".manifest.json");
  return kOk;
}

namespace {

int run_foc_tabular(const FocOptions& opts, const json& bundle) {
  const auto t0 = Clock::now();
  Manifest manifest("foc", 0);
  manifest.add_input(opts.problem);

  const auto base = opts.problem.parent_path();
  auto resolve = [&](const std::string& rel) { return base / rel; };

  const auto target_path = resolve(bundle.at("target").get<std::string>());
  const auto ref_dyn_path = resolve(bundle.at("reference_dynamics").get<std::string>());
  const auto ref_pol_path = resolve(bundle.at("reference_policy").get<std::string>());
  const auto cost_path = resolve(bundle.at("costs").get<std::string>());
  manifest.add_input(target_path);
  manifest.add_input(ref_dyn_path);
  manifest.add_input(ref_pol_path);
  manifest.add_input(cost_path);

  TransitionKernel target = load_transition_kernel(target_path);
  TransitionKernel ref_dyn = load_transition_kernel(ref_dyn_path);
  PolicyKernel ref_pol = load_policy_kernel(ref_pol_path);
  CostTable costs = load_cost_table(cost_path);

  DiscreteDistribution prior = DiscreteDistribution::uniform(target.state_grid());
  if (bundle.contains("prior") && bundle["prior"].is_string() &&
      bundle["prior"] != "uniform") {
    const auto prior_path = resolve(bundle["prior"].get<std::string>());
    prior = load_distribution(prior_path);
    manifest.add_input(prior_path);
  }

  ControlProblem prob{bundle.value("horizon", 1),
                      std::move(target),
                      std::move(prior),
                      std::move(ref_dyn),
                      std::move(ref_pol),
                      std::move(costs.stages),
                      bundle.value("epsilon", 1.0)};
  manifest.set_setting("horizon", prob.horizon);
  manifest.set_setting("epsilon", prob.epsilon);

  const bool uniform_refs = bundle.value("uniform_references", false);
  const auto tables = backward_recursion(prob);
  const PolicyKernel policy =
      uniform_refs ? uniform_reference_policy(prob) : optimal_policy(prob, tables);
  save_policy_kernel(policy, opts.out_policy);
  manifest.add_output(opts.out_policy);
  manifest.add_timing_ms("foc", ms_since(t0));

  json report;
  report["optimal_cost"] = optimal_cost(prob, tables);
  if (bundle.value("check_boundedness", false)) {
    const auto t1 = Clock::now();
    const auto b = check_boundedness(prob);
    report["boundedness"] = {
        {"verdict", b.bounded ? "bounded" : "possibly unbounded"},
        {"kl_bounds", b.kl_bounds},
        {"exp_moment", b.e_bar},
        {"lower", b.lower},
        {"upper", b.upper},
        {"diagnostic", b.diagnostic}};
    manifest.add_timing_ms("boundedness", ms_since(t1));
  }
  if (!opts.report.empty()) {
    std::ofstream os(opts.report);
    os << report.dump(2) << "\n";
    manifest.add_output(opts.report);
  }
  manifest.write(opts.out_policy.string() + ".manifest.json");
  return kOk;
}

int run_foc_gaussian(const FocOptions& opts, const json& bundle) {
  const auto t0 = Clock::now();
  Manifest manifest("foc-gaussian", 0);
  manifest.add_input(opts.problem);
  const auto base = opts.problem.parent_path();
  const auto model_path = base / bundle.at("model").get<std::string>();
  manifest.add_input(model_path);

  const GaussianLinearModel model = load_gaussian_model(model_path);
  const LqgRecursion rec = lqg_recursion(model);

  // Policy parameters per step: u* = -gain x + offset with covariance
  // sigma_star; emitted as a JSON report.
  json report;
  report["horizon"] = model.horizon;
  report["steps"] = json::array();
  for (int k = 1; k <= model.horizon; ++k) {
    const auto& s = rec.at(k);
    json js;
    js["k"] = k;
    auto dump_matrix = [](const Eigen::MatrixXd& m) {
      std::vector<std::vector<double>> rows;
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        rows.emplace_back(m.row(r).begin(), m.row(r).end());
      return rows;
    };
    js["gain"] = dump_matrix(s.gain);
    js["offset"] = std::vector<double>(s.offset.data(), s.offset.data() + s.offset.size());
    js["sigma_star"] = dump_matrix(s.sigma_star);
    js["S"] = dump_matrix(s.S);
    js["omega"] = s.omega;
    report["steps"].push_back(std::move(js));
  }
  if (bundle.contains("x0")) {
    const Eigen::VectorXd x0 = vector_from_json(bundle["x0"]);
    report["value_at_x0"] = lqg_value(model, rec, x0);
  }
  std::ofstream os(opts.report);
  if (!os) throw ValidationError("cannot write report: " + opts.report.string());
  os << report.dump(2) << "\n";
  manifest.add_output(opts.report);
  manifest.add_timing_ms("foc-gaussian", ms_since(t0));
  manifest.write(opts.report.string() + ".manifest.json");
  return kOk;
}

}  // namespace

int run_foc(const FocOptions& opts) {
  const json bundle = load_json(opts.problem);
  if (opts.gaussian || bundle.value("gaussian", false))
    return run_foc_gaussian(opts, bundle);
  return run_foc_tabular(opts, bundle);
}

int run_ioc_fit(const IocFitOptions& opts) {
  const auto t0 = Clock::now();
  const json bundle = load_json(opts.problem);
  Manifest manifest("ioc-fit", 0);
  manifest.add_input(opts.problem);
  const auto base = opts.problem.parent_path();
  auto resolve = [&](const std::string& rel) { return base / rel; };

  const auto target_path = resolve(bundle.at("target").get<std::string>());
  const auto ref_dyn_path = resolve(bundle.at("reference_dynamics").get<std::string>());
  const auto ref_pol_path = resolve(bundle.at("reference_policy").get<std::string>());
  const auto basis_path = resolve(bundle.at("basis").get<std::string>());
  manifest.add_input(target_path);
  manifest.add_input(ref_dyn_path);
  manifest.add_input(ref_pol_path);
  manifest.add_input(basis_path);

  IocProblem prob{{},
                  load_transition_kernel(target_path),
                  load_transition_kernel(ref_dyn_path),
                  load_policy_kernel(ref_pol_path),
                  load_feature_basis(basis_path),
                  bundle.value("mode", "stationary") == "per-step"
                      ? WeightMode::kPerStep
                      : WeightMode::kStationary,
                  bundle.value("constraint", "none") == "nonpositive"
                      ? WeightConstraint::kNonpositive
                      : WeightConstraint::kNone,
                  bundle.value("ridge", 0.0)};

  const auto& sg = *prob.target.state_grid();
  const auto& ag = *prob.target.action_grid();
  for (const auto& obs_file : bundle.at("observations")) {
    const auto path = resolve(obs_file.get<std::string>());
    manifest.add_input(path);
    const Dataset ds = load_dataset(path);
    for (const auto& rec : ds.pairs)
      prob.observations.push_back({sg.locate(rec.x_prev), ag.locate(rec.u)});
  }
  manifest.set_setting("observations", prob.observations.size());
  manifest.set_setting("mode", bundle.value("mode", "stationary"));
  manifest.set_setting("constraint", bundle.value("constraint", "none"));
  manifest.set_setting("ridge", prob.ridge);

  SolverConfig solver;
  if (bundle.contains("solver")) {
    const auto& js = bundle["solver"];
    solver.gradient_tolerance = js.value("gradient_tolerance", solver.gradient_tolerance);
    solver.max_iterations = js.value("max_iterations", solver.max_iterations);
    solver.memory = js.value("memory", solver.memory);
  }

  const IocFit result = fit(prob, solver);
  WeightsFile wf{result.weights, to_string(result.status), result.nll,
                 result.gradient_norm, result.iterations};
  save_weights(wf, opts.out_weights);
  manifest.add_output(opts.out_weights);

  if (!opts.out_cost.empty()) {
    CostTable table;
    table.grid = prob.target.state_grid();
    if (prob.mode == WeightMode::kStationary) {
      table.stages = {reconstruct_cost(prob.basis, sg, result.weights)};
    } else {
      table.stages = reconstruct_cost_per_step(
          prob.basis, sg, result.weights,
          static_cast<int>(prob.observations.size()));
    }
    save_cost_table(table, opts.out_cost);
    manifest.add_output(opts.out_cost);
  }
  manifest.add_timing_ms("ioc-fit", ms_since(t0));
  manifest.write(opts.out_weights.string() + ".manifest.json");
  return result.status == SolveStatus::kConverged ? kOk : kNonConvergence;
}

int run_eval(const EvalOptions& opts) {
  const auto t0 = Clock::now();
  Manifest manifest("eval", 0);
  manifest.add_input(opts.true_cost);
  manifest.add_input(opts.estimated_cost);

  const CostTable truth = load_cost_table(opts.true_cost);
  const CostTable estimate = load_cost_table(opts.estimated_cost);
  if (truth.stages.size() != estimate.stages.size())
    throw ValidationError("eval: cost tables have different stage counts");

  json report;
  report["discrepancy"] = json::array();
  for (size_t i = 0; i < truth.stages.size(); ++i) {
    const auto d = cost_discrepancy(truth.stages[i], estimate.stages[i]);
    report["discrepancy"].push_back(
        d.infinite ? json("infinite") : json(d.value));
  }

  if (opts.scenario && opts.policy) {
    const Scenario scenario = load_scenario(*opts.scenario);
    const PolicyKernel policy = load_policy_kernel(*opts.policy);
    manifest.add_input(*opts.scenario);
    manifest.add_input(*opts.policy);
    if (opts.start.size() != 2)
      throw ValidationError("closed-loop eval needs --start <coord> --start <coord>");
    int successes = 0;
    for (int r = 0; r < opts.runs; ++r) {
      Rng rng = derive_stream(opts.seed, static_cast<std::uint64_t>(r));
      bool ok = false;
      if (scenario.kind == Scenario::Kind::kPendulum) {
        PendulumState s{opts.start[0], opts.start[1]};
        const auto sg = scenario.state_grid();
        const auto ag = scenario.action_grid();
        for (int k = 0; k < opts.steps && !ok; ++k) {
          const std::int64_t cell = sg->locate(Eigen::Vector2d(s.theta, s.omega));
          const std::int64_t a =
              sample_mass(policy.table_at_step(1).row(cell).transpose(), rng);
          s = pendulum_step(scenario.pendulum, s, ag->center(a)[0], rng);
          ok = std::abs(s.theta) < opts.success_radius;
        }
      } else {
        Eigen::Vector2d x(opts.start[0], opts.start[1]);
        const auto sg = scenario.state_grid();
        const auto ag = scenario.action_grid();
        for (int k = 0; k < opts.steps && !ok; ++k) {
          const std::int64_t cell = sg->locate(x);
          const std::int64_t a =
              sample_mass(policy.table_at_step(1).row(cell).transpose(), rng);
          x = robot_step(scenario.robot, x, ag->center(a).head<2>(), rng);
          ok = (x - scenario.robot.goal).norm() < opts.success_radius;
        }
      }
      successes += ok;
    }
    report["closed_loop"] = {{"runs", opts.runs},
                             {"successes", successes},
                             {"success_rate", double(successes) / opts.runs},
                             {"success_radius", opts.success_radius},
                             {"steps", opts.steps}};
    manifest.set_setting("runs", opts.runs);
    manifest.set_setting("steps", opts.steps);
  }

  std::ofstream os(opts.out);
  if (!os) throw ValidationError("cannot write report: " + opts.out.string());
  os << report.dump(2) << "\n";
  manifest.add_output(opts.out);
  manifest.add_timing_ms("eval", ms_since(t0));
  manifest.write(opts.out.string() + ".manifest.json");
  return kOk;
}

}  // namespace klio::cli
