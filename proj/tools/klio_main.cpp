#include <CLI11.hpp>
#include <iostream>

#include "klio/errors.hpp"
#include "klio_cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace klio::cli;

  CLI::App app{"klio: KL-regularized forward and inverse optimal control"};
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand(
      "simulate", "Generate exploration databases or closed-loop rollouts");
  simulate->add_option("--scenario", sim.scenario, "scenario JSON")->required();
  simulate->add_option("--out", sim.out_dir, "output directory")->required();
  simulate->add_option("--seed", sim.seed, "root seed");
  simulate->add_option("--episodes", sim.episodes, "number of episodes");
  simulate->add_option("--steps", sim.steps, "steps per episode");
  std::string policy_path;
  simulate->add_option("--policy", policy_path, "closed-loop policy file");
  simulate->add_option("--start", sim.start, "start state for closed-loop runs");
  std::string emit_reference;
  simulate->add_option("--emit-reference-policy", emit_reference,
                       "write the scenario's reference policy kernel and exit");
  simulate->add_option("--reference-policy-noise", sim.reference_policy_noise,
                       "torque noise of the emitted reference policy");

  EstimateOptions est;
  auto* estimate =
      app.add_subcommand("estimate", "Histogram transition kernel from datasets");
  estimate->add_option("--scenario", est.scenario, "scenario JSON")->required();
  estimate->add_option("--db", est.database_dir, "dataset directory")->required();
  estimate->add_option("--out", est.out, "kernel output file")->required();
  estimate->add_option("--smoothing", est.smoothing, "additive smoothing");
  estimate->add_flag("--unvisited-stay", est.unvisited_stay,
                     "unvisited rows become stay instead of uniform");

  FocOptions foc;
  auto* foc_cmd = app.add_subcommand(
      "foc", "Forward optimal control: policy, optimal cost, diagnostics");
  foc_cmd->add_option("--problem", foc.problem, "problem bundle JSON")->required();
  foc_cmd->add_option("--out-policy", foc.out_policy, "policy output file");
  foc_cmd->add_option("--report", foc.report, "JSON report output");
  foc_cmd->add_flag("--gaussian", foc.gaussian, "Gaussian-linear closed form");

  IocFitOptions ioc;
  auto* ioc_cmd =
      app.add_subcommand("ioc-fit", "Maximum-likelihood cost reconstruction");
  ioc_cmd->add_option("--problem", ioc.problem, "problem bundle JSON")->required();
  ioc_cmd->add_option("--out-weights", ioc.out_weights, "weights output")->required();
  ioc_cmd->add_option("--out-cost", ioc.out_cost, "reconstructed cost output");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Compare true and reconstructed costs");
  eval_cmd->add_option("--true", eval.true_cost, "true cost table")->required();
  eval_cmd->add_option("--estimate", eval.estimated_cost, "estimated cost table")
      ->required();
  eval_cmd->add_option("--out", eval.out, "JSON report output")->required();
  std::string eval_scenario, eval_policy;
  eval_cmd->add_option("--scenario", eval_scenario,
                       "scenario for the closed-loop success metric");
  eval_cmd->add_option("--policy", eval_policy, "policy for the success metric");
  eval_cmd->add_option("--start", eval.start, "start state for the success metric");
  eval_cmd->add_option("--runs", eval.runs, "number of seeded runs");
  eval_cmd->add_option("--steps", eval.steps, "steps per run");
  eval_cmd->add_option("--success-radius", eval.success_radius, "success threshold");
  eval_cmd->add_option("--seed", eval.seed, "root seed for the runs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      if (!policy_path.empty()) sim.policy = policy_path;
      if (!emit_reference.empty()) sim.emit_reference_policy = emit_reference;
      return run_simulate(sim);
    }
    if (estimate->parsed()) return run_estimate(est);
    if (foc_cmd->parsed()) return run_foc(foc);
    if (ioc_cmd->parsed()) return run_ioc_fit(ioc);
    if (eval_cmd->parsed()) {
      if (!eval_scenario.empty()) eval.scenario = eval_scenario;
      if (!eval_policy.empty()) eval.policy = eval_policy;
      return run_eval(eval);
    }
  } catch (const klio::ValidationError& e) {
    std::cerr << "{\"error\": \"validation\", \"message\": \"" << e.what() << "\"}\n";
    return kValidationFailure;
  } catch (const klio::NumericalError& e) {
    std::cerr << "{\"error\": \"numerical\", \"message\": \"" << e.what() << "\"}\n";
    return kNumericalFailure;
  } catch (const klio::ConvergenceError& e) {
    std::cerr << "{\"error\": \"non-convergence\", \"message\": \"" << e.what()
              << "\"}\n";
    return kNonConvergence;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\": \"internal\", \"message\": \"" << e.what() << "\"}\n";
    return kValidationFailure;
  }
  return kOk;
}
