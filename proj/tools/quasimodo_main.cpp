#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "quasimodo/bounds.hpp"
#include "quasimodo/config.hpp"
#include "quasimodo/data_efficiency.hpp"
#include "quasimodo/errors.hpp"
#include "quasimodo/experiments.hpp"

using namespace quasimodo;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 4;
};

ExperimentConfig load_with_overrides(const CommonArgs& args) {
  ExperimentConfig config = load_config(args.config_path);
  if (!args.out_dir.empty()) config.out_dir = args.out_dir;
  if (args.seed_set) config.seed = args.seed;
  return config;
}

int run_generate(const CommonArgs& args, const std::string& data_override) {
  ExperimentConfig config = load_with_overrides(args);
  const std::string out = config.out_dir;
  write_run_manifest(out, "generate", config, config.seed);
  const std::string path = cmd_generate(config, out);
  std::printf("dataset written to %s\n", path.c_str());
  (void)data_override;
  return 0;
}

int run_train(const CommonArgs& args, const std::string& data_override) {
  ExperimentConfig config = load_with_overrides(args);
  const std::string out = config.out_dir;
  const std::string data = data_override.empty() ? out + "/dataset.csv" : data_override;
  write_run_manifest(out, "train", config, config.seed);
  const TrainReport report = cmd_train(config, data, out);
  std::printf("model written to %s\n", report.model_path.c_str());
  std::printf("held-out one-step relative error: %.6g over %ld transitions\n",
              report.holdout_rel_error, report.holdout_transitions);
  if (report.pod_retained_energy >= 0.0) {
    std::printf("pod retained energy: %.8f\n", report.pod_retained_energy);
  }
  return 0;
}

int run_mpc_cmd(const CommonArgs& args, const std::string& model_override) {
  ExperimentConfig config = load_with_overrides(args);
  const std::string out = config.out_dir;
  const std::string model = model_override.empty() ? out + "/model.json" : model_override;
  write_run_manifest(out, "mpc", config, config.seed);
  const MpcRunReport report = cmd_mpc(config, model, out);
  auto print = [](const char* tag, const TrackingMetrics& m) {
    std::printf("%s: mse=%.6g mean_abs=%.6g max_abs=%.6g\n", tag, m.mse, m.mean_abs, m.max_abs);
  };
  if (report.result.interpolate) print("interpolate", report.interp_metrics);
  if (report.result.sur) print("sur", report.sur_metrics);
  return 0;
}

int run_verify_bounds(const CommonArgs& args) {
  ExperimentConfig config = load_with_overrides(args);
  const std::string out = config.out_dir;
  write_run_manifest(out, "verify-bounds", config, config.seed);
  BoundExperimentConfig bc = config.bound_experiment.value_or(BoundExperimentConfig{});
  const BoundExperimentReport report = verify_bounds_experiment(bc);
  write_bound_report(out, report, bc);
  std::printf("E3=%.6g E2b=%.6g violations=%zu\n", report.composites.E3, report.composites.E2b,
              report.violations.size());
  std::printf("final state: interpolate |y|_inf=%.4f sur |y|_inf=%.4f\n",
              report.loop_interp.y_final.lpNorm<Eigen::Infinity>(),
              report.loop_sur.y_final.lpNorm<Eigen::Infinity>());
  assert_no_violations(report);
  std::printf("bound report written to %s\n", out.c_str());
  return 0;
}

int run_data_efficiency(const CommonArgs& args) {
  ExperimentConfig config = load_with_overrides(args);
  const std::string out = config.out_dir;
  if (!config.data_efficiency) {
    throw ConfigError("data_efficiency", "section required for this command");
  }
  if (config.system_name != "lorenz_affine" && config.system_name != "lorenz_cos") {
    throw ConfigError("system.name", "data-efficiency study supports the Lorenz systems");
  }
  write_run_manifest(out, "data-efficiency", config, config.data_efficiency->seed);
  const DataEfficiencyResult result = run_data_efficiency(
      config.make_system(), config.box, config.make_V(), *config.data_efficiency, args.workers);
  const std::string path = out + "/data_efficiency.csv";
  write_data_efficiency_csv(path, result);
  std::printf("size  ens(V)    aug(V)    ens(U)    aug(U)\n");
  for (const auto& c : result.cells) {
    std::printf("%-6ld %.4f    %.4f    %.4f    %.4f\n", c.size, c.ens_v_mean, c.aug_v_mean,
                c.ens_u_mean, c.aug_u_mean);
  }
  std::printf("written to %s\n", path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QuaSiModO: quantized control sets, per-control surrogates, relaxed MPC"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string data_override, model_override;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", args.out_dir, "output directory override");
    sub->add_option("--seed", args.seed, "seed override")->each([&](const std::string&) {
      args.seed_set = true;
    });
    sub->add_option("--workers", args.workers, "worker threads for parallel studies");
  };

  CLI::App* gen = app.add_subcommand("generate", "simulate training data");
  add_common(gen);
  CLI::App* train = app.add_subcommand("train", "fit the configured surrogate");
  add_common(train);
  train->add_option("--data", data_override, "dataset path (default <out>/dataset.csv)");
  CLI::App* mpc = app.add_subcommand("mpc", "closed-loop control run");
  add_common(mpc);
  mpc->add_option("--model", model_override, "model path (default <out>/model.json)");
  CLI::App* vb = app.add_subcommand("verify-bounds", "error-bound experiment");
  add_common(vb);
  CLI::App* de = app.add_subcommand("data-efficiency", "ensemble-vs-augmented ESN study");
  add_common(de);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_generate(args, data_override);
    if (train->parsed()) return run_train(args, data_override);
    if (mpc->parsed()) return run_mpc_cmd(args, model_override);
    if (vb->parsed()) return run_verify_bounds(args);
    if (de->parsed()) return run_data_efficiency(args);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
