#include "resode/experiment.hpp"
#include "resode/io.hpp"
#include "resode/model_io.hpp"
#include "resode/svg.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;

namespace {

using namespace resode;

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  double h = 0.0;
  std::string block;
  int depth = 0;
  bool batchnorm = false;
  bool no_batchnorm = false;
  bool trajectory = false;

  CLI::Option* o_seed = nullptr;
  CLI::Option* o_out = nullptr;
  CLI::Option* o_h = nullptr;
  CLI::Option* o_block = nullptr;
  CLI::Option* o_depth = nullptr;
  CLI::Option* o_bn = nullptr;
  CLI::Option* o_nobn = nullptr;
  CLI::Option* o_traj = nullptr;
};

void add_common(CLI::App* sub, CommonArgs& a) {
  sub->set_help_flag("--help", "print help");  // frees -h for the step size
  sub->add_option("--config", a.config_path,
                  "experiment config (JSON); defaults apply when omitted");
  a.o_seed = sub->add_option("--seed", a.seed, "master seed override");
  a.o_out = sub->add_option("--out-dir", a.out_dir, "output directory");
  a.o_h = sub->add_option("--h", a.h, "explicit step size override");
  a.o_block = sub->add_option("--block", a.block, "residual | shrinkage")
                  ->check(CLI::IsMember({"residual", "shrinkage"}));
  a.o_depth = sub->add_option("--depth", a.depth, "number of blocks");
  a.o_bn = sub->add_flag("--batchnorm", a.batchnorm, "enable batch norm");
  a.o_nobn = sub->add_flag("--no-batchnorm", a.no_batchnorm,
                           "disable batch norm");
  a.o_traj = sub->add_flag("--trajectory", a.trajectory,
                           "emit trajectory grids (width-2 networks)");
}

// command-line flags win over config file keys
ExperimentConfig load_with_overrides(const CommonArgs& a) {
  ExperimentConfig cfg = a.config_path.empty()
                             ? parse_experiment_config("{}")
                             : load_experiment_config(a.config_path);
  if (a.o_seed->count()) cfg.seed = a.seed;
  if (a.o_out->count()) cfg.out_dir = a.out_dir;
  if (a.o_h->count()) cfg.network.h = a.h;
  if (a.o_block->count())
    cfg.network.block_kind = block_kind_from_string(a.block);
  if (a.o_depth->count()) cfg.network.depth = a.depth;
  if (a.o_bn->count()) cfg.network.use_batchnorm = true;
  if (a.o_nobn->count()) cfg.network.use_batchnorm = false;
  if (a.o_traj->count()) cfg.trajectory.enabled = true;
  return cfg;
}

fs::path out_path(const ExperimentConfig& cfg, const std::string& name) {
  return fs::path(cfg.out_dir) / name;
}

int run_generate(const ExperimentConfig& cfg) {
  if (cfg.dataset.kind != DatasetConfig::Kind::Moons) {
    std::cerr << "generate: only the builtin moons source can be generated\n";
    return 1;
  }
  const BuiltData data = build_dataset(cfg);
  write_text_atomic(out_path(cfg, "train.csv").string(),
                    dataset_csv(data.train));
  write_text_atomic(out_path(cfg, "test.csv").string(),
                    dataset_csv(data.test));
  write_text_atomic(out_path(cfg, "moons.svg").string(),
                    dataset_pair_svg(data.train, data.test));
  std::cout << "wrote " << out_path(cfg, "train.csv").string() << " ("
            << data.train.size() << " rows), "
            << out_path(cfg, "test.csv").string() << " (" << data.test.size()
            << " rows), " << out_path(cfg, "moons.svg").string() << "\n";
  return 0;
}

int run_train(const ExperimentConfig& cfg) {
  const BuiltData data = build_dataset(cfg);
  if (data.csv_rows_dropped > 0)
    std::cout << "dropped " << data.csv_rows_dropped
              << " rows with missing values\n";
  const NetworkConfig net = resolve_network(cfg, data);

  const TrainResult result = train(net, cfg.train, data.train, data.test);
  save_model(out_path(cfg, "model.json").string(), result.model, net);
  write_text_atomic(out_path(cfg, "history.csv").string(),
                    history_csv(result.history));

  if (cfg.trajectory.enabled) {
    if (net.width != 2) {
      std::cerr << "train: trajectory grids need a width-2 network\n";
      return 1;
    }
    std::vector<int> schedule = cfg.trajectory.layers.empty()
                                    ? default_layer_schedule(net.depth)
                                    : cfg.trajectory.layers;
    const TrajectoryRecord rec =
        capture_trajectory(result.model, net, data.test, schedule);
    if (!rec.snapshots.empty()) {  // empty only when layer 0 is non-finite
      write_text_atomic(out_path(cfg, "trajectory_scaled.svg").string(),
                        trajectory_grid_svg(rec, false));
      write_text_atomic(out_path(cfg, "trajectory_fixed.svg").string(),
                        trajectory_grid_svg(rec, true));
    }
  }

  if (result.history.diverged) {
    std::cerr << "training diverged at layer " << result.history.diverged_layer
              << " during epoch " << result.history.diverged_epoch
              << "; partial outputs written to " << cfg.out_dir << "\n";
    return 2;
  }
  std::cout << "final train accuracy "
            << fmt_full(result.history.train_acc.back())
            << ", test accuracy " << fmt_full(result.history.test_acc.back())
            << "\n";
  return 0;
}

int run_sweep(const ExperimentConfig& cfg) {
  const BuiltData data = build_dataset(cfg);
  if (data.csv_rows_dropped > 0)
    std::cout << "dropped " << data.csv_rows_dropped
              << " rows with missing values\n";
  const NetworkConfig net = resolve_network(cfg, data);

  const SweepReport report =
      sweep(net, cfg.train, cfg.sweep.h_grid, cfg.sweep.n_trials, data.train,
            data.test, cfg.seed, cfg.sweep.variants);
  write_text_atomic(out_path(cfg, "sweep.csv").string(), sweep_csv(report));
  write_text_atomic(out_path(cfg, "sweep_summary.csv").string(),
                    sweep_summary_csv(report));
  write_text_atomic(out_path(cfg, "accuracy_vs_h.svg").string(),
                    accuracy_vs_h_svg(report));

  for (const auto& cell : report.cells) {
    std::cout << "h=" << cell.h << " " << variant_name(cell.variant)
              << ": mean=" << cell.mean << " std=" << cell.stddev
              << " diverged=" << cell.diverged_count << "/"
              << cell.trials.size() << "\n";
  }
  return 0;
}

int run_diagnose(const ExperimentConfig& cfg, const std::string& model_path) {
  auto [model, net] = load_model(model_path);
  const BuiltData data = build_dataset(cfg);
  if (static_cast<int>(data.train.dim()) != net.input_dim) {
    std::cerr << "diagnose: model expects input_dim " << net.input_dim
              << " but the configured dataset has " << data.train.dim()
              << " features\n";
    return 1;
  }

  const SpectralReport report =
      layer_spectra(model, net, data.train.features, cfg.diagnostics.margin);
  write_text_atomic(out_path(cfg, "spectra.csv").string(),
                    spectral_report_csv(report));

  const Vector y0 = data.train.features.colwise().mean().transpose();
  const PerturbationProbe probe = perturbation_amplification(
      model, net, y0, cfg.diagnostics.epsilon, cfg.diagnostics.n_directions,
      cfg.seed);
  write_text_atomic(out_path(cfg, "perturbation.csv").string(),
                    perturbation_csv(probe));

  std::string summary = spectral_report_summary(report);
  int cert_pass = 0, cert_total = 0;
  if (model.bn.empty()) {
    for (const auto& ls : report.layers) {
      const auto& block = model.blocks[ls.layer - 1];
      if (block.kind != BlockKind::Shrinkage) continue;
      ++cert_total;
      const Matrix j = block_jacobian(ls.probe, block, net.activation);
      if (shrinkage_certificate(j, 1e-7).pass) ++cert_pass;
    }
  }
  if (cert_total > 0) {
    summary += "shrinkage certificates passed: " + std::to_string(cert_pass) +
               "/" + std::to_string(cert_total) + "\n";
  }
  summary += perturbation_summary(probe);
  write_text_atomic(out_path(cfg, "stability_summary.txt").string(), summary);
  std::cout << summary;

  if (report.partial || probe.diverged) {
    std::cerr << "diagnose: forward pass diverged; partial reports written\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stabilized residual networks as forward-Euler integrators"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, sweep_args, diag_args;
  std::string model_path;

  CLI::App* gen = app.add_subcommand(
      "generate", "write the synthetic two-moons dataset (CSV + SVG)");
  add_common(gen, gen_args);
  CLI::App* tr = app.add_subcommand(
      "train", "train one network; write model, history, optional trajectory");
  add_common(tr, train_args);
  CLI::App* sw = app.add_subcommand(
      "sweep", "multi-trial h sweep over block variants; CSV + chart");
  add_common(sw, sweep_args);
  CLI::App* dg = app.add_subcommand(
      "diagnose", "per-layer spectra, stability margins, perturbation probe");
  add_common(dg, diag_args);
  dg->add_option("--model", model_path, "trained model file (JSON)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return run_generate(load_with_overrides(gen_args));
    if (tr->parsed()) return run_train(load_with_overrides(train_args));
    if (sw->parsed()) return run_sweep(load_with_overrides(sweep_args));
    if (dg->parsed())
      return run_diagnose(load_with_overrides(diag_args), model_path);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
