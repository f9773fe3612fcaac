#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "twinpot/autocm.hpp"
#include "twinpot/dataset.hpp"
#include "twinpot/errors.hpp"
#include "twinpot/experiments.hpp"
#include "twinpot/shipgen.hpp"

namespace {

using twinpot::Error;

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("file-not-found", "cannot open '" + path + "'");
  nlohmann::json j;
  in >> j;
  return j;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write-failed", "cannot write '" + path + "'");
  out << text;
}

int run_scenario(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& scenario, const std::string& out_dir, bool pin_mlp,
                 bool stub, bool dump_dataset) {
  twinpot::experiments::ExperimentConfig config;
  if (!config_path.empty()) {
    config = twinpot::experiments::ExperimentConfig::from_json(read_json_file(config_path));
  }
  if (!scenario.empty()) config.scenario = scenario;
  if (seed) config.seed = *seed;
  if (!out_dir.empty()) config.out_dir = out_dir;
  if (pin_mlp) config.pin_method = twinpot::ml::Kind::kMLP;
  if (stub) config.stub_always_normal = true;
  if (dump_dataset) config.write_dataset_cache = true;

  if (config.scenario == "internal") {
    auto result = twinpot::experiments::run_internal_experiment(config);
    std::cout << result.to_json().dump(2) << "\n";
  } else if (config.scenario == "external") {
    auto result = twinpot::experiments::run_external_experiment(config);
    std::cout << result.to_json().dump(2) << "\n";
  } else if (config.scenario == "simultaneous") {
    auto result = twinpot::experiments::run_simultaneous(config);
    std::cout << result.to_json().dump(2) << "\n";
  } else {
    throw Error("bad-scenario", "scenario must be internal, external or simultaneous");
  }
  return 0;
}

int run_shipgen(const std::string& maneuver, const std::string& config_path,
                const std::string& out_path, double speed, double rudder_deg, double zz_delta_deg,
                double zz_psi_deg, const std::string& dump_config) {
  twinpot::shipgen::ShipParticulars ship = twinpot::shipgen::default_tanker();
  twinpot::shipgen::SolverParams solver;
  if (!config_path.empty()) {
    twinpot::shipgen::particulars_from_json(read_json_file(config_path), ship, solver);
  }
  if (!dump_config.empty()) {
    write_file(dump_config, twinpot::shipgen::particulars_to_json(ship, solver).dump(2) + "\n");
  }

  const double deg = 3.141592653589793 / 180.0;
  twinpot::shipgen::Trajectory trajectory;
  nlohmann::json metrics;
  if (maneuver == "turning") {
    auto result = twinpot::shipgen::turning_circle(ship, solver, speed, rudder_deg * deg);
    trajectory = std::move(result.trajectory);
    metrics = {{"advance", result.metrics.advance},
               {"transfer", result.metrics.transfer},
               {"tactical_diameter", result.metrics.tactical_diameter},
               {"steady_radius", result.metrics.steady_radius},
               {"steady_speed", result.metrics.steady_speed},
               {"steady_yaw_rate", result.metrics.steady_yaw_rate}};
  } else if (maneuver == "zigzag") {
    auto result =
        twinpot::shipgen::zigzag(ship, solver, speed, zz_delta_deg * deg, zz_psi_deg * deg);
    trajectory = std::move(result.trajectory);
    metrics = {{"first_overshoot", result.metrics.first_overshoot},
               {"second_overshoot", result.metrics.second_overshoot},
               {"period", result.metrics.period},
               {"reversals", result.metrics.reversals}};
  } else {
    throw Error("bad-maneuver", "maneuver must be turning or zigzag");
  }

  if (!out_path.empty()) {
    write_file(out_path, twinpot::shipgen::trajectory_to_csv(trajectory));
  }
  std::cout << nlohmann::json({{"maneuver", maneuver},
                               {"samples", trajectory.samples.size()},
                               {"metrics", metrics}})
                   .dump(2)
            << "\n";
  return 0;
}

int run_autocm_cli(const std::string& data_path, const std::string& baseline_path,
                   const std::string& out_path, std::uint64_t seed, double alpha, double beta,
                   const std::string& mode, bool real_clock, std::size_t feature_dim,
                   const std::string& label_column) {
  twinpot::dataset::SchemaMap unlabeled_schema;
  for (std::size_t i = 0; i < feature_dim; ++i) {
    unlabeled_schema.feature_columns.push_back("f" + std::to_string(i));
  }
  twinpot::dataset::SchemaMap baseline_schema = unlabeled_schema;
  baseline_schema.label_column = label_column;

  auto unlabeled = twinpot::dataset::load_flow_csv(data_path, unlabeled_schema,
                                                   twinpot::seaport::Origin::kInternal,
                                                   feature_dim);
  auto baseline = twinpot::dataset::load_flow_csv(baseline_path, baseline_schema,
                                                  twinpot::seaport::Origin::kInternal,
                                                  feature_dim);

  twinpot::autocm::Options options;
  options.weights = twinpot::autocm::SelectionWeights::uniform(alpha, beta);
  options.label_config.unlabeled_count = unlabeled.records.size();
  options.label_config.baseline_draw =
      std::min<std::size_t>(options.label_config.baseline_draw, baseline.records.size());
  options.seed = seed;
  options.mode = twinpot::autocm::selection_mode_from_name(mode);
  options.timing = real_clock ? twinpot::autocm::TimingMode::kReal
                              : twinpot::autocm::TimingMode::kVirtual;

  auto result = twinpot::autocm::run_autocm(unlabeled.records, baseline.records, options);
  std::string text = result.report.to_json().dump(2) + "\n";
  if (!out_path.empty()) write_file(out_path, text);
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smart-seaport twin network, honeypot and detection experiments"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run an experiment scenario");
  std::string run_scenario_name, run_config, run_out;
  std::optional<std::uint64_t> run_seed;
  bool pin_mlp = false, stub = false, dump_dataset = false;
  run->add_option("--scenario", run_scenario_name, "internal | external | simultaneous");
  run->add_option("--config", run_config, "experiment config JSON");
  run->add_option("--seed", run_seed, "RNG seed (overrides config)");
  run->add_option("--out", run_out, "output directory");
  run->add_flag("--pin-mlp", pin_mlp, "pin the classifier to the MLP baseline");
  run->add_flag("--stub-always-normal", stub, "replace detectors with the always-normal stub");
  run->add_flag("--dump-dataset", dump_dataset, "write the composed dataset cache CSV");

  // shipgen
  auto* ship = app.add_subcommand("shipgen", "run a standard ship maneuver");
  std::string maneuver = "turning", ship_config, ship_out, ship_dump;
  double speed = 5.0, rudder_deg = 35.0, zz_delta = 10.0, zz_psi = 10.0;
  ship->add_option("--maneuver", maneuver, "turning | zigzag");
  ship->add_option("--config", ship_config, "ship config JSON");
  ship->add_option("--out", ship_out, "trajectory CSV path");
  ship->add_option("--speed", speed, "approach speed m/s");
  ship->add_option("--rudder", rudder_deg, "turning-circle rudder angle, degrees");
  ship->add_option("--delta", zz_delta, "zigzag rudder angle, degrees");
  ship->add_option("--psi", zz_psi, "zigzag heading target, degrees");
  ship->add_option("--dump-default-config", ship_dump, "write the active ship config JSON");

  // autocm
  auto* acm = app.add_subcommand("autocm", "label data and select the best classifier");
  std::string acm_data, acm_baseline, acm_out, acm_mode = "normalized", acm_label = "label";
  std::uint64_t acm_seed = 0;
  double alpha = 1.0, beta = 0.2;
  std::size_t acm_dim = twinpot::seaport::kDefaultFeatureDim;
  bool real_clock = false;
  acm->add_option("--data", acm_data, "unlabeled CSV (columns f0..f<F-1>)")->required();
  acm->add_option("--baseline", acm_baseline, "labeled baseline CSV")->required();
  acm->add_option("--out", acm_out, "report JSON path");
  acm->add_option("--seed", acm_seed, "RNG seed");
  acm->add_option("--alpha", alpha, "accuracy weight");
  acm->add_option("--beta", beta, "speed weight");
  acm->add_option("--mode", acm_mode, "normalized | strict-eq1");
  acm->add_option("--feature-dim", acm_dim, "feature vector length");
  acm->add_option("--label-column", acm_label, "baseline label column");
  acm->add_flag("--real-clock", real_clock, "measure wall-clock determination time");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return run_scenario(run_config, run_seed, run_scenario_name, run_out, pin_mlp, stub,
                          dump_dataset);
    }
    if (ship->parsed()) {
      return run_shipgen(maneuver, ship_config, ship_out, speed, rudder_deg, zz_delta, zz_psi,
                         ship_dump);
    }
    if (acm->parsed()) {
      return run_autocm_cli(acm_data, acm_baseline, acm_out, acm_seed, alpha, beta, acm_mode,
                            real_clock, acm_dim, acm_label);
    }
  } catch (const Error& e) {
    std::cout << nlohmann::json({{"error", {{"code", e.code()}, {"message", e.what()}}}}).dump()
              << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cout << nlohmann::json({{"error", {{"code", "internal"}, {"message", e.what()}}}}).dump()
              << "\n";
    return 1;
  }
  return 0;
}
