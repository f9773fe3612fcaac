#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twinpot/autocm.hpp"
#include "twinpot/dataset.hpp"
#include "twinpot/detection.hpp"
#include "twinpot/honeypot.hpp"
#include "twinpot/seaport.hpp"
#include "twinpot/shipgen.hpp"

namespace twinpot::experiments {

std::vector<std::string> default_internal_attack_types();  // twelve
std::vector<std::string> default_external_attack_types();  // nine DDoS-UDP variants

// The builtin seaport: ship, crane, gate, sensors, gateway, server with a few
// critical attributes worth scrubbing.
seaport::EntityGraph default_port_graph();

struct ExperimentConfig {
  std::string scenario = "internal";  // internal | external | simultaneous
  std::uint64_t seed = 0;
  std::size_t feature_dim = seaport::kDefaultFeatureDim;
  std::size_t window_size = 50;
  double reliability_threshold = 0.95;
  double alpha = 1.0;
  double beta = 0.2;
  autocm::SelectionMode mode = autocm::SelectionMode::kNormalized;
  autocm::TimingMode timing = autocm::TimingMode::kVirtual;
  ml::Hyperparameters hp;
  autocm::LabelConfig label_config;
  double separation = 5.0;

  std::vector<std::string> internal_types = default_internal_attack_types();
  dataset::ComposeCounts internal_counts = dataset::internal_default_counts();
  std::vector<std::string> external_types = default_external_attack_types();
  dataset::ComposeCounts external_counts = dataset::external_default_counts();

  std::vector<std::string> sim_internal_types;  // six; defaults filled from internal_types
  std::vector<std::string> sim_external_types;  // six; defaults filled from external_types
  std::size_t sim_attack_windows = 8;
  std::size_t sim_normal_windows = 8;
  std::size_t sim_bootstrap_attack_per_type = 200;
  std::size_t sim_bootstrap_normal = 1200;
  std::size_t sim_bootstrap_ship = 400;

  bool stub_always_normal = false;       // detector stub: every verdict normal
  std::optional<ml::Kind> pin_method;    // e.g. MLP for the neural baseline
  bool write_dataset_cache = false;
  std::string out_dir;  // empty runs in memory only

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  autocm::SelectionWeights weights() const {
    return autocm::SelectionWeights::uniform(alpha, beta);
  }
};

struct ScenarioResult {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string model_label;
  std::map<std::string, double> sensitivity;  // attack type -> TP/(TP+FN), window-level
  std::map<std::string, std::uint64_t> attack_windows;
  std::map<std::string, std::uint64_t> detected_windows;
  std::uint64_t normal_windows = 0;
  std::uint64_t false_positive_windows = 0;
  double fp_rate = 0.0;
  std::uint64_t reselections = 0;
  std::uint64_t reports_written = 0;   // external scenario
  std::uint64_t routed_to_service = 0; // external scenario
  std::uint64_t contained = 0;         // external scenario
  autocm::AutocmReport bootstrap_report;
  std::vector<detection::EventRecord> events;

  nlohmann::json to_json() const;
  std::string sensitivity_csv() const;
};

struct GridResult {
  std::vector<std::string> internal_types;
  std::vector<std::string> external_types;
  std::vector<std::vector<double>> cells;  // [internal][external]
  std::uint64_t isolation_checks = 0;
  std::uint64_t injected_attack_windows = 0;
  std::uint64_t detected_attack_windows = 0;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

// Ship telemetry converted to flow records (label normal), deterministic.
std::vector<seaport::FlowRecord> make_ship_flow_pool(std::size_t count, seaport::Origin origin,
                                                     std::size_t feature_dim,
                                                     std::uint64_t seed);

// Homogeneous-by-label tumbling windows in seeded shuffled order.
std::vector<detection::Window> make_windows(const std::vector<seaport::FlowRecord>& records,
                                            std::size_t window_size, std::uint64_t seed);

ScenarioResult run_internal_experiment(const ExperimentConfig& config);
ScenarioResult run_external_experiment(const ExperimentConfig& config);
GridResult run_simultaneous(const ExperimentConfig& config);

// Recomputes the sensitivity table from serialized event-log lines.
std::map<std::string, double> sensitivity_from_events(const std::string& jsonl);

}  // namespace twinpot::experiments
