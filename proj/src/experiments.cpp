#include "twinpot/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "twinpot/errors.hpp"
#include "twinpot/hash.hpp"
#include "twinpot/rng.hpp"
#include "twinpot/twin.hpp"

namespace twinpot::experiments {

namespace fs = std::filesystem;
using seaport::FlowRecord;
using seaport::Origin;

std::vector<std::string> default_internal_attack_types() {
  return {"backdoor",  "ddos-http", "ddos-icmp",     "ddos-tcp",   "ddos-udp", "fingerprinting",
          "mitm",      "password",  "port-scanning", "ransomware", "sql-injection", "uploading"};
}

std::vector<std::string> default_external_attack_types() {
  std::vector<std::string> types;
  for (int i = 1; i <= 9; ++i) types.push_back("ddos-udp-v" + std::to_string(i));
  return types;
}

seaport::EntityGraph default_port_graph() {
  using namespace seaport;
  std::vector<Entity> entities;
  Entity ship{"ship-1", EntityKind::kShip, {}};
  ship.set_attribute("name", std::string("mv-aurora"));
  ship.set_attribute("loa", 100.0);
  ship.set_attribute("ais-key", std::string("ais-9f31c2"), Sensitivity::kCritical);
  entities.push_back(ship);

  Entity crane{"crane-1", EntityKind::kCrane, {}};
  crane.set_attribute("reach", 45.0);
  crane.set_attribute("plc-password", std::string("crane-secret"), Sensitivity::kCritical);
  entities.push_back(crane);

  Entity gate{"gate-1", EntityKind::kGate, {}};
  gate.set_attribute("lane-count", 4.0);
  gate.set_attribute("access-code", std::string("1919"), Sensitivity::kCritical);
  entities.push_back(gate);

  Entity sensor1{"sensor-1", EntityKind::kIotSensor, {}};
  sensor1.set_attribute("type", std::string("berth-draft"));
  entities.push_back(sensor1);

  Entity sensor2{"sensor-2", EntityKind::kIotSensor, {}};
  sensor2.set_attribute("type", std::string("gate-camera"));
  entities.push_back(sensor2);

  Entity gateway{"gateway-1", EntityKind::kGateway, {}};
  gateway.set_attribute("firmware", std::string("7.4.1"));
  gateway.set_attribute("apikey", std::string("gw-key-77aa"), Sensitivity::kCritical);
  entities.push_back(gateway);

  Entity server{"server-1", EntityKind::kServer, {}};
  server.set_attribute("role", std::string("terminal-os"));
  entities.push_back(server);

  std::vector<Relation> relations = {
      {"ship-1", "crane-1", "berthed-at"},     {"crane-1", "gateway-1", "reports-to"},
      {"sensor-1", "gateway-1", "reports-to"}, {"sensor-2", "gate-1", "monitors"},
      {"gate-1", "gateway-1", "reports-to"},   {"gateway-1", "server-1", "uplinks-to"}};
  return build_entity_graph(std::move(entities), std::move(relations));
}

// ---- config ----------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.scenario = j.value("scenario", c.scenario);
  c.seed = j.value("seed", c.seed);
  c.feature_dim = j.value("feature_dim", c.feature_dim);
  c.window_size = j.value("window_size", c.window_size);
  c.reliability_threshold = j.value("reliability_threshold", c.reliability_threshold);
  if (j.contains("weights")) {
    c.alpha = j.at("weights").value("alpha", c.alpha);
    c.beta = j.at("weights").value("beta", c.beta);
  }
  if (j.contains("selection_mode")) {
    c.mode = autocm::selection_mode_from_name(j.at("selection_mode").get<std::string>());
  }
  if (j.contains("timing")) {
    c.timing = autocm::timing_mode_from_name(j.at("timing").get<std::string>());
  }
  if (j.contains("hyperparameters")) {
    c.hp = ml::Hyperparameters::from_json(j.at("hyperparameters"));
  }
  if (j.contains("autocm")) {
    const auto& a = j.at("autocm");
    c.label_config.unlabeled_count = a.value("unlabeled", c.label_config.unlabeled_count);
    c.label_config.baseline_draw = a.value("baseline", c.label_config.baseline_draw);
    c.label_config.k = a.value("knn_k", c.label_config.k);
  }
  c.separation = j.value("separation", c.separation);
  if (j.contains("internal")) {
    const auto& s = j.at("internal");
    if (s.contains("attack_types")) {
      c.internal_types = s.at("attack_types").get<std::vector<std::string>>();
    }
    c.internal_counts.attack_total = s.value("attack_total", c.internal_counts.attack_total);
    c.internal_counts.normal_total = s.value("normal_total", c.internal_counts.normal_total);
    c.internal_counts.ship_total = s.value("ship_total", c.internal_counts.ship_total);
  }
  if (j.contains("external")) {
    const auto& s = j.at("external");
    if (s.contains("attack_types")) {
      c.external_types = s.at("attack_types").get<std::vector<std::string>>();
    }
    c.external_counts.attack_total = s.value("attack_total", c.external_counts.attack_total);
    c.external_counts.normal_total = s.value("normal_total", c.external_counts.normal_total);
    c.external_counts.ship_total = s.value("ship_total", c.external_counts.ship_total);
  }
  if (j.contains("simultaneous")) {
    const auto& s = j.at("simultaneous");
    if (s.contains("internal_types")) {
      c.sim_internal_types = s.at("internal_types").get<std::vector<std::string>>();
    }
    if (s.contains("external_types")) {
      c.sim_external_types = s.at("external_types").get<std::vector<std::string>>();
    }
    c.sim_attack_windows = s.value("attack_windows", c.sim_attack_windows);
    c.sim_normal_windows = s.value("normal_windows", c.sim_normal_windows);
    c.sim_bootstrap_attack_per_type =
        s.value("bootstrap_attack_per_type", c.sim_bootstrap_attack_per_type);
    c.sim_bootstrap_normal = s.value("bootstrap_normal", c.sim_bootstrap_normal);
    c.sim_bootstrap_ship = s.value("bootstrap_ship", c.sim_bootstrap_ship);
  }
  c.stub_always_normal = j.value("stub_always_normal", c.stub_always_normal);
  if (j.contains("pin_method")) {
    c.pin_method = ml::kind_from_name(j.at("pin_method").get<std::string>());
  }
  c.write_dataset_cache = j.value("write_dataset_cache", c.write_dataset_cache);
  c.out_dir = j.value("out", c.out_dir);
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j = {
      {"scenario", scenario},
      {"seed", seed},
      {"feature_dim", feature_dim},
      {"window_size", window_size},
      {"reliability_threshold", reliability_threshold},
      {"weights", {{"alpha", alpha}, {"beta", beta}}},
      {"selection_mode", autocm::selection_mode_name(mode)},
      {"timing", autocm::timing_mode_name(timing)},
      {"hyperparameters", hp.to_json()},
      {"autocm",
       {{"unlabeled", label_config.unlabeled_count},
        {"baseline", label_config.baseline_draw},
        {"knn_k", label_config.k}}},
      {"separation", separation},
      {"internal",
       {{"attack_types", internal_types},
        {"attack_total", internal_counts.attack_total},
        {"normal_total", internal_counts.normal_total},
        {"ship_total", internal_counts.ship_total}}},
      {"external",
       {{"attack_types", external_types},
        {"attack_total", external_counts.attack_total},
        {"normal_total", external_counts.normal_total},
        {"ship_total", external_counts.ship_total}}},
      {"simultaneous",
       {{"internal_types", sim_internal_types},
        {"external_types", sim_external_types},
        {"attack_windows", sim_attack_windows},
        {"normal_windows", sim_normal_windows},
        {"bootstrap_attack_per_type", sim_bootstrap_attack_per_type},
        {"bootstrap_normal", sim_bootstrap_normal},
        {"bootstrap_ship", sim_bootstrap_ship}}},
      {"stub_always_normal", stub_always_normal},
      {"write_dataset_cache", write_dataset_cache},
      {"out", out_dir}};
  if (pin_method) j["pin_method"] = ml::kind_name(*pin_method);
  return j;
}

// ---- building blocks ---------------------------------------------------------

std::vector<FlowRecord> make_ship_flow_pool(std::size_t count, Origin origin,
                                            std::size_t feature_dim, std::uint64_t seed) {
  using namespace shipgen;
  ShipParticulars ship = default_tanker();
  SolverParams solver;
  const double speed = 5.0;
  const double n = find_balancing_prop_rate(ship, speed, solver.n_max);
  const double phase = static_cast<double>(seed % 1000) / 1000.0;

  ShipState initial;
  initial.u = speed;
  ControlSchedule schedule = [n, phase](double t, const ShipState&) {
    ControlInput c;
    c.prop_rate = n;
    c.rudder_angle = 0.1745 * std::sin(6.283185307179586 * (t / 180.0 + phase));
    return c;
  };
  const double duration = static_cast<double>(count - 1) * solver.dt;
  Trajectory traj = simulate(ship, solver, initial, schedule, std::max(duration, solver.dt));

  Projection projection;
  projection.channels = {"u", "v", "r", "psi"};
  projection.offset = feature_dim >= 8 ? feature_dim - 4 : 0;
  std::vector<seaport::TelemetrySample> samples =
      to_telemetry(traj, "ship-1", projection, feature_dim);

  std::vector<FlowRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count && i < samples.size(); ++i) {
    FlowRecord r;
    r.id = i;
    r.timestamp = samples[i].timestamp;
    r.origin = origin;
    r.features = samples[i].values;
    r.label = seaport::kNormalLabel;
    out.push_back(std::move(r));
  }
  if (out.size() < count) {
    throw Error("insufficient-data", "ship trajectory shorter than requested pool");
  }
  return out;
}

std::vector<detection::Window> make_windows(const std::vector<FlowRecord>& records,
                                            std::size_t window_size, std::uint64_t seed) {
  std::map<std::string, std::vector<const FlowRecord*>> by_label;
  for (const auto& r : records) {
    by_label[r.label ? *r.label : std::string()].push_back(&r);
  }
  std::vector<detection::Window> windows;
  for (const auto& [label, rows] : by_label) {
    for (std::size_t start = 0; start < rows.size(); start += window_size) {
      detection::Window w;
      const std::size_t end = std::min(start + window_size, rows.size());
      for (std::size_t i = start; i < end; ++i) w.records.push_back(*rows[i]);
      windows.push_back(std::move(w));
    }
  }
  Rng rng(derive_seed(seed, "window-shuffle"));
  rng.shuffle(windows);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    windows[i].id = i;
    windows[i].tick = static_cast<long>(i);
  }
  return windows;
}

namespace {

struct Bootstrap {
  autocm::TrainedModel model;
  autocm::AutocmReport report;
  std::vector<FlowRecord> baseline;
  std::vector<FlowRecord> stream;
  std::string model_label;
};

// Draws the AutoCM baseline and unlabeled pools out of the composed records;
// the rest become the evaluation stream.
Bootstrap bootstrap_model(const std::vector<FlowRecord>& records, const ExperimentConfig& config,
                          const std::string& tag) {
  const autocm::LabelConfig& lc = config.label_config;
  if (records.size() < lc.baseline_draw + lc.unlabeled_count) {
    throw Error("insufficient-data", "dataset too small for the AutoCM bootstrap");
  }
  const std::uint64_t seed = derive_seed(config.seed, tag);

  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < records.size(); ++i) {
    by_label[records[i].label.value_or("")].push_back(i);
  }

  // Proportional stratified baseline (largest remainder).
  std::vector<char> taken(records.size(), 0);
  std::vector<std::size_t> baseline_idx;
  {
    std::vector<std::pair<double, std::string>> remainders;
    std::map<std::string, std::size_t> quota;
    std::size_t assigned = 0;
    for (const auto& [label, idx] : by_label) {
      double exact = static_cast<double>(lc.baseline_draw) * static_cast<double>(idx.size()) /
                     static_cast<double>(records.size());
      std::size_t base = std::min(static_cast<std::size_t>(exact), idx.size());
      quota[label] = base;
      assigned += base;
      remainders.emplace_back(exact - static_cast<double>(base), label);
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::size_t spin = 0;
    while (assigned < lc.baseline_draw) {
      const std::string& label = remainders[spin % remainders.size()].second;
      if (quota[label] < by_label[label].size()) {
        ++quota[label];
        ++assigned;
      }
      ++spin;
      if (spin > 4 * lc.baseline_draw + remainders.size()) break;
    }
    for (const auto& [label, idx] : by_label) {
      Rng rng(derive_seed(seed, "baseline/" + label));
      for (std::size_t pick : sample_without_replacement(idx.size(), quota[label], rng)) {
        baseline_idx.push_back(idx[pick]);
        taken[idx[pick]] = 1;
      }
    }
    std::sort(baseline_idx.begin(), baseline_idx.end());
  }

  std::vector<std::size_t> free_idx;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!taken[i]) free_idx.push_back(i);
  }
  Rng rng(derive_seed(seed, "unlabeled"));
  std::vector<std::size_t> unlabeled_idx;
  for (std::size_t pick :
       sample_without_replacement(free_idx.size(), lc.unlabeled_count, rng)) {
    unlabeled_idx.push_back(free_idx[pick]);
    taken[free_idx[pick]] = 1;
  }
  std::sort(unlabeled_idx.begin(), unlabeled_idx.end());

  Bootstrap out;
  for (std::size_t i : baseline_idx) out.baseline.push_back(records[i]);
  std::vector<FlowRecord> unlabeled;
  for (std::size_t i : unlabeled_idx) {
    FlowRecord r = records[i];
    r.label.reset();
    unlabeled.push_back(std::move(r));
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!taken[i]) out.stream.push_back(records[i]);
  }

  if (config.stub_always_normal) {
    out.model = autocm::always_normal_model();
    out.model_label = "always-normal-stub";
    return out;
  }

  autocm::Options options;
  options.weights = config.weights();
  options.label_config = lc;
  options.label_config.unlabeled_count = unlabeled.size();
  options.hp = config.hp;
  options.timing = config.timing;
  options.mode = config.mode;
  options.seed = derive_seed(seed, "autocm");
  options.pin_method = config.pin_method;

  autocm::RunResult run = autocm::run_autocm(unlabeled, out.baseline, options);
  out.model = std::move(run.winner);
  out.report = std::move(run.report);
  out.model_label = config.pin_method
                        ? ml::kind_name(*config.pin_method) + "-baseline"
                        : "autocm-winner:" + ml::kind_name(out.model.spec.kind);
  return out;
}

void aggregate_events(ScenarioResult& result) {
  for (const auto& e : result.events) {
    if (e.truth.empty()) continue;
    const bool verdict_attack = e.verdict.rfind("attack", 0) == 0;
    if (seaport::is_attack_label(e.truth)) {
      ++result.attack_windows[e.truth];
      if (verdict_attack) ++result.detected_windows[e.truth];
    } else {
      ++result.normal_windows;
      if (verdict_attack) ++result.false_positive_windows;
    }
    if (e.reselected) ++result.reselections;
  }
  for (const auto& [type, total] : result.attack_windows) {
    result.sensitivity[type] =
        static_cast<double>(result.detected_windows[type]) / static_cast<double>(total);
  }
  result.fp_rate = result.normal_windows
                       ? static_cast<double>(result.false_positive_windows) /
                             static_cast<double>(result.normal_windows)
                       : 0.0;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

void write_scenario_outputs(const ScenarioResult& result, const ExperimentConfig& config) {
  if (config.out_dir.empty()) return;
  fs::create_directories(config.out_dir);
  write_text(fs::path(config.out_dir) / "result.json", result.to_json().dump(2) + "\n");
  write_text(fs::path(config.out_dir) / "result.csv", result.sensitivity_csv());
  write_text(fs::path(config.out_dir) / "events.jsonl", detection::events_to_jsonl(result.events));
  write_text(fs::path(config.out_dir) / "autocm_report.json",
             result.bootstrap_report.to_json().dump(2) + "\n");
}

}  // namespace

// ---- result serialization ----------------------------------------------------

nlohmann::json ScenarioResult::to_json() const {
  nlohmann::json sens = nlohmann::json::object();
  for (const auto& [k, v] : sensitivity) sens[k] = v;
  nlohmann::json aw = nlohmann::json::object();
  for (const auto& [k, v] : attack_windows) aw[k] = v;
  nlohmann::json dw = nlohmann::json::object();
  for (const auto& [k, v] : detected_windows) dw[k] = v;
  return {{"scenario", scenario},
          {"seed", seed},
          {"model", model_label},
          {"sensitivity", sens},
          {"attack_windows", aw},
          {"detected_windows", dw},
          {"normal_windows", normal_windows},
          {"false_positive_windows", false_positive_windows},
          {"fp_rate", fp_rate},
          {"reselections", reselections},
          {"reports_written", reports_written},
          {"routed_to_service", routed_to_service},
          {"contained", contained}};
}

std::string ScenarioResult::sensitivity_csv() const {
  std::string out = "label,sensitivity\n";
  char buf[64];
  for (const auto& [k, v] : sensitivity) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    out += k + "," + buf + "\n";
  }
  return out;
}

nlohmann::json GridResult::to_json() const {
  return {{"internal_types", internal_types},
          {"external_types", external_types},
          {"cells", cells},
          {"isolation_checks", isolation_checks},
          {"injected_attack_windows", injected_attack_windows},
          {"detected_attack_windows", detected_attack_windows}};
}

std::string GridResult::to_csv() const {
  std::string out = "internal\\external";
  for (const auto& e : external_types) out += "," + e;
  out += "\n";
  char buf[64];
  for (std::size_t i = 0; i < internal_types.size(); ++i) {
    out += internal_types[i];
    for (std::size_t j = 0; j < external_types.size(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.12g", cells[i][j]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::map<std::string, double> sensitivity_from_events(const std::string& jsonl) {
  std::map<std::string, std::uint64_t> total, detected;
  std::istringstream in(jsonl);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    const std::string truth = j.value("truth", "");
    if (truth.empty() || !seaport::is_attack_label(truth)) continue;
    ++total[truth];
    if (j.at("verdict").get<std::string>().rfind("attack", 0) == 0) ++detected[truth];
  }
  std::map<std::string, double> out;
  for (const auto& [type, n] : total) {
    out[type] = static_cast<double>(detected[type]) / static_cast<double>(n);
  }
  return out;
}

// ---- internal scenario ---------------------------------------------------------

ScenarioResult run_internal_experiment(const ExperimentConfig& config) {
  const std::uint64_t seed = config.seed;
  std::vector<dataset::ClassSpec> manifest =
      dataset::spread_manifest(config.internal_types, config.internal_counts.attack_total);

  dataset::GeneratorSpec attack_spec;
  attack_spec.classes = manifest;
  attack_spec.separation = config.separation;
  attack_spec.feature_dim = config.feature_dim;
  attack_spec.noise_dims = config.internal_types.size();
  std::vector<FlowRecord> attack_pool =
      dataset::synth_flows(attack_spec, Origin::kInternal, derive_seed(seed, "attack"));

  dataset::GeneratorSpec normal_spec;
  normal_spec.classes = {{seaport::kNormalLabel, config.internal_counts.normal_total}};
  normal_spec.separation = config.separation;
  normal_spec.feature_dim = config.feature_dim;
  normal_spec.noise_dims = config.internal_types.size();
  std::vector<FlowRecord> normal_pool =
      dataset::synth_flows(normal_spec, Origin::kInternal, derive_seed(seed, "normal"));

  std::vector<FlowRecord> ship_pool = make_ship_flow_pool(
      config.internal_counts.ship_total, Origin::kInternal, config.feature_dim,
      derive_seed(seed, "ship"));

  dataset::ComposedDataset composed = dataset::compose_internal_dataset(
      attack_pool, normal_pool, ship_pool, manifest, derive_seed(seed, "compose"),
      config.internal_counts);

  std::vector<FlowRecord> records;
  records.reserve(composed.records.size());
  for (const auto& t : composed.records) records.push_back(t.record);

  Bootstrap boot = bootstrap_model(records, config, "internal-bootstrap");
  std::vector<detection::Window> windows =
      make_windows(boot.stream, config.window_size, derive_seed(seed, "windows"));

  detection::DetectionState state;
  state.model = boot.model;
  state.threshold = config.stub_always_normal ? 0.0 : config.reliability_threshold;
  state.reselection.baseline = boot.baseline;
  state.reselection.label_config = config.label_config;
  state.reselection.weights = config.weights();
  state.reselection.mode = config.mode;
  state.reselection.timing = config.timing;
  state.reselection.hp = config.hp;
  state.reselection.seed = derive_seed(seed, "reselect");

  detection::MitigationPolicy policy;
  for (const auto& w : windows) {
    detection::detection_step(state, w, policy);
  }

  ScenarioResult result;
  result.scenario = "internal";
  result.seed = seed;
  result.model_label = boot.model_label;
  result.bootstrap_report = std::move(boot.report);
  result.events = std::move(state.event_log);
  aggregate_events(result);

  if (!config.out_dir.empty()) {
    write_scenario_outputs(result, config);
    if (config.write_dataset_cache) {
      write_text(fs::path(config.out_dir) / "dataset.csv",
                 dataset::composed_to_csv(composed, config.feature_dim));
    }
  }
  return result;
}

// ---- external scenario ---------------------------------------------------------

ScenarioResult run_external_experiment(const ExperimentConfig& config) {
  const std::uint64_t seed = config.seed;

  // Physical graph + twin loop: a few ticks of telemetry, each mirrored into
  // the honeypot replay database.
  seaport::EntityGraph physical = default_port_graph();
  seaport::EntityGraph twin = physical;
  twin::ScrubPolicy policy{twin::ScrubMode::kRemove, derive_seed(seed, "scrub")};

  shipgen::ShipParticulars ship = shipgen::default_tanker();
  shipgen::SolverParams solver;
  const double n = shipgen::find_balancing_prop_rate(ship, 5.0, solver.n_max);
  shipgen::ShipState initial;
  initial.u = 5.0;
  shipgen::Trajectory traj = shipgen::simulate(
      ship, solver, initial,
      [n](double, const shipgen::ShipState&) {
        return shipgen::ControlInput{0.2, n};
      },
      10.0);
  shipgen::Projection projection;
  projection.channels = {"u", "v", "r", "psi"};
  projection.offset = config.feature_dim >= 8 ? config.feature_dim - 4 : 0;
  std::vector<seaport::TelemetrySample> telemetry =
      shipgen::to_telemetry(traj, "ship-1", projection, config.feature_dim);

  const long replay_ticks = 8;
  std::vector<twin::ModelDocument> database;
  seaport::EntityGraph pot;
  for (long t = 0; t < replay_ticks; ++t) {
    seaport::TelemetrySample sample = telemetry[static_cast<std::size_t>(t) % telemetry.size()];
    sample.timestamp = static_cast<double>(t);
    physical = seaport::apply_telemetry(physical, sample, config.feature_dim);
    auto [synced, sync_report] = twin::synchronize(physical, twin, t);
    twin = std::move(synced);
    twin::MirrorResult mirror = twin::mirror_to_twinpot(twin, policy, t);
    if (t == 0) pot = std::move(mirror.pot);
    database.insert(database.end(), mirror.database.begin(), mirror.database.end());
  }

  // External traffic pools; attack flows aim at real entity ids.
  std::vector<std::string> targets;
  for (const auto& e : default_port_graph().nodes()) targets.push_back(e.id);

  std::vector<dataset::ClassSpec> manifest =
      dataset::spread_manifest(config.external_types, config.external_counts.attack_total);
  dataset::GeneratorSpec attack_spec;
  attack_spec.classes = manifest;
  attack_spec.separation = config.separation;
  attack_spec.feature_dim = config.feature_dim;
  attack_spec.noise_dims = config.external_types.size();
  attack_spec.targets = targets;
  std::vector<FlowRecord> attack_pool =
      dataset::synth_flows(attack_spec, Origin::kExternal, derive_seed(seed, "attack"));

  dataset::GeneratorSpec normal_spec;
  normal_spec.classes = {{seaport::kNormalLabel, config.external_counts.normal_total}};
  normal_spec.separation = config.separation;
  normal_spec.feature_dim = config.feature_dim;
  normal_spec.noise_dims = config.external_types.size();
  std::vector<FlowRecord> normal_pool =
      dataset::synth_flows(normal_spec, Origin::kExternal, derive_seed(seed, "normal"));

  std::vector<FlowRecord> ship_pool = make_ship_flow_pool(
      config.external_counts.ship_total, Origin::kExternal, config.feature_dim,
      derive_seed(seed, "ship"));

  dataset::ComposedDataset composed = dataset::compose_external_dataset(
      attack_pool, normal_pool, ship_pool, manifest, derive_seed(seed, "compose"),
      config.external_counts);

  std::vector<FlowRecord> records;
  records.reserve(composed.records.size());
  for (const auto& t : composed.records) records.push_back(t.record);

  Bootstrap boot = bootstrap_model(records, config, "external-bootstrap");
  std::vector<detection::Window> windows =
      make_windows(boot.stream, config.window_size, derive_seed(seed, "windows"));

  fs::path reports_dir;
  if (!config.out_dir.empty()) {
    reports_dir = fs::path(config.out_dir) / "reports";
    fs::create_directories(reports_dir);
  }

  ScenarioResult result;
  result.scenario = "external";
  result.seed = seed;
  result.model_label = boot.model_label;
  result.bootstrap_report = std::move(boot.report);

  honeypot::FeedbackStore feedback;
  honeypot::EpisodeTracker tracker;
  auto emit_report = [&](const honeypot::EpisodeTracker::Episode& episode) {
    honeypot::BehaviorReport report =
        honeypot::analyze_behavior(episode.records, episode.type, pot);
    feedback = honeypot::forward_report(report, std::move(feedback));
    ++result.reports_written;
    if (!reports_dir.empty()) {
      write_text(reports_dir / honeypot::report_file_name(episode.first_tick, episode.type),
                 honeypot::report_to_json(report).dump(2) + "\n");
    }
  };

  for (const auto& w : windows) {
    honeypot::ReplayResult replay = honeypot::replay_tick(database, pot, w.tick,
                                                          config.feature_dim);
    pot = std::move(replay.pot);

    autocm::Verdict verdict = honeypot::classify_external(w.records, boot.model);
    honeypot::RouteDecision route = honeypot::route_external(verdict);
    if (route.destination == honeypot::RouteDestination::kDtServiceLayer) {
      ++result.routed_to_service;
    } else {
      ++result.contained;
    }

    detection::EventRecord event;
    event.tick = w.tick;
    event.truth = detection::window_truth(w.records);
    event.verdict = verdict.str();
    event.action = honeypot::destination_name(route.destination);
    result.events.push_back(std::move(event));

    if (auto closed = tracker.feed(w.tick, verdict, w.records)) emit_report(*closed);
  }
  if (auto closed = tracker.flush()) emit_report(*closed);

  aggregate_events(result);

  if (!config.out_dir.empty()) {
    write_scenario_outputs(result, config);
    write_text(fs::path(config.out_dir) / "twin_export.mdl.jsonl",
               twin::documents_to_jsonl(twin::export_service_documents(twin), false));
    write_text(fs::path(config.out_dir) / "replay_db.mdl.jsonl",
               twin::documents_to_jsonl(database, true));
    if (config.write_dataset_cache) {
      write_text(fs::path(config.out_dir) / "dataset.csv",
                 dataset::composed_to_csv(composed, config.feature_dim));
    }
  }
  return result;
}

// ---- simultaneous scenario -----------------------------------------------------

namespace {

std::vector<FlowRecord> sim_bootstrap_records(const ExperimentConfig& config,
                                              const std::vector<std::string>& types,
                                              Origin origin, std::uint64_t seed) {
  dataset::GeneratorSpec spec;
  for (const auto& t : types) {
    spec.classes.push_back({t, config.sim_bootstrap_attack_per_type});
  }
  spec.classes.push_back({seaport::kNormalLabel, config.sim_bootstrap_normal});
  spec.separation = config.separation;
  spec.feature_dim = config.feature_dim;
  spec.noise_dims = types.size();
  std::vector<FlowRecord> records = dataset::synth_flows(spec, origin, derive_seed(seed, "boot"));
  std::vector<FlowRecord> ship = make_ship_flow_pool(config.sim_bootstrap_ship, origin,
                                                     config.feature_dim,
                                                     derive_seed(seed, "boot-ship"));
  for (auto& r : ship) records.push_back(std::move(r));
  return records;
}

std::vector<detection::Window> cell_stream(const ExperimentConfig& config,
                                           const std::string& attack_type,
                                           const std::vector<std::string>& all_types,
                                           Origin origin, std::uint64_t seed) {
  // Attack axis must match the bootstrap cluster layout, so the class index
  // within the full type list decides the feature axis.
  std::size_t axis = 0;
  for (std::size_t i = 0; i < all_types.size(); ++i) {
    if (all_types[i] == attack_type) axis = i;
  }
  dataset::GeneratorSpec spec;
  spec.classes = {{attack_type, config.sim_attack_windows * config.window_size}};
  spec.separation = config.separation;
  spec.feature_dim = config.feature_dim;
  spec.axis_offset = axis;
  spec.noise_dims = all_types.size();
  std::vector<FlowRecord> records = dataset::synth_flows(spec, origin, derive_seed(seed, "atk"));

  dataset::GeneratorSpec normal_spec;
  normal_spec.classes = {{seaport::kNormalLabel, config.sim_normal_windows * config.window_size}};
  normal_spec.separation = config.separation;
  normal_spec.feature_dim = config.feature_dim;
  normal_spec.noise_dims = all_types.size();
  std::vector<FlowRecord> normals =
      dataset::synth_flows(normal_spec, origin, derive_seed(seed, "nrm"));
  for (auto& r : normals) records.push_back(std::move(r));
  return make_windows(records, config.window_size, derive_seed(seed, "win"));
}

}  // namespace

GridResult run_simultaneous(const ExperimentConfig& config) {
  std::vector<std::string> internal_types = config.sim_internal_types;
  std::vector<std::string> external_types = config.sim_external_types;
  if (internal_types.empty()) {
    internal_types.assign(config.internal_types.begin(),
                          config.internal_types.begin() +
                              std::min<std::size_t>(6, config.internal_types.size()));
  }
  if (external_types.empty()) {
    external_types.assign(config.external_types.begin(),
                          config.external_types.begin() +
                              std::min<std::size_t>(6, config.external_types.size()));
  }
  if (internal_types.size() != 6 || external_types.size() != 6) {
    throw Error("bad-grid", "simultaneous mode needs six internal and six external attack types");
  }

  const std::uint64_t seed = config.seed;

  Bootstrap internal_boot, external_boot;
  {
    std::vector<FlowRecord> records =
        sim_bootstrap_records(config, internal_types, Origin::kInternal,
                              derive_seed(seed, "sim-internal"));
    internal_boot = bootstrap_model(records, config, "sim-internal-bootstrap");
  }
  {
    std::vector<FlowRecord> records =
        sim_bootstrap_records(config, external_types, Origin::kExternal,
                              derive_seed(seed, "sim-external"));
    external_boot = bootstrap_model(records, config, "sim-external-bootstrap");
  }

  GridResult grid;
  grid.internal_types = internal_types;
  grid.external_types = external_types;
  grid.cells.assign(6, std::vector<double>(6, 0.0));

  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t e = 0; e < 6; ++e) {
      const std::uint64_t cell_seed = derive_seed(seed, "cell", i * 6 + e);
      std::vector<detection::Window> internal_windows = cell_stream(
          config, internal_types[i], internal_types, Origin::kInternal,
          derive_seed(cell_seed, "internal"));
      std::vector<detection::Window> external_windows = cell_stream(
          config, external_types[e], external_types, Origin::kExternal,
          derive_seed(cell_seed, "external"));

      detection::DetectionState state;
      state.model = internal_boot.model;
      state.threshold = config.stub_always_normal ? 0.0 : config.reliability_threshold;
      state.reselection.baseline = internal_boot.baseline;
      state.reselection.label_config = config.label_config;
      state.reselection.weights = config.weights();
      state.reselection.mode = config.mode;
      state.reselection.timing = config.timing;
      state.reselection.hp = config.hp;
      state.reselection.seed = derive_seed(cell_seed, "reselect");

      std::uint64_t injected = 0, detected = 0;
      const std::size_t ticks = std::max(internal_windows.size(), external_windows.size());
      for (std::size_t t = 0; t < ticks; ++t) {
        // Round-robin on the shared clock; each pipeline only ever sees its
        // own provenance.
        if (t < internal_windows.size()) {
          detection::Window& w = internal_windows[t];
          w.tick = static_cast<long>(t);
          for (const auto& r : w.records) {
            if (r.origin != Origin::kInternal) {
              throw Error("cross-stream", "external record reached the internal pipeline");
            }
            ++grid.isolation_checks;
          }
          detection::detection_step(state, w);
        }
        if (t < external_windows.size()) {
          detection::Window& w = external_windows[t];
          w.tick = static_cast<long>(t);
          for (const auto& r : w.records) {
            if (r.origin != Origin::kExternal) {
              throw Error("cross-stream", "internal record reached the external pipeline");
            }
            ++grid.isolation_checks;
          }
          autocm::Verdict verdict = honeypot::classify_external(w.records, external_boot.model);
          const std::string truth = detection::window_truth(w.records);
          if (!truth.empty() && seaport::is_attack_label(truth)) {
            ++injected;
            if (verdict.attack) ++detected;
          }
        }
      }
      for (const auto& ev : state.event_log) {
        if (!ev.truth.empty() && seaport::is_attack_label(ev.truth)) {
          ++injected;
          if (ev.verdict.rfind("attack", 0) == 0) ++detected;
        }
      }
      grid.cells[i][e] =
          injected ? static_cast<double>(detected) / static_cast<double>(injected) : 0.0;
      grid.injected_attack_windows += injected;
      grid.detected_attack_windows += detected;
    }
  }

  if (!config.out_dir.empty()) {
    fs::create_directories(config.out_dir);
    write_text(fs::path(config.out_dir) / "grid.json", grid.to_json().dump(2) + "\n");
    write_text(fs::path(config.out_dir) / "grid.csv", grid.to_csv());
  }
  return grid;
}

}  // namespace twinpot::experiments
