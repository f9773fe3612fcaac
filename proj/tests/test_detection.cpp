#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "twinpot/dataset.hpp"
#include "twinpot/detection.hpp"
#include "twinpot/errors.hpp"
#include "twinpot/rng.hpp"

using namespace twinpot;
using namespace twinpot::detection;
using seaport::FlowRecord;
using seaport::Origin;

namespace {

ml::Hyperparameters tiny_hp() {
  ml::Hyperparameters hp;
  hp.lr_epochs = 50;
  hp.svm_epochs = 50;
  hp.mlp_epochs = 5;
  hp.cnn_epochs = 5;
  hp.rnn_epochs = 2;
  hp.lstm_epochs = 2;
  hp.rf_trees = 4;
  return hp;
}

std::vector<FlowRecord> synth(const std::string& label, std::size_t count, std::uint64_t seed,
                              Origin origin = Origin::kInternal) {
  dataset::GeneratorSpec spec;
  spec.classes = {{label, count}};
  spec.separation = 6.0;
  spec.feature_dim = 8;
  spec.noise_dims = 2;
  spec.axis_offset = label == seaport::kNormalLabel ? 0 : 1;
  return dataset::synth_flows(spec, origin, seed);
}

autocm::TrainedModel trained_model(std::uint64_t seed) {
  std::vector<FlowRecord> data = synth("normal", 200, seed);
  std::vector<FlowRecord> attack = synth("ddos-udp", 200, seed + 1);
  data.insert(data.end(), attack.begin(), attack.end());
  ml::MethodSpec spec{4, ml::Kind::kDT, tiny_hp()};
  return autocm::train_and_evaluate(spec, data, seed, autocm::TimingMode::kVirtual).model;
}

DetectionState fresh_state(std::uint64_t seed) {
  DetectionState state;
  state.model = trained_model(seed);
  state.threshold = 0.95;
  state.reselection.hp = tiny_hp();
  state.reselection.label_config.unlabeled_count = 30;
  state.reselection.label_config.baseline_draw = 40;
  state.reselection.seed = seed;
  std::vector<FlowRecord> baseline = synth("normal", 30, seed + 10);
  std::vector<FlowRecord> attack = synth("ddos-udp", 30, seed + 11);
  baseline.insert(baseline.end(), attack.begin(), attack.end());
  state.reselection.baseline = std::move(baseline);
  return state;
}

Window make_window(std::uint64_t id, long tick, std::vector<FlowRecord> records) {
  return Window{id, tick, std::move(records)};
}

}  // namespace

TEST_CASE("reliability follows the FN-based formula") {
  CHECK(reliability({80, 0, 20, 0}) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(reliability({10, 5, 0, 5}) == 1.0);
  CHECK(reliability({0, 0, 5, 0}) == 0.0);
  CHECK_THROWS_WITH_AS(reliability({0, 3, 0, 9}), doctest::Contains("undefined-reliability"),
                       Error);
}

TEST_CASE("reliability is monotone non-increasing in FN") {
  double prev = 1.0;
  for (std::uint64_t fn = 0; fn <= 50; ++fn) {
    double gamma = reliability({10, 0, fn, 0});
    CHECK(gamma <= prev + 1e-15);
    prev = gamma;
  }
  CHECK(reliability({10, 0, 0, 0}) == 1.0);
}

TEST_CASE("mitigate maps volumetric types to drop and others to quarantine") {
  MitigationPolicy policy;
  Window w = make_window(3, 0, synth("ddos-udp", 5, 1));

  autocm::Verdict ddos{true, "ddos-udp"};
  MitigationAction a = mitigate(ddos, w, policy);
  CHECK(a.action == MitigationKind::kDrop);
  CHECK(a.window_id == 3);
  CHECK(a.notice.find("ddos-udp") != std::string::npos);

  autocm::Verdict backdoor{true, "backdoor"};
  CHECK(mitigate(backdoor, w, policy).action == MitigationKind::kQuarantineEntity);

  autocm::Verdict normal{false, ""};
  CHECK_THROWS_WITH_AS(mitigate(normal, w, policy), doctest::Contains("invalid-call"), Error);
}

TEST_CASE("mitigation policy honours per-type overrides") {
  MitigationPolicy policy;
  policy.overrides["ddos-udp"] = MitigationKind::kQuarantineEntity;
  CHECK(policy.resolve("ddos-udp") == MitigationKind::kQuarantineEntity);
  CHECK(policy.resolve("ddos-tcp") == MitigationKind::kDrop);
  CHECK(policy.resolve("ransomware") == MitigationKind::kQuarantineEntity);
}

TEST_CASE("detect updates confusion counts after the verdict") {
  DetectionState state = fresh_state(60);

  autocm::Verdict attack = detect(make_window(0, 0, synth("ddos-udp", 40, 2)), state);
  CHECK(attack.attack);
  CHECK(state.stats.tp == 1);

  autocm::Verdict normal = detect(make_window(1, 1, synth("normal", 40, 3)), state);
  CHECK_FALSE(normal.attack);
  CHECK(state.stats.tn == 1);
  CHECK(state.stats.labeled_windows() == 2);
}

TEST_CASE("detect rejects external flows") {
  DetectionState state = fresh_state(61);
  std::vector<FlowRecord> records = synth("normal", 10, 4);
  records.push_back(synth("normal", 1, 5, Origin::kExternal)[0]);
  CHECK_THROWS_WITH_AS(detect(make_window(0, 0, std::move(records)), state),
                       doctest::Contains("wrong-origin"), Error);
}

TEST_CASE("detection_step attack branch mitigates and keeps the model") {
  DetectionState state = fresh_state(62);
  const int model_id = state.model.spec.id;
  detection_step(state, make_window(0, 0, synth("ddos-udp", 40, 6)));

  REQUIRE(state.event_log.size() == 1);
  const EventRecord& e = state.event_log[0];
  CHECK(e.verdict == "attack:ddos-udp");
  REQUIRE(e.action.has_value());
  CHECK(*e.action == "drop");
  CHECK(e.notice.has_value());
  CHECK_FALSE(e.gamma.has_value());
  CHECK_FALSE(e.reselected);
  CHECK(state.model.spec.id == model_id);
  CHECK(state.autocm_invocations == 0);
}

TEST_CASE("detection_step continues with the model when gamma clears the threshold") {
  DetectionState state = fresh_state(63);
  state.stats = {97, 0, 3, 0};  // gamma = 0.97
  detection_step(state, make_window(0, 0, synth("normal", 40, 7)));

  REQUIRE(state.event_log.size() == 1);
  const EventRecord& e = state.event_log[0];
  CHECK(e.verdict == "normal");
  REQUIRE(e.gamma.has_value());
  CHECK(*e.gamma == doctest::Approx(0.97).epsilon(1e-9));
  CHECK_FALSE(e.reselected);
  CHECK(state.autocm_invocations == 0);
}

TEST_CASE("detection_step re-selects through AutoCM when gamma falls below threshold") {
  DetectionState state = fresh_state(64);
  state.stats = {90, 0, 10, 0};  // gamma = 0.9 < 0.95

  // a couple of windows to populate the unlabeled pool
  detection_step(state, make_window(0, 0, synth("ddos-udp", 30, 8)));
  CHECK(state.autocm_invocations == 0);  // attack branch never re-selects

  detection_step(state, make_window(1, 1, synth("normal", 30, 9)));
  CHECK(state.autocm_invocations == 1);
  REQUIRE(state.event_log.size() == 2);
  CHECK(state.event_log[1].reselected);
  REQUIRE(state.autocm_reports.size() == 1);
  CHECK(state.autocm_reports[0].methods.size() == 10);
  // counts reset so the new model gets a fresh reliability record
  CHECK(state.stats.labeled_windows() <= 1);
}

TEST_CASE("undefined gamma continues with the existing model") {
  DetectionState state = fresh_state(65);
  detection_step(state, make_window(0, 0, synth("normal", 40, 10)));
  REQUIRE(state.event_log.size() == 1);
  CHECK_FALSE(state.event_log[0].gamma.has_value());
  CHECK_FALSE(state.event_log[0].reselected);
  CHECK(state.autocm_invocations == 0);
}

TEST_CASE("branch exclusivity and confusion conservation over random traces") {
  DetectionState state = fresh_state(66);
  Rng rng(123);
  std::uint64_t labeled = 0;
  std::uint64_t expected_invocations = 0;
  std::uint64_t counted_at_last_reset = 0;

  for (int step = 0; step < 40; ++step) {
    bool is_attack = rng.below(3) == 0;
    Window w = make_window(static_cast<std::uint64_t>(step), step,
                           is_attack ? synth("ddos-udp", 20, 1000 + static_cast<std::uint64_t>(step))
                                     : synth("normal", 20, 2000 + static_cast<std::uint64_t>(step)));
    // predict what the step should do, with the verdict the model will emit
    autocm::Verdict predicted = autocm::window_verdict(w.records, state.model);
    bool will_reselect = false;
    if (!predicted.attack && state.stats.tp + state.stats.fn > 0) {
      ReliabilityStats peek = state.stats;
      const std::string truth = window_truth(w.records);
      bool truth_attack = seaport::is_attack_label(truth);
      if (truth_attack && predicted.attack) ++peek.tp;
      if (!truth_attack && predicted.attack) ++peek.fp;
      if (truth_attack && !predicted.attack) ++peek.fn;
      if (!truth_attack && !predicted.attack) ++peek.tn;
      will_reselect = reliability(peek) < state.threshold;
    }
    if (will_reselect) ++expected_invocations;

    detection_step(state, w);
    ++labeled;

    const EventRecord& e = state.event_log.back();
    int branches = 0;
    if (e.action.has_value()) ++branches;                    // mitigation
    if (e.reselected) ++branches;                            // re-selection
    if (!e.action.has_value() && !e.reselected) ++branches;  // continue
    CHECK(branches == 1);
    if (e.action.has_value()) CHECK_FALSE(e.reselected);  // AutoCM never runs on attack steps

    if (e.reselected) counted_at_last_reset = labeled;
  }
  CHECK(state.autocm_invocations == expected_invocations);
  // counts conserve since the last reset
  CHECK(state.stats.labeled_windows() == labeled - counted_at_last_reset);
}

TEST_CASE("event log serializes one JSON line per step") {
  DetectionState state = fresh_state(67);
  detection_step(state, make_window(0, 0, synth("ddos-udp", 25, 30)));
  detection_step(state, make_window(1, 1, synth("normal", 25, 31)));
  std::string jsonl = events_to_jsonl(state.event_log);

  std::istringstream in(jsonl);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    nlohmann::json j = nlohmann::json::parse(line);
    CHECK(j.contains("tick"));
    CHECK(j.contains("verdict"));
    CHECK(j.contains("truth"));
    ++lines;
  }
  CHECK(lines == 2);
}
