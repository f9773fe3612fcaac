#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "twinpot/autocm.hpp"
#include "twinpot/dataset.hpp"
#include "twinpot/errors.hpp"
#include "twinpot/rng.hpp"

using namespace twinpot;
using namespace twinpot::autocm;
using seaport::FlowRecord;
using seaport::Origin;

namespace {

FlowRecord flow(std::vector<double> x, const char* label) {
  FlowRecord r;
  r.features = std::move(x);
  if (label) r.label = label;
  return r;
}

ml::Hyperparameters quick_hp() {
  ml::Hyperparameters hp;
  hp.lr_epochs = 150;
  hp.svm_epochs = 150;
  hp.mlp_epochs = 30;
  hp.cnn_epochs = 30;
  hp.rnn_epochs = 10;
  hp.lstm_epochs = 10;
  hp.rf_trees = 8;
  return hp;
}

std::vector<FlowRecord> labeled_separable(std::size_t n_per_class, std::uint64_t seed) {
  dataset::GeneratorSpec spec;
  spec.classes = {{"normal", n_per_class}, {"ddos-udp", n_per_class}};
  spec.separation = 6.0;
  spec.feature_dim = 8;
  spec.noise_dims = 2;
  return dataset::synth_flows(spec, Origin::kInternal, seed);
}

MethodMetrics random_metrics(int id, Rng& rng) {
  MethodMetrics m;
  m.id = id;
  m.kind = static_cast<ml::Kind>(id);
  m.tp = 1 + rng.below(200);
  m.fp = rng.below(100);
  m.fn = rng.below(100);
  m.tn = rng.below(200);
  m.t_start = rng.uniform(0, 10);
  m.t_end = m.t_start + rng.uniform(0, 5);
  return m;
}

}  // namespace

TEST_CASE("lambda_score matches the weighted precision/recall formula") {
  MethodMetrics m;
  m.tp = 80;
  m.fn = 20;
  m.fp = 10;
  CHECK(lambda_score(m) == doctest::Approx(0.6 * 0.8 + 0.4 * (80.0 / 90.0)).epsilon(1e-12));

  m = MethodMetrics{};
  m.tp = 100;
  CHECK(lambda_score(m) == 1.0);

  m = MethodMetrics{};
  m.fn = 50;
  CHECK(lambda_score(m) == 0.0);  // precision term 0 when nothing predicted positive

  m = MethodMetrics{};
  m.tn = 10;
  CHECK_THROWS_WITH_AS(lambda_score(m), doctest::Contains("undefined-lambda"), Error);
}

TEST_CASE("determination_time is the elapsed interval") {
  MethodMetrics m;
  m.t_start = 5.0;
  m.t_end = 5.2;
  CHECK(determination_time(m) == doctest::Approx(0.2).epsilon(1e-12));
  m.t_end = 5.0;
  CHECK(determination_time(m) == 0.0);
  m.t_end = 4.9;
  CHECK_THROWS_WITH_AS(determination_time(m), doctest::Contains("clock-skew"), Error);
}

TEST_CASE("select_final prefers the fastest method among equal lambdas") {
  std::vector<MethodMetrics> metrics;
  for (int id = 1; id <= 10; ++id) {
    MethodMetrics m;
    m.id = id;
    m.kind = static_cast<ml::Kind>(id);
    m.tp = 90;
    m.fn = 10;
    m.fp = 10;
    m.t_start = 0.0;
    m.t_end = static_cast<double>(id);  // method 1 fastest
    metrics.push_back(m);
  }
  auto result = select_final(metrics, SelectionWeights::uniform(1.0, 0.2),
                             SelectionMode::kNormalized);
  CHECK(result.winner_id == 1);
}

TEST_CASE("select_final lambda dominance beats the speed bonus") {
  std::vector<MethodMetrics> metrics;
  for (int id = 1; id <= 10; ++id) {
    MethodMetrics m;
    m.id = id;
    m.kind = static_cast<ml::Kind>(id);
    if (id == 7) {
      m.tp = 100;  // lambda = 1.0
    } else {
      m.tp = 80;
      m.fn = 20;
      m.fp = 20;  // lambda = 0.8
    }
    m.t_start = 0.0;
    m.t_end = id == 7 ? 10.0 : 1.0;  // the best method is also the slowest
    metrics.push_back(m);
  }
  auto result = select_final(metrics, SelectionWeights::uniform(1.0, 0.2),
                             SelectionMode::kNormalized);
  CHECK(result.winner_id == 7);
}

TEST_CASE("select_final equals brute force on random inputs in both modes") {
  Rng rng(404);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<MethodMetrics> metrics;
    for (int id = 1; id <= 10; ++id) metrics.push_back(random_metrics(id, rng));
    SelectionWeights weights;
    for (int i = 0; i < 10; ++i) {
      weights.alpha[static_cast<std::size_t>(i)] = rng.uniform(0.1, 2.0);
      weights.beta[static_cast<std::size_t>(i)] = rng.uniform(0.0, 1.0);
    }
    for (SelectionMode mode : {SelectionMode::kNormalized, SelectionMode::kStrictEq1}) {
      auto result = select_final(metrics, weights, mode);
      // brute force over the returned objective values
      int best = 0;
      for (int i = 1; i < 10; ++i) {
        if (result.objectives[static_cast<std::size_t>(i)] >
            result.objectives[static_cast<std::size_t>(best)]) {
          best = i;
        }
      }
      CHECK(result.winner_id == best + 1);
      // independent recomputation of each objective
      double nu_min = 1e300;
      for (const auto& m : metrics) nu_min = std::min(nu_min, m.t_end - m.t_start);
      for (const auto& m : metrics) {
        double nu = m.t_end - m.t_start;
        double nu_used = mode == SelectionMode::kStrictEq1 ? nu : (nu == 0.0 ? 1.0 : nu_min / nu);
        double lambda = lambda_score(m);
        double expect = weights.alpha[static_cast<std::size_t>(m.id - 1)] * lambda +
                        weights.beta[static_cast<std::size_t>(m.id - 1)] * nu_used;
        CHECK(result.objectives[static_cast<std::size_t>(m.id - 1)] ==
              doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("select_final resolves ties to the lowest id and scales invariantly") {
  std::vector<MethodMetrics> metrics;
  for (int id = 1; id <= 10; ++id) {
    MethodMetrics m;
    m.id = id;
    m.kind = static_cast<ml::Kind>(id);
    m.tp = 50;
    m.t_start = 0.0;
    m.t_end = 2.0;  // identical speed, identical lambda
    metrics.push_back(m);
  }
  auto tie = select_final(metrics, SelectionWeights::uniform(1.0, 0.2),
                          SelectionMode::kNormalized);
  CHECK(tie.winner_id == 1);

  Rng rng(7);
  std::vector<MethodMetrics> random;
  for (int id = 1; id <= 10; ++id) random.push_back(random_metrics(id, rng));
  auto base = select_final(random, SelectionWeights::uniform(1.0, 0.2),
                           SelectionMode::kNormalized);
  auto scaled = select_final(random, SelectionWeights::uniform(3.5, 0.7),
                             SelectionMode::kNormalized);
  CHECK(base.winner_id == scaled.winner_id);
}

TEST_CASE("select_final validates method ids") {
  std::vector<MethodMetrics> nine;
  Rng rng(1);
  for (int id = 1; id <= 9; ++id) nine.push_back(random_metrics(id, rng));
  CHECK_THROWS_WITH_AS(select_final(nine, {}, SelectionMode::kNormalized),
                       doctest::Contains("method-ids"), Error);

  std::vector<MethodMetrics> dup = nine;
  dup.push_back(random_metrics(9, rng));
  CHECK_THROWS_WITH_AS(select_final(dup, {}, SelectionMode::kNormalized),
                       doctest::Contains("method-ids"), Error);
}

TEST_CASE("label_data labels by nearest baseline cluster") {
  // two-cluster baseline on one axis
  std::vector<FlowRecord> baseline;
  Rng rng(5);
  for (int i = 0; i < 30; ++i) {
    baseline.push_back(flow({rng.normal() * 0.3, 0.0}, "normal"));
    baseline.push_back(flow({6.0 + rng.normal() * 0.3, 0.0}, "ddos-udp"));
  }
  std::vector<FlowRecord> unlabeled = {flow({6.0, 0.0}, nullptr), flow({0.0, 0.0}, nullptr)};

  LabelConfig config;
  config.unlabeled_count = 2;
  config.baseline_draw = 10;
  auto out = label_data(unlabeled, baseline, config, 1);
  REQUIRE(out.size() == 12);
  CHECK(*out[0].label == "ddos-udp");  // at the attack centroid
  CHECK(*out[1].label == "normal");
  // features are never modified
  CHECK(out[0].features == unlabeled[0].features);
  CHECK(out[1].features == unlabeled[1].features);
}

TEST_CASE("label_data majority and tie rules favor attacks") {
  // five baseline points equidistant from the query: 2 normal, 2 + 1 attacks
  std::vector<FlowRecord> baseline = {
      flow({1.0, 0.0}, "normal"),   flow({-1.0, 0.0}, "normal"),
      flow({0.0, 1.0}, "ddos-udp"), flow({0.0, -1.0}, "ddos-udp"),
      flow({0.7071, 0.7071}, "backdoor"),
  };
  std::vector<FlowRecord> unlabeled = {flow({0.0, 0.0}, nullptr)};
  LabelConfig config;
  config.unlabeled_count = 1;
  config.baseline_draw = 5;
  config.k = 5;
  auto out = label_data(unlabeled, baseline, config, 2);
  CHECK(seaport::is_attack_label(*out[0].label));  // 3 attack votes vs 2 normal
  CHECK(*out[0].label == "ddos-udp");              // plurality attack type

  // exact 2-2 tie with k=4 resolves to the attack class
  config.k = 4;
  std::vector<FlowRecord> tie_baseline = {
      flow({1.0, 0.0}, "normal"),
      flow({-1.0, 0.0}, "normal"),
      flow({0.0, 1.0}, "port-scanning"),
      flow({0.0, -1.0}, "port-scanning"),
  };
  config.baseline_draw = 4;
  auto tie = label_data(unlabeled, tie_baseline, config, 3);
  CHECK(*tie[0].label == "port-scanning");
}

TEST_CASE("label_data output composition and preconditions") {
  auto pool = labeled_separable(120, 21);
  std::vector<FlowRecord> unlabeled, baseline;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (i % 2 == 0 && unlabeled.size() < 100) {
      FlowRecord r = pool[i];
      r.label.reset();
      unlabeled.push_back(std::move(r));
    } else {
      baseline.push_back(pool[i]);
    }
  }
  LabelConfig config;
  config.unlabeled_count = 100;
  config.baseline_draw = 100;
  auto out = label_data(unlabeled, baseline, config, 11);
  REQUIRE(out.size() == 200);
  for (const auto& r : out) CHECK(r.label.has_value());

  // the baseline draws are a subset of the baseline
  std::set<std::string> baseline_keys;
  for (const auto& r : baseline) {
    baseline_keys.insert(nlohmann::json(r.features).dump());
  }
  for (std::size_t i = 100; i < 200; ++i) {
    CHECK(baseline_keys.count(nlohmann::json(out[i].features).dump()) == 1);
  }

  CHECK_THROWS_WITH_AS(label_data(unlabeled, baseline, LabelConfig{99, 100, 5}, 1),
                       doctest::Contains("size-mismatch"), Error);

  std::vector<FlowRecord> single_class(baseline.begin(), baseline.begin() + 110);
  for (auto& r : single_class) r.label = "normal";
  CHECK_THROWS_WITH_AS(label_data(unlabeled, single_class, config, 1),
                       doctest::Contains("single-class"), Error);
}

TEST_CASE("train_and_evaluate gets a separable problem exactly right with LR") {
  auto data = labeled_separable(300, 31);
  ml::MethodSpec spec{6, ml::Kind::kLR, {}};  // default 500-epoch logistic regression
  auto result = train_and_evaluate(spec, data, 5, TimingMode::kVirtual);
  CHECK(result.metrics.fn == 0);
  CHECK(result.metrics.fp == 0);
  CHECK(lambda_score(result.metrics) == 1.0);
}

TEST_CASE("train_and_evaluate on label-free data stays near the prior") {
  dataset::GeneratorSpec spec;
  spec.classes = {{"normal", 300}, {"ddos-udp", 300}};
  spec.separation = 0.0;  // labels carry no signal
  spec.feature_dim = 8;
  spec.noise_dims = 8;
  auto data = dataset::synth_flows(spec, Origin::kInternal, 44);
  for (ml::Kind kind : {ml::Kind::kKNN, ml::Kind::kDT}) {
    ml::MethodSpec ms{static_cast<int>(kind), kind, quick_hp()};
    auto result = train_and_evaluate(ms, data, 9, TimingMode::kVirtual);
    double lambda = lambda_score(result.metrics);
    CAPTURE(ml::kind_name(kind));
    CHECK(lambda >= 0.3);
    CHECK(lambda <= 0.7);
  }
}

TEST_CASE("train_and_evaluate is deterministic and conserves confusion counts") {
  auto data = labeled_separable(150, 32);
  const std::size_t test_size = data.size() - static_cast<std::size_t>(
      0.7 * 150 + 0.5) * 2;
  for (const auto& spec : ml::method_registry(quick_hp())) {
    auto a = train_and_evaluate(spec, data, 77, TimingMode::kVirtual);
    auto b = train_and_evaluate(spec, data, 77, TimingMode::kVirtual);
    CAPTURE(ml::kind_name(spec.kind));
    CHECK(a.metrics.tp == b.metrics.tp);
    CHECK(a.metrics.fp == b.metrics.fp);
    CHECK(a.metrics.fn == b.metrics.fn);
    CHECK(a.metrics.tn == b.metrics.tn);
    CHECK(a.metrics.tp + a.metrics.fp + a.metrics.fn + a.metrics.tn == test_size);
    CHECK(a.metrics.t_end == b.metrics.t_end);  // virtual clock from op counts
  }
}

TEST_CASE("train_and_evaluate rejects single-class data") {
  std::vector<FlowRecord> data;
  for (int i = 0; i < 50; ++i) data.push_back(flow({0.0, 1.0}, "normal"));
  ml::MethodSpec spec{1, ml::Kind::kNB, {}};
  CHECK_THROWS_WITH_AS(train_and_evaluate(spec, data, 1, TimingMode::kVirtual),
                       doctest::Contains("single-class"), Error);
}

TEST_CASE("window_verdict aggregates per-record predictions") {
  auto data = labeled_separable(200, 33);
  ml::MethodSpec spec{4, ml::Kind::kDT, quick_hp()};
  auto eval = train_and_evaluate(spec, data, 3, TimingMode::kVirtual);

  dataset::GeneratorSpec gen;
  gen.classes = {{"ddos-udp", 30}};
  gen.separation = 6.0;
  gen.feature_dim = 8;
  gen.noise_dims = 2;
  gen.axis_offset = 1;  // same axis the class had in the training layout
  auto attack_window = dataset::synth_flows(gen, Origin::kInternal, 5);
  Verdict v = window_verdict(attack_window, eval.model);
  CHECK(v.attack);
  CHECK(v.type == "ddos-udp");
  CHECK(v.str() == "attack:ddos-udp");

  gen.classes = {{"normal", 30}};
  auto normal_window = dataset::synth_flows(gen, Origin::kInternal, 6);
  Verdict n = window_verdict(normal_window, eval.model);
  CHECK_FALSE(n.attack);
  CHECK(n.str() == "normal");
}

TEST_CASE("run_autocm selects a winner whose lambda is maximal up to the speed bonus") {
  auto pool = labeled_separable(1000, 50);
  std::vector<FlowRecord> unlabeled, baseline;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (i % 2 == 0 && unlabeled.size() < 1000) {
      FlowRecord r = pool[i];
      r.label.reset();
      unlabeled.push_back(std::move(r));
    } else if (baseline.size() < 1000) {
      baseline.push_back(pool[i]);
    }
  }
  Options options;
  options.hp = quick_hp();
  options.seed = 202;
  auto run = run_autocm(unlabeled, baseline, options);

  REQUIRE(run.report.methods.size() == 10);
  double max_lambda = 0.0;
  for (const auto& m : run.report.methods) max_lambda = std::max(max_lambda, m.lambda);
  double winner_lambda =
      run.report.methods[static_cast<std::size_t>(run.report.winner_id - 1)].lambda;
  // the winner may trade at most the beta bonus of lambda for speed
  CHECK(winner_lambda >= max_lambda - 0.2);
  CHECK(run.winner.spec.id == run.report.winner_id);

  // reruns are byte-identical under the virtual clock
  auto rerun = run_autocm(unlabeled, baseline, options);
  CHECK(run.report.to_json().dump() == rerun.report.to_json().dump());

  // serialized winner predicts identically
  TrainedModel restored = TrainedModel::deserialize(run.winner.serialize());
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(restored.classify(pool[i].features).str() ==
          run.winner.classify(pool[i].features).str());
  }
}

TEST_CASE("run_autocm rejects a single-class baseline") {
  auto pool = labeled_separable(60, 51);
  std::vector<FlowRecord> unlabeled;
  std::vector<FlowRecord> baseline;
  for (std::size_t i = 0; i < 50; ++i) {
    FlowRecord r = pool[i];
    r.label.reset();
    unlabeled.push_back(std::move(r));
  }
  for (std::size_t i = 0; i < 60; ++i) {
    FlowRecord r = pool[i];
    r.label = "normal";
    baseline.push_back(std::move(r));
  }
  Options options;
  options.label_config.unlabeled_count = 50;
  options.label_config.baseline_draw = 50;
  CHECK_THROWS_WITH_AS(run_autocm(unlabeled, baseline, options),
                       doctest::Contains("single-class"), Error);
}
