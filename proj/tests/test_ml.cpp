#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "twinpot/ml.hpp"
#include "twinpot/rng.hpp"

using namespace twinpot;
using namespace twinpot::ml;

namespace {

// Two well-separated clusters: class 0 near the origin, class 1 shifted on
// axis 0.
TrainData separable_data(std::size_t n_per_class, std::size_t f, std::uint64_t seed) {
  TrainData data;
  data.n_classes = 2;
  Rng rng(seed);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      std::vector<double> x(f, 0.0);
      for (std::size_t d = 0; d < 4 && d < f; ++d) x[d] = rng.normal();
      if (c == 1) x[0] += 6.0;
      data.x.push_back(std::move(x));
      data.y.push_back(static_cast<int>(c));
    }
  }
  return data;
}

double accuracy(const Classifier& model, const TrainData& data) {
  std::size_t hits = 0;
  std::vector<double> scores;
  for (std::size_t i = 0; i < data.x.size(); ++i) {
    model.class_scores(data.x[i], scores);
    if (argmax_class(scores, 0) == data.y[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.x.size());
}

Hyperparameters quick_hp() {
  Hyperparameters hp;
  hp.lr_epochs = 150;
  hp.svm_epochs = 150;
  hp.mlp_epochs = 40;
  hp.cnn_epochs = 40;
  hp.rnn_epochs = 25;
  hp.lstm_epochs = 25;
  hp.rf_trees = 12;
  return hp;
}

}  // namespace

TEST_CASE("method registry holds exactly ten specs, one per kind") {
  auto specs = method_registry();
  REQUIRE(specs.size() == 10);
  for (int i = 0; i < 10; ++i) {
    CHECK(specs[static_cast<std::size_t>(i)].id == i + 1);
    CHECK(static_cast<int>(specs[static_cast<std::size_t>(i)].kind) == i + 1);
  }
  CHECK(kind_name(specs[0].kind) == "nb");
  CHECK(kind_name(specs[9].kind) == "rf");
}

TEST_CASE("argmax prefers attack classes on exact ties") {
  // class 0 is normal
  CHECK(argmax_class({0.5, 0.5}, 0) == 1);
  CHECK(argmax_class({0.5, 0.5, 0.5}, 0) == 1);  // lowest attack index
  CHECK(argmax_class({0.9, 0.2}, 0) == 0);
  CHECK(argmax_class({0.2, 0.9}, 0) == 1);
  // no normal class present: plain lowest-index tie
  CHECK(argmax_class({0.5, 0.5}, -1) == 0);
}

TEST_CASE("every method learns a separable two-class problem") {
  TrainData train = separable_data(120, 16, 3);
  TrainData test = separable_data(60, 16, 4);
  for (const auto& spec : method_registry(quick_hp())) {
    auto model = train_classifier(spec, train, 17);
    CAPTURE(kind_name(spec.kind));
    CHECK(accuracy(*model, test) >= 0.9);
    CHECK(model->train_ops() > 0);
    CHECK(model->predict_ops_per_sample() > 0);
  }
}

TEST_CASE("training is deterministic for fixed data and seed") {
  TrainData train = separable_data(80, 16, 5);
  TrainData probe = separable_data(20, 16, 6);
  for (const auto& spec : method_registry(quick_hp())) {
    auto a = train_classifier(spec, train, 99);
    auto b = train_classifier(spec, train, 99);
    std::vector<double> sa, sb;
    for (const auto& x : probe.x) {
      a->class_scores(x, sa);
      b->class_scores(x, sb);
      CAPTURE(kind_name(spec.kind));
      CHECK(sa == sb);
    }
    CHECK(a->train_ops() == b->train_ops());
  }
}

TEST_CASE("serialization round trip reproduces predictions exactly") {
  TrainData train = separable_data(60, 16, 8);
  TrainData probe = separable_data(15, 16, 9);
  for (const auto& spec : method_registry(quick_hp())) {
    auto model = train_classifier(spec, train, 7);
    auto restored = classifier_from_json(model->to_json());
    REQUIRE(restored != nullptr);
    CHECK(restored->kind() == model->kind());
    std::vector<double> sa, sb;
    for (const auto& x : probe.x) {
      model->class_scores(x, sa);
      restored->class_scores(x, sb);
      CAPTURE(kind_name(spec.kind));
      CHECK(sa == sb);
    }
  }
}

TEST_CASE("multiclass one-vs-rest separates three clusters") {
  TrainData data;
  data.n_classes = 3;
  Rng rng(12);
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 100; ++i) {
      std::vector<double> x(8, 0.0);
      for (int d = 0; d < 3; ++d) x[static_cast<std::size_t>(d)] = rng.normal();
      if (c > 0) x[static_cast<std::size_t>(c - 1)] += 6.0;
      data.x.push_back(std::move(x));
      data.y.push_back(c);
    }
  }
  for (Kind kind : {Kind::kNB, Kind::kKNN, Kind::kDT, Kind::kLR, Kind::kRF}) {
    MethodSpec spec{static_cast<int>(kind), kind, quick_hp()};
    auto model = train_classifier(spec, data, 3);
    CAPTURE(kind_name(kind));
    CHECK(model->class_count() == 3);
    CHECK(accuracy(*model, data) >= 0.95);
  }
}
