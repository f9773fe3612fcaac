#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "twinpot/ml.hpp"
#include "twinpot/seaport.hpp"

namespace twinpot::autocm {

enum class TimingMode { kVirtual, kReal };
enum class SelectionMode { kNormalized, kStrictEq1 };

std::string timing_mode_name(TimingMode m);
TimingMode timing_mode_from_name(const std::string& name);
std::string selection_mode_name(SelectionMode m);
SelectionMode selection_mode_from_name(const std::string& name);

// Per-method objective weights; defaults favor accuracy with speed as a
// tie-breaker.
struct SelectionWeights {
  std::array<double, 10> alpha;
  std::array<double, 10> beta;

  SelectionWeights() {
    alpha.fill(1.0);
    beta.fill(0.2);
  }
  static SelectionWeights uniform(double a, double b) {
    SelectionWeights w;
    w.alpha.fill(a);
    w.beta.fill(b);
    return w;
  }
};

struct MethodMetrics {
  int id = 0;
  ml::Kind kind = ml::Kind::kNB;
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  double t_start = 0.0;  // seconds, monotonic
  double t_end = 0.0;
};

// lambda = 0.6 * TP/(TP+FN) + 0.4 * TP/(TP+FP); the precision term is 0 when
// nothing was predicted positive. Errors with undefined-lambda when both
// denominators vanish.
double lambda_score(const MethodMetrics& m);

// nu = t_end - t_start. Errors with clock-skew on a negative interval.
double determination_time(const MethodMetrics& m);

struct SelectionResult {
  int winner_id = 0;
  std::vector<double> objectives;  // by method id ascending
  std::vector<double> nu_used;     // normalized or raw, depending on mode
};

// argmax_i alpha_i*lambda_i + beta_i*nu_hat_i with nu_hat_i = min_j nu_j /
// nu_i (1 when nu_i == 0); strict mode scores raw nu_i instead. Ties resolve
// to the lowest method id. Requires exactly one record per id 1..10.
SelectionResult select_final(const std::vector<MethodMetrics>& metrics,
                             const SelectionWeights& weights, SelectionMode mode);

struct Verdict {
  bool attack = false;
  std::string type;  // empty when normal

  std::string str() const { return attack ? "attack:" + type : "normal"; }
};

// A trained multiclass model plus its label dictionary.
struct TrainedModel {
  ml::MethodSpec spec;
  std::vector<std::string> classes;  // index -> label, "normal" first when present
  int normal_class = -1;
  std::shared_ptr<const ml::Classifier> impl;

  int predict_class(const std::vector<double>& features) const;
  Verdict classify(const std::vector<double>& features) const;

  nlohmann::json serialize() const;
  static TrainedModel deserialize(const nlohmann::json& j);
};

// Window verdict: per-record predictions aggregated by plurality; exact ties
// prefer an attack class over normal, then the lowest class index.
Verdict window_verdict(const std::vector<seaport::FlowRecord>& records,
                       const TrainedModel& model);

// Model that classifies everything as normal; detector stub for experiments.
TrainedModel always_normal_model();

struct LabelConfig {
  std::size_t unlabeled_count = 1000;
  std::size_t baseline_draw = 1000;
  int k = 5;  // neighbors for label propagation
};

// Semi-supervised labeling: each unlabeled record takes the majority label of
// its k nearest baseline neighbors (Euclidean over baseline-z-normalized
// features, ties to the attack side), then a seeded stratified draw from the
// baseline is appended. Output size = unlabeled_count + baseline_draw.
std::vector<seaport::FlowRecord> label_data(const std::vector<seaport::FlowRecord>& unlabeled,
                                            const std::vector<seaport::FlowRecord>& baseline,
                                            const LabelConfig& config, std::uint64_t seed);

struct EvalResult {
  TrainedModel model;
  MethodMetrics metrics;
};

// Stratified 70/30 split by seed, metrics on the test split, determination
// time bracketing train+predict.
EvalResult train_and_evaluate(const ml::MethodSpec& spec,
                              const std::vector<seaport::FlowRecord>& data,
                              std::uint64_t split_seed, TimingMode timing);

struct MethodReport {
  MethodMetrics metrics;
  double lambda = 0.0;
  double nu_seconds = 0.0;
  double nu_normalized = 0.0;
  double objective = 0.0;
};

struct AutocmReport {
  std::vector<MethodReport> methods;  // id ascending
  int winner_id = 0;
  SelectionWeights weights;
  std::uint64_t seed = 0;
  SelectionMode mode = SelectionMode::kNormalized;

  nlohmann::json to_json() const;
};

struct Options {
  SelectionWeights weights;
  LabelConfig label_config;
  ml::Hyperparameters hp;
  TimingMode timing = TimingMode::kVirtual;
  SelectionMode mode = SelectionMode::kNormalized;
  std::uint64_t seed = 0;
  bool parallel = true;
  std::optional<ml::Kind> pin_method;  // bypass selection, e.g. the MLP baseline
};

struct RunResult {
  TrainedModel winner;
  AutocmReport report;
};

// label_data -> train_and_evaluate x10 -> select_final.
RunResult run_autocm(const std::vector<seaport::FlowRecord>& unlabeled,
                     const std::vector<seaport::FlowRecord>& baseline, const Options& options);

}  // namespace twinpot::autocm
