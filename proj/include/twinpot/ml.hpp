#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

namespace twinpot::ml {

// Method ids 1..10, in this order.
enum class Kind { kNB = 1, kKNN, kCNN, kDT, kRNN, kLR, kLSTM, kSVM, kMLP, kRF };

std::string kind_name(Kind kind);
Kind kind_from_name(const std::string& name);

// Desk-scale defaults; every field is configurable.
struct Hyperparameters {
  int knn_k = 5;
  int dt_depth = 8;
  int lr_epochs = 500;
  double lr_rate = 0.1;
  int svm_epochs = 500;
  double svm_rate = 0.1;
  double svm_reg = 1e-3;
  int rf_trees = 32;
  int rf_depth = 8;
  int mlp_hidden = 32;
  int mlp_epochs = 200;
  double mlp_rate = 0.05;
  int cnn_filters = 8;
  int cnn_width = 3;
  int cnn_epochs = 200;
  double cnn_rate = 0.05;
  int rnn_hidden = 16;
  int rnn_epochs = 100;
  double rnn_rate = 0.05;
  int lstm_hidden = 16;
  int lstm_epochs = 100;
  double lstm_rate = 0.05;

  nlohmann::json to_json() const;
  static Hyperparameters from_json(const nlohmann::json& j);
};

struct MethodSpec {
  int id = 0;
  Kind kind = Kind::kNB;
  Hyperparameters hp;
};

// Exactly ten specs, one per kind, ids 1..10.
std::vector<MethodSpec> method_registry(const Hyperparameters& hp = {});

struct TrainData {
  std::vector<std::vector<double>> x;  // n rows of F features
  std::vector<int> y;                  // class indices in [0, n_classes)
  std::size_t n_classes = 0;
};

// Trained multiclass model. All ten methods are trained one-vs-rest: one
// binary scorer per class, prediction by argmax over class scores. Prediction
// is deterministic for fixed parameters and parameters serialize to JSON.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual Kind kind() const = 0;
  virtual std::size_t class_count() const = 0;

  // Per-class scores; out is resized to class_count().
  virtual void class_scores(const std::vector<double>& x, std::vector<double>& out) const = 0;

  // Deterministic work accounting, the basis of virtual determination time.
  virtual std::uint64_t train_ops() const = 0;
  virtual std::uint64_t predict_ops_per_sample() const = 0;

  virtual nlohmann::json to_json() const = 0;

  std::vector<double> class_scores(const std::vector<double>& x) const {
    std::vector<double> s;
    class_scores(x, s);
    return s;
  }
};

// Argmax with the attack-wins tie rule: on exactly equal scores an attack
// class (index != normal_class) beats normal, then the lowest index wins.
int argmax_class(const std::vector<double>& scores, int normal_class);

std::unique_ptr<Classifier> train_classifier(const MethodSpec& spec, const TrainData& data,
                                             std::uint64_t seed);
std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j);

}  // namespace twinpot::ml
