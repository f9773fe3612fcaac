#pragma once

// Concrete classifier implementations, shared between the ml translation
// units. Not part of the public surface.

#include <cmath>
#include <cstdint>
#include <vector>

#include "twinpot/ml.hpp"
#include "twinpot/rng.hpp"

namespace twinpot::ml::internal {

inline double sigmoid(double z) {
  if (z > 35.0) z = 35.0;
  if (z < -35.0) z = -35.0;
  return 1.0 / (1.0 + std::exp(-z));
}

inline double clip(double g, double limit) {
  if (g > limit) return limit;
  if (g < -limit) return -limit;
  return g;
}

// Per-feature z-scaling fit on the training split; stored with the model.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> sd;

  void fit(const std::vector<std::vector<double>>& x);
  void transform(const std::vector<double>& in, std::vector<double>& out) const;
  std::vector<std::vector<double>> transform_all(const std::vector<std::vector<double>>& x) const;

  nlohmann::json to_json() const;
  static Standardizer from_json(const nlohmann::json& j);
};

// ---- classic methods ------------------------------------------------------

class NaiveBayes final : public Classifier {
 public:
  struct ClassModel {
    std::vector<double> pos_mean, pos_var, neg_mean, neg_var;
    double log_prior_pos = 0.0, log_prior_neg = 0.0;
  };

  static std::unique_ptr<NaiveBayes> fit(const TrainData& data);

  Kind kind() const override { return Kind::kNB; }
  std::size_t class_count() const override { return models_.size(); }
  void class_scores(const std::vector<double>& x, std::vector<double>& out) const override;
  std::uint64_t train_ops() const override { return train_ops_; }
  std::uint64_t predict_ops_per_sample() const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<NaiveBayes> from_json(const nlohmann::json& j);

  std::vector<ClassModel> models_;
  std::uint64_t train_ops_ = 0;
};

class KNearest final : public Classifier {
 public:
  static std::unique_ptr<KNearest> fit(const TrainData& data, int k);

  Kind kind() const override { return Kind::kKNN; }
  std::size_t class_count() const override { return n_classes_; }
  void class_scores(const std::vector<double>& x, std::vector<double>& out) const override;
  std::uint64_t train_ops() const override { return train_ops_; }
  std::uint64_t predict_ops_per_sample() const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<KNearest> from_json(const nlohmann::json& j);

  std::vector<std::vector<double>> x_;
  std::vector<int> y_;
  std::size_t n_classes_ = 0;
  int k_ = 5;
  std::uint64_t train_ops_ = 0;
};

struct TreeNode {
  int feature = -1;           // -1 marks a leaf
  double threshold = 0.0;
  double leaf_value = 0.0;    // positive fraction at the leaf
  int left = -1, right = -1;
};

struct Tree {
  std::vector<TreeNode> nodes;
  double predict(const std::vector<double>& x) const;
  nlohmann::json to_json() const;
  static Tree from_json(const nlohmann::json& j);
};

// CART/Gini. mtry == 0 considers every feature (plain decision tree);
// mtry > 0 draws that many candidate features per split (random forest).
Tree build_tree(const std::vector<std::vector<double>>& x, const std::vector<char>& positive,
                std::vector<int> indices, int max_depth, int mtry, Rng* rng,
                std::uint64_t& ops);

class DecisionTree final : public Classifier {
 public:
  static std::unique_ptr<DecisionTree> fit(const TrainData& data, int max_depth);

  Kind kind() const override { return Kind::kDT; }
  std::size_t class_count() const override { return trees_.size(); }
  void class_scores(const std::vector<double>& x, std::vector<double>& out) const override;
  std::uint64_t train_ops() const override { return train_ops_; }
  std::uint64_t predict_ops_per_sample() const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<DecisionTree> from_json(const nlohmann::json& j);

  std::vector<Tree> trees_;  // one per class
  int max_depth_ = 8;
  std::uint64_t train_ops_ = 0;
};

class RandomForest final : public Classifier {
 public:
  static std::unique_ptr<RandomForest> fit(const TrainData& data, int n_trees, int max_depth,
                                           std::uint64_t seed);

  Kind kind() const override { return Kind::kRF; }
  std::size_t class_count() const override { return forests_.size(); }
  void class_scores(const std::vector<double>& x, std::vector<double>& out) const override;
  std::uint64_t train_ops() const override { return train_ops_; }
  std::uint64_t predict_ops_per_sample() const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<RandomForest> from_json(const nlohmann::json& j);

  std::vector<std::vector<Tree>> forests_;  // [class][tree]
  int max_depth_ = 8;
  std::uint64_t train_ops_ = 0;
};

// Shared shape for logistic regression and linear SVM: per-class linear
// scorers over standardized features.
class LinearModel final : public Classifier {
 public:
  enum class Loss { kLogistic, kHinge };

  static std::unique_ptr<LinearModel> fit(const TrainData& data, Loss loss, int epochs,
                                          double rate, double reg, std::uint64_t seed);

  Kind kind() const override { return loss_ == Loss::kLogistic ? Kind::kLR : Kind::kSVM; }
  std::size_t class_count() const override { return w_.size(); }
  void class_scores(const std::vector<double>& x, std::vector<double>& out) const override;
  std::uint64_t train_ops() const override { return train_ops_; }
  std::uint64_t predict_ops_per_sample() const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<LinearModel> from_json(const nlohmann::json& j);

  Loss loss_ = Loss::kLogistic;
  Standardizer scaler_;
  std::vector<std::vector<double>> w_;  // per class
  std::vector<double> b_;
  std::uint64_t train_ops_ = 0;
};

// ---- neural methods -------------------------------------------------------

struct MlpParams {
  int in = 0, hidden = 0;
  std::vector<double> w1, b1, w2;  // w1: hidden x in
  double b2 = 0.0;
};

class Mlp final : public Classifier {
 public:
  static std::unique_ptr<Mlp> fit(const TrainData& data, int hidden, int epochs, double rate,
                                  std::uint64_t seed);

  Kind kind() const override { return Kind::kMLP; }
  std::size_t class_count() const override { return nets_.size(); }
  void class_scores(const std::vector<double>& x, std::vector<double>& out) const override;
  std::uint64_t train_ops() const override { return train_ops_; }
  std::uint64_t predict_ops_per_sample() const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<Mlp> from_json(const nlohmann::json& j);

  Standardizer scaler_;
  std::vector<MlpParams> nets_;
  std::uint64_t train_ops_ = 0;
};

struct ConvParams {
  int in = 0, filters = 0, width = 0;
  std::vector<double> kernel, kbias, wo;  // kernel: filters x width
  double bo = 0.0;
};

class Conv1d final : public Classifier {
 public:
  static std::unique_ptr<Conv1d> fit(const TrainData& data, int filters, int width, int epochs,
                                     double rate, std::uint64_t seed);

  Kind kind() const override { return Kind::kCNN; }
  std::size_t class_count() const override { return nets_.size(); }
  void class_scores(const std::vector<double>& x, std::vector<double>& out) const override;
  std::uint64_t train_ops() const override { return train_ops_; }
  std::uint64_t predict_ops_per_sample() const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<Conv1d> from_json(const nlohmann::json& j);

  Standardizer scaler_;
  std::vector<ConvParams> nets_;
  std::uint64_t train_ops_ = 0;
};

struct RnnParams {
  int hidden = 0;
  std::vector<double> wx, wh, bh, wo;  // wh: hidden x hidden
  double bo = 0.0;
};

// Features consumed as a length-F sequence of scalars; last hidden state
// feeds a sigmoid readout.
class Rnn final : public Classifier {
 public:
  static std::unique_ptr<Rnn> fit(const TrainData& data, int hidden, int epochs, double rate,
                                  std::uint64_t seed);

  Kind kind() const override { return Kind::kRNN; }
  std::size_t class_count() const override { return nets_.size(); }
  void class_scores(const std::vector<double>& x, std::vector<double>& out) const override;
  std::uint64_t train_ops() const override { return train_ops_; }
  std::uint64_t predict_ops_per_sample() const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<Rnn> from_json(const nlohmann::json& j);

  Standardizer scaler_;
  std::vector<RnnParams> nets_;
  std::uint64_t train_ops_ = 0;
};

struct LstmParams {
  int hidden = 0;
  // Gate order i, f, g, o. wx: 4h, wh: 4h x h, b: 4h.
  std::vector<double> wx, wh, b, wo;
  double bo = 0.0;
};

class Lstm final : public Classifier {
 public:
  static std::unique_ptr<Lstm> fit(const TrainData& data, int hidden, int epochs, double rate,
                                   std::uint64_t seed);

  Kind kind() const override { return Kind::kLSTM; }
  std::size_t class_count() const override { return nets_.size(); }
  void class_scores(const std::vector<double>& x, std::vector<double>& out) const override;
  std::uint64_t train_ops() const override { return train_ops_; }
  std::uint64_t predict_ops_per_sample() const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<Lstm> from_json(const nlohmann::json& j);

  Standardizer scaler_;
  std::vector<LstmParams> nets_;
  std::uint64_t train_ops_ = 0;
};

nlohmann::json vec_json(const std::vector<double>& v);
std::vector<double> vec_from_json(const nlohmann::json& j);

}  // namespace twinpot::ml::internal
