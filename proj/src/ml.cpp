#include "twinpot/ml.hpp"

#include <algorithm>

#include "ml_internal.hpp"
#include "twinpot/errors.hpp"
#include "twinpot/rng.hpp"

namespace twinpot {

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
  if (k > n) k = n;
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  return out;
}

}  // namespace twinpot

namespace twinpot::ml {

namespace {

const std::pair<Kind, const char*> kKindNames[] = {
    {Kind::kNB, "nb"},   {Kind::kKNN, "knn"},   {Kind::kCNN, "cnn"}, {Kind::kDT, "dt"},
    {Kind::kRNN, "rnn"}, {Kind::kLR, "lr"},     {Kind::kLSTM, "lstm"},
    {Kind::kSVM, "svm"}, {Kind::kMLP, "mlp"},   {Kind::kRF, "rf"},
};

}  // namespace

std::string kind_name(Kind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "nb";
}

Kind kind_from_name(const std::string& name) {
  for (const auto& [k, n] : kKindNames) {
    if (name == n) return k;
  }
  throw Error("unknown-method", "no classification method named '" + name + "'");
}

nlohmann::json Hyperparameters::to_json() const {
  return {{"knn_k", knn_k},           {"dt_depth", dt_depth},
          {"lr_epochs", lr_epochs},   {"lr_rate", lr_rate},
          {"svm_epochs", svm_epochs}, {"svm_rate", svm_rate},
          {"svm_reg", svm_reg},       {"rf_trees", rf_trees},
          {"rf_depth", rf_depth},     {"mlp_hidden", mlp_hidden},
          {"mlp_epochs", mlp_epochs}, {"mlp_rate", mlp_rate},
          {"cnn_filters", cnn_filters}, {"cnn_width", cnn_width},
          {"cnn_epochs", cnn_epochs}, {"cnn_rate", cnn_rate},
          {"rnn_hidden", rnn_hidden}, {"rnn_epochs", rnn_epochs},
          {"rnn_rate", rnn_rate},     {"lstm_hidden", lstm_hidden},
          {"lstm_epochs", lstm_epochs}, {"lstm_rate", lstm_rate}};
}

Hyperparameters Hyperparameters::from_json(const nlohmann::json& j) {
  Hyperparameters hp;
  hp.knn_k = j.value("knn_k", hp.knn_k);
  hp.dt_depth = j.value("dt_depth", hp.dt_depth);
  hp.lr_epochs = j.value("lr_epochs", hp.lr_epochs);
  hp.lr_rate = j.value("lr_rate", hp.lr_rate);
  hp.svm_epochs = j.value("svm_epochs", hp.svm_epochs);
  hp.svm_rate = j.value("svm_rate", hp.svm_rate);
  hp.svm_reg = j.value("svm_reg", hp.svm_reg);
  hp.rf_trees = j.value("rf_trees", hp.rf_trees);
  hp.rf_depth = j.value("rf_depth", hp.rf_depth);
  hp.mlp_hidden = j.value("mlp_hidden", hp.mlp_hidden);
  hp.mlp_epochs = j.value("mlp_epochs", hp.mlp_epochs);
  hp.mlp_rate = j.value("mlp_rate", hp.mlp_rate);
  hp.cnn_filters = j.value("cnn_filters", hp.cnn_filters);
  hp.cnn_width = j.value("cnn_width", hp.cnn_width);
  hp.cnn_epochs = j.value("cnn_epochs", hp.cnn_epochs);
  hp.cnn_rate = j.value("cnn_rate", hp.cnn_rate);
  hp.rnn_hidden = j.value("rnn_hidden", hp.rnn_hidden);
  hp.rnn_epochs = j.value("rnn_epochs", hp.rnn_epochs);
  hp.rnn_rate = j.value("rnn_rate", hp.rnn_rate);
  hp.lstm_hidden = j.value("lstm_hidden", hp.lstm_hidden);
  hp.lstm_epochs = j.value("lstm_epochs", hp.lstm_epochs);
  hp.lstm_rate = j.value("lstm_rate", hp.lstm_rate);
  return hp;
}

std::vector<MethodSpec> method_registry(const Hyperparameters& hp) {
  std::vector<MethodSpec> specs;
  specs.reserve(10);
  for (const auto& [kind, name] : kKindNames) {
    (void)name;
    specs.push_back(MethodSpec{static_cast<int>(kind), kind, hp});
  }
  std::sort(specs.begin(), specs.end(),
            [](const MethodSpec& a, const MethodSpec& b) { return a.id < b.id; });
  return specs;
}

int argmax_class(const std::vector<double>& scores, int normal_class) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(scores.size()); ++c) {
    if (scores[c] > scores[best]) {
      best = c;
    } else if (scores[c] == scores[best]) {
      bool c_attack = c != normal_class;
      bool best_attack = best != normal_class;
      if (c_attack && !best_attack) best = c;  // attack wins ties against normal
    }
  }
  return best;
}

std::unique_ptr<Classifier> train_classifier(const MethodSpec& spec, const TrainData& data,
                                             std::uint64_t seed) {
  using namespace internal;
  if (data.x.empty() || data.x.size() != data.y.size()) {
    throw Error("bad-train-data", "feature rows and labels must be nonempty and aligned");
  }
  const Hyperparameters& hp = spec.hp;
  switch (spec.kind) {
    case Kind::kNB:
      return NaiveBayes::fit(data);
    case Kind::kKNN:
      return KNearest::fit(data, hp.knn_k);
    case Kind::kCNN:
      return Conv1d::fit(data, hp.cnn_filters, hp.cnn_width, hp.cnn_epochs, hp.cnn_rate, seed);
    case Kind::kDT:
      return DecisionTree::fit(data, hp.dt_depth);
    case Kind::kRNN:
      return Rnn::fit(data, hp.rnn_hidden, hp.rnn_epochs, hp.rnn_rate, seed);
    case Kind::kLR:
      return LinearModel::fit(data, LinearModel::Loss::kLogistic, hp.lr_epochs, hp.lr_rate, 0.0,
                              seed);
    case Kind::kLSTM:
      return Lstm::fit(data, hp.lstm_hidden, hp.lstm_epochs, hp.lstm_rate, seed);
    case Kind::kSVM:
      return LinearModel::fit(data, LinearModel::Loss::kHinge, hp.svm_epochs, hp.svm_rate,
                              hp.svm_reg, seed);
    case Kind::kMLP:
      return Mlp::fit(data, hp.mlp_hidden, hp.mlp_epochs, hp.mlp_rate, seed);
    case Kind::kRF:
      return RandomForest::fit(data, hp.rf_trees, hp.rf_depth, seed);
  }
  throw Error("unknown-method", "unhandled method kind");
}

std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j) {
  using namespace internal;
  Kind kind = kind_from_name(j.at("kind").get<std::string>());
  switch (kind) {
    case Kind::kNB:
      return NaiveBayes::from_json(j);
    case Kind::kKNN:
      return KNearest::from_json(j);
    case Kind::kCNN:
      return Conv1d::from_json(j);
    case Kind::kDT:
      return DecisionTree::from_json(j);
    case Kind::kRNN:
      return Rnn::from_json(j);
    case Kind::kLR:
    case Kind::kSVM:
      return LinearModel::from_json(j);
    case Kind::kLSTM:
      return Lstm::from_json(j);
    case Kind::kMLP:
      return Mlp::from_json(j);
    case Kind::kRF:
      return RandomForest::from_json(j);
  }
  throw Error("unknown-method", "unhandled method kind");
}

}  // namespace twinpot::ml

namespace twinpot::ml::internal {

void Standardizer::fit(const std::vector<std::vector<double>>& x) {
  const std::size_t n = x.size();
  const std::size_t f = n ? x[0].size() : 0;
  mean.assign(f, 0.0);
  sd.assign(f, 1.0);
  if (n == 0) return;
  for (const auto& row : x) {
    for (std::size_t i = 0; i < f; ++i) mean[i] += row[i];
  }
  for (std::size_t i = 0; i < f; ++i) mean[i] /= static_cast<double>(n);
  std::vector<double> var(f, 0.0);
  for (const auto& row : x) {
    for (std::size_t i = 0; i < f; ++i) {
      double d = row[i] - mean[i];
      var[i] += d * d;
    }
  }
  for (std::size_t i = 0; i < f; ++i) {
    double s = std::sqrt(var[i] / static_cast<double>(n));
    sd[i] = s < 1e-12 ? 1.0 : s;
  }
}

void Standardizer::transform(const std::vector<double>& in, std::vector<double>& out) const {
  out.resize(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = (in[i] - mean[i]) / sd[i];
  }
}

std::vector<std::vector<double>> Standardizer::transform_all(
    const std::vector<std::vector<double>>& x) const {
  std::vector<std::vector<double>> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) transform(x[i], out[i]);
  return out;
}

nlohmann::json Standardizer::to_json() const {
  return {{"mean", vec_json(mean)}, {"sd", vec_json(sd)}};
}

Standardizer Standardizer::from_json(const nlohmann::json& j) {
  Standardizer s;
  s.mean = vec_from_json(j.at("mean"));
  s.sd = vec_from_json(j.at("sd"));
  return s;
}

nlohmann::json vec_json(const std::vector<double>& v) {
  return nlohmann::json(v);
}

std::vector<double> vec_from_json(const nlohmann::json& j) {
  return j.get<std::vector<double>>();
}

}  // namespace twinpot::ml::internal
