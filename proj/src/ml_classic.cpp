#include <algorithm>
#include <cmath>
#include <numeric>

#include "ml_internal.hpp"
#include "twinpot/errors.hpp"

namespace twinpot::ml::internal {

namespace {

constexpr double kVarFloor = 1e-9;
constexpr double kLogTwoPi = 1.8378770664093453;

double gaussian_loglik(const std::vector<double>& x, const std::vector<double>& mean,
                       const std::vector<double>& var) {
  double ll = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - mean[i];
    ll += -0.5 * (kLogTwoPi + std::log(var[i]) + d * d / var[i]);
  }
  return ll;
}

void fit_gaussian(const std::vector<std::vector<double>>& x, const std::vector<char>& pick,
                  std::vector<double>& mean, std::vector<double>& var) {
  const std::size_t f = x.empty() ? 0 : x[0].size();
  mean.assign(f, 0.0);
  var.assign(f, kVarFloor);
  std::size_t n = 0;
  for (std::size_t r = 0; r < x.size(); ++r) {
    if (!pick[r]) continue;
    ++n;
    for (std::size_t i = 0; i < f; ++i) mean[i] += x[r][i];
  }
  if (n == 0) return;
  for (std::size_t i = 0; i < f; ++i) mean[i] /= static_cast<double>(n);
  std::vector<double> acc(f, 0.0);
  for (std::size_t r = 0; r < x.size(); ++r) {
    if (!pick[r]) continue;
    for (std::size_t i = 0; i < f; ++i) {
      double d = x[r][i] - mean[i];
      acc[i] += d * d;
    }
  }
  for (std::size_t i = 0; i < f; ++i) {
    var[i] = acc[i] / static_cast<double>(n) + kVarFloor;
  }
}

}  // namespace

// ---- NaiveBayes ------------------------------------------------------------

std::unique_ptr<NaiveBayes> NaiveBayes::fit(const TrainData& data) {
  auto model = std::make_unique<NaiveBayes>();
  const std::size_t n = data.x.size();
  const std::size_t f = data.x[0].size();
  std::vector<char> pick(n);
  for (std::size_t c = 0; c < data.n_classes; ++c) {
    std::size_t n_pos = 0;
    for (std::size_t r = 0; r < n; ++r) {
      pick[r] = data.y[r] == static_cast<int>(c);
      if (pick[r]) ++n_pos;
    }
    ClassModel cm;
    fit_gaussian(data.x, pick, cm.pos_mean, cm.pos_var);
    for (auto& p : pick) p = !p;
    fit_gaussian(data.x, pick, cm.neg_mean, cm.neg_var);
    double p_pos = (static_cast<double>(n_pos) + 1.0) / (static_cast<double>(n) + 2.0);
    cm.log_prior_pos = std::log(p_pos);
    cm.log_prior_neg = std::log(1.0 - p_pos);
    model->models_.push_back(std::move(cm));
    model->train_ops_ += n * f * 4;
  }
  return model;
}

void NaiveBayes::class_scores(const std::vector<double>& x, std::vector<double>& out) const {
  out.resize(models_.size());
  for (std::size_t c = 0; c < models_.size(); ++c) {
    const ClassModel& m = models_[c];
    out[c] = gaussian_loglik(x, m.pos_mean, m.pos_var) + m.log_prior_pos -
             gaussian_loglik(x, m.neg_mean, m.neg_var) - m.log_prior_neg;
  }
}

std::uint64_t NaiveBayes::predict_ops_per_sample() const {
  std::size_t f = models_.empty() ? 0 : models_[0].pos_mean.size();
  return models_.size() * f * 8;
}

nlohmann::json NaiveBayes::to_json() const {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& m : models_) {
    classes.push_back({{"pos_mean", vec_json(m.pos_mean)},
                       {"pos_var", vec_json(m.pos_var)},
                       {"neg_mean", vec_json(m.neg_mean)},
                       {"neg_var", vec_json(m.neg_var)},
                       {"log_prior_pos", m.log_prior_pos},
                       {"log_prior_neg", m.log_prior_neg}});
  }
  return {{"kind", "nb"}, {"classes", classes}, {"train_ops", train_ops_}};
}

std::unique_ptr<NaiveBayes> NaiveBayes::from_json(const nlohmann::json& j) {
  auto model = std::make_unique<NaiveBayes>();
  for (const auto& jc : j.at("classes")) {
    ClassModel m;
    m.pos_mean = vec_from_json(jc.at("pos_mean"));
    m.pos_var = vec_from_json(jc.at("pos_var"));
    m.neg_mean = vec_from_json(jc.at("neg_mean"));
    m.neg_var = vec_from_json(jc.at("neg_var"));
    m.log_prior_pos = jc.at("log_prior_pos").get<double>();
    m.log_prior_neg = jc.at("log_prior_neg").get<double>();
    model->models_.push_back(std::move(m));
  }
  model->train_ops_ = j.value("train_ops", 0ull);
  return model;
}

// ---- KNearest --------------------------------------------------------------

std::unique_ptr<KNearest> KNearest::fit(const TrainData& data, int k) {
  auto model = std::make_unique<KNearest>();
  model->x_ = data.x;
  model->y_ = data.y;
  model->n_classes_ = data.n_classes;
  model->k_ = std::max(1, k);
  model->train_ops_ = data.x.size() * data.x[0].size();
  return model;
}

void KNearest::class_scores(const std::vector<double>& x, std::vector<double>& out) const {
  const std::size_t n = x_.size();
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_), n);
  // (distance², index) pairs; stable ordering makes neighbor ties deterministic.
  std::vector<std::pair<double, std::size_t>> d(n);
  for (std::size_t r = 0; r < n; ++r) {
    double acc = 0.0;
    const std::vector<double>& row = x_[r];
    for (std::size_t i = 0; i < row.size(); ++i) {
      double diff = row[i] - x[i];
      acc += diff * diff;
    }
    d[r] = {acc, r};
  }
  std::partial_sort(d.begin(), d.begin() + static_cast<long>(k), d.end());
  out.assign(n_classes_, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    out[static_cast<std::size_t>(y_[d[i].second])] += 1.0 / static_cast<double>(k);
  }
}

std::uint64_t KNearest::predict_ops_per_sample() const {
  std::size_t f = x_.empty() ? 0 : x_[0].size();
  return x_.size() * (f * 3 + 10);
}

nlohmann::json KNearest::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : x_) rows.push_back(vec_json(r));
  return {{"kind", "knn"}, {"k", k_},     {"n_classes", n_classes_},
          {"x", rows},     {"y", y_},     {"train_ops", train_ops_}};
}

std::unique_ptr<KNearest> KNearest::from_json(const nlohmann::json& j) {
  auto model = std::make_unique<KNearest>();
  model->k_ = j.at("k").get<int>();
  model->n_classes_ = j.at("n_classes").get<std::size_t>();
  for (const auto& row : j.at("x")) model->x_.push_back(vec_from_json(row));
  model->y_ = j.at("y").get<std::vector<int>>();
  model->train_ops_ = j.value("train_ops", 0ull);
  return model;
}

// ---- CART trees ------------------------------------------------------------

double Tree::predict(const std::vector<double>& x) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].leaf_value;
}

nlohmann::json Tree::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& n : nodes) {
    arr.push_back({n.feature, n.threshold, n.leaf_value, n.left, n.right});
  }
  return arr;
}

Tree Tree::from_json(const nlohmann::json& j) {
  Tree t;
  for (const auto& jn : j) {
    TreeNode n;
    n.feature = jn.at(0).get<int>();
    n.threshold = jn.at(1).get<double>();
    n.leaf_value = jn.at(2).get<double>();
    n.left = jn.at(3).get<int>();
    n.right = jn.at(4).get<int>();
    t.nodes.push_back(n);
  }
  return t;
}

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

double gini_impurity(double pos, double total) {
  if (total <= 0.0) return 0.0;
  double p = pos / total;
  return 2.0 * p * (1.0 - p);
}

int grow(const std::vector<std::vector<double>>& x, const std::vector<char>& positive,
         std::vector<int>& indices, int lo, int hi, int depth, int mtry, Rng* rng,
         std::vector<TreeNode>& nodes, std::uint64_t& ops) {
  const int count = hi - lo;
  double n_pos = 0.0;
  for (int i = lo; i < hi; ++i) n_pos += positive[static_cast<std::size_t>(indices[i])] ? 1.0 : 0.0;

  const int node_index = static_cast<int>(nodes.size());
  nodes.emplace_back();
  nodes.back().leaf_value = count > 0 ? n_pos / count : 0.0;

  if (depth <= 0 || count < 2 || n_pos == 0.0 || n_pos == count) {
    return node_index;  // pure or exhausted: stay a leaf
  }

  const std::size_t f = x[0].size();
  std::vector<int> features(f);
  std::iota(features.begin(), features.end(), 0);
  if (mtry > 0 && static_cast<std::size_t>(mtry) < f) {
    rng->shuffle(features);
    features.resize(static_cast<std::size_t>(mtry));
    std::sort(features.begin(), features.end());
  }

  const double parent_impurity = gini_impurity(n_pos, count);
  SplitChoice best;
  std::vector<std::pair<double, char>> column(static_cast<std::size_t>(count));
  for (int feat : features) {
    for (int i = 0; i < count; ++i) {
      int row = indices[lo + i];
      column[static_cast<std::size_t>(i)] = {x[static_cast<std::size_t>(row)][static_cast<std::size_t>(feat)],
                                             positive[static_cast<std::size_t>(row)]};
    }
    std::sort(column.begin(), column.end());
    ops += static_cast<std::uint64_t>(count) * 8;

    double left_pos = 0.0;
    for (int i = 1; i < count; ++i) {
      left_pos += column[static_cast<std::size_t>(i - 1)].second ? 1.0 : 0.0;
      if (column[static_cast<std::size_t>(i - 1)].first ==
          column[static_cast<std::size_t>(i)].first) {
        continue;  // cannot split between equal values
      }
      double left_n = i;
      double right_n = count - i;
      double right_pos = n_pos - left_pos;
      double weighted = (left_n * gini_impurity(left_pos, left_n) +
                         right_n * gini_impurity(right_pos, right_n)) /
                        count;
      double gain = parent_impurity - weighted;
      if (gain > best.gain + 1e-15) {
        best.feature = feat;
        best.threshold = 0.5 * (column[static_cast<std::size_t>(i - 1)].first +
                                column[static_cast<std::size_t>(i)].first);
        best.gain = gain;
      }
    }
  }

  if (best.feature < 0) return node_index;

  auto mid = std::stable_partition(indices.begin() + lo, indices.begin() + hi, [&](int row) {
    return x[static_cast<std::size_t>(row)][static_cast<std::size_t>(best.feature)] <=
           best.threshold;
  });
  int split = static_cast<int>(mid - indices.begin());
  if (split == lo || split == hi) return node_index;  // degenerate partition

  nodes[static_cast<std::size_t>(node_index)].feature = best.feature;
  nodes[static_cast<std::size_t>(node_index)].threshold = best.threshold;
  int left = grow(x, positive, indices, lo, split, depth - 1, mtry, rng, nodes, ops);
  int right = grow(x, positive, indices, split, hi, depth - 1, mtry, rng, nodes, ops);
  nodes[static_cast<std::size_t>(node_index)].left = left;
  nodes[static_cast<std::size_t>(node_index)].right = right;
  return node_index;
}

}  // namespace

Tree build_tree(const std::vector<std::vector<double>>& x, const std::vector<char>& positive,
                std::vector<int> indices, int max_depth, int mtry, Rng* rng,
                std::uint64_t& ops) {
  Tree t;
  grow(x, positive, indices, 0, static_cast<int>(indices.size()), max_depth, mtry, rng, t.nodes,
       ops);
  return t;
}

// ---- DecisionTree ----------------------------------------------------------

std::unique_ptr<DecisionTree> DecisionTree::fit(const TrainData& data, int max_depth) {
  auto model = std::make_unique<DecisionTree>();
  model->max_depth_ = max_depth;
  const std::size_t n = data.x.size();
  std::vector<char> positive(n);
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t c = 0; c < data.n_classes; ++c) {
    for (std::size_t r = 0; r < n; ++r) positive[r] = data.y[r] == static_cast<int>(c);
    model->trees_.push_back(build_tree(data.x, positive, all, max_depth, 0, nullptr,
                                       model->train_ops_));
  }
  return model;
}

void DecisionTree::class_scores(const std::vector<double>& x, std::vector<double>& out) const {
  out.resize(trees_.size());
  for (std::size_t c = 0; c < trees_.size(); ++c) out[c] = trees_[c].predict(x);
}

std::uint64_t DecisionTree::predict_ops_per_sample() const {
  return trees_.size() * static_cast<std::uint64_t>(max_depth_) * 4;
}

nlohmann::json DecisionTree::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(t.to_json());
  return {{"kind", "dt"}, {"max_depth", max_depth_}, {"trees", trees}, {"train_ops", train_ops_}};
}

std::unique_ptr<DecisionTree> DecisionTree::from_json(const nlohmann::json& j) {
  auto model = std::make_unique<DecisionTree>();
  model->max_depth_ = j.at("max_depth").get<int>();
  for (const auto& jt : j.at("trees")) model->trees_.push_back(Tree::from_json(jt));
  model->train_ops_ = j.value("train_ops", 0ull);
  return model;
}

// ---- RandomForest ----------------------------------------------------------

std::unique_ptr<RandomForest> RandomForest::fit(const TrainData& data, int n_trees, int max_depth,
                                                std::uint64_t seed) {
  auto model = std::make_unique<RandomForest>();
  model->max_depth_ = max_depth;
  const std::size_t n = data.x.size();
  const std::size_t f = data.x[0].size();
  const int mtry = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(f))));
  std::vector<char> positive(n);
  for (std::size_t c = 0; c < data.n_classes; ++c) {
    for (std::size_t r = 0; r < n; ++r) positive[r] = data.y[r] == static_cast<int>(c);
    std::vector<Tree> forest;
    for (int t = 0; t < n_trees; ++t) {
      Rng rng(derive_seed(seed, "rf", c * 1000 + static_cast<std::size_t>(t)));
      std::vector<int> boot(n);
      for (std::size_t i = 0; i < n; ++i) boot[i] = static_cast<int>(rng.below(n));
      forest.push_back(build_tree(data.x, positive, std::move(boot), max_depth, mtry, &rng,
                                  model->train_ops_));
    }
    model->forests_.push_back(std::move(forest));
  }
  return model;
}

void RandomForest::class_scores(const std::vector<double>& x, std::vector<double>& out) const {
  out.resize(forests_.size());
  for (std::size_t c = 0; c < forests_.size(); ++c) {
    double acc = 0.0;
    for (const auto& t : forests_[c]) acc += t.predict(x);
    out[c] = forests_[c].empty() ? 0.0 : acc / static_cast<double>(forests_[c].size());
  }
}

std::uint64_t RandomForest::predict_ops_per_sample() const {
  std::size_t trees = forests_.empty() ? 0 : forests_[0].size();
  return forests_.size() * trees * static_cast<std::uint64_t>(max_depth_) * 4;
}

nlohmann::json RandomForest::to_json() const {
  nlohmann::json forests = nlohmann::json::array();
  for (const auto& forest : forests_) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : forest) trees.push_back(t.to_json());
    forests.push_back(std::move(trees));
  }
  return {{"kind", "rf"},
          {"max_depth", max_depth_},
          {"forests", forests},
          {"train_ops", train_ops_}};
}

std::unique_ptr<RandomForest> RandomForest::from_json(const nlohmann::json& j) {
  auto model = std::make_unique<RandomForest>();
  model->max_depth_ = j.at("max_depth").get<int>();
  for (const auto& jf : j.at("forests")) {
    std::vector<Tree> forest;
    for (const auto& jt : jf) forest.push_back(Tree::from_json(jt));
    model->forests_.push_back(std::move(forest));
  }
  model->train_ops_ = j.value("train_ops", 0ull);
  return model;
}

// ---- LinearModel (logistic regression / linear SVM) ------------------------

std::unique_ptr<LinearModel> LinearModel::fit(const TrainData& data, Loss loss, int epochs,
                                              double rate, double reg, std::uint64_t seed) {
  (void)seed;  // full-batch updates need no stochastic state
  auto model = std::make_unique<LinearModel>();
  model->loss_ = loss;
  model->scaler_.fit(data.x);
  const std::vector<std::vector<double>> z = model->scaler_.transform_all(data.x);
  const std::size_t n = z.size();
  const std::size_t f = z[0].size();

  for (std::size_t c = 0; c < data.n_classes; ++c) {
    std::vector<double> w(f, 0.0);
    double b = 0.0;
    std::vector<double> grad(f);
    for (int e = 0; e < epochs; ++e) {
      std::fill(grad.begin(), grad.end(), 0.0);
      double gb = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        double margin = b;
        for (std::size_t i = 0; i < f; ++i) margin += w[i] * z[r][i];
        if (loss == Loss::kLogistic) {
          double y = data.y[r] == static_cast<int>(c) ? 1.0 : 0.0;
          double err = sigmoid(margin) - y;
          for (std::size_t i = 0; i < f; ++i) grad[i] += err * z[r][i];
          gb += err;
        } else {
          double y = data.y[r] == static_cast<int>(c) ? 1.0 : -1.0;
          if (y * margin < 1.0) {
            for (std::size_t i = 0; i < f; ++i) grad[i] -= y * z[r][i];
            gb -= y;
          }
        }
      }
      double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < f; ++i) {
        w[i] -= rate * (grad[i] * inv_n + reg * w[i]);
      }
      b -= rate * gb * inv_n;
    }
    model->w_.push_back(std::move(w));
    model->b_.push_back(b);
    model->train_ops_ += static_cast<std::uint64_t>(epochs) * n * f * 4;
  }
  return model;
}

void LinearModel::class_scores(const std::vector<double>& x, std::vector<double>& out) const {
  std::vector<double> z;
  scaler_.transform(x, z);
  out.resize(w_.size());
  for (std::size_t c = 0; c < w_.size(); ++c) {
    double margin = b_[c];
    for (std::size_t i = 0; i < z.size(); ++i) margin += w_[c][i] * z[i];
    out[c] = margin;
  }
}

std::uint64_t LinearModel::predict_ops_per_sample() const {
  std::size_t f = w_.empty() ? 0 : w_[0].size();
  return w_.size() * f * 2 + f * 3;
}

nlohmann::json LinearModel::to_json() const {
  nlohmann::json weights = nlohmann::json::array();
  for (const auto& w : w_) weights.push_back(vec_json(w));
  return {{"kind", loss_ == Loss::kLogistic ? "lr" : "svm"},
          {"scaler", scaler_.to_json()},
          {"w", weights},
          {"b", vec_json(b_)},
          {"train_ops", train_ops_}};
}

std::unique_ptr<LinearModel> LinearModel::from_json(const nlohmann::json& j) {
  auto model = std::make_unique<LinearModel>();
  model->loss_ = j.at("kind").get<std::string>() == "lr" ? Loss::kLogistic : Loss::kHinge;
  model->scaler_ = Standardizer::from_json(j.at("scaler"));
  for (const auto& jw : j.at("w")) model->w_.push_back(vec_from_json(jw));
  model->b_ = vec_from_json(j.at("b"));
  model->train_ops_ = j.value("train_ops", 0ull);
  return model;
}

}  // namespace twinpot::ml::internal
