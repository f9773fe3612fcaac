#include "twinpot/autocm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <map>
#include <set>

#include "twinpot/errors.hpp"
#include "twinpot/hash.hpp"
#include "twinpot/rng.hpp"

namespace twinpot::autocm {

namespace {

using seaport::FlowRecord;
using seaport::kNormalLabel;

double monotonic_seconds() {
  static const auto anchor = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - anchor).count();
}

// Distinct labels, normal first (when present), attack types lexicographic.
std::vector<std::string> class_dictionary(const std::vector<FlowRecord>& data) {
  std::set<std::string> labels;
  for (const auto& r : data) {
    if (!r.label) throw Error("unlabeled-record", "training data must be fully labeled");
    labels.insert(*r.label);
  }
  std::vector<std::string> classes;
  if (labels.count(kNormalLabel)) classes.push_back(kNormalLabel);
  for (const auto& l : labels) {
    if (l != kNormalLabel) classes.push_back(l);
  }
  return classes;
}

}  // namespace

std::string timing_mode_name(TimingMode m) {
  return m == TimingMode::kVirtual ? "virtual" : "real";
}

TimingMode timing_mode_from_name(const std::string& name) {
  if (name == "virtual") return TimingMode::kVirtual;
  if (name == "real") return TimingMode::kReal;
  throw Error("unknown-timing-mode", "no timing mode named '" + name + "'");
}

std::string selection_mode_name(SelectionMode m) {
  return m == SelectionMode::kNormalized ? "normalized" : "strict-eq1";
}

SelectionMode selection_mode_from_name(const std::string& name) {
  if (name == "normalized") return SelectionMode::kNormalized;
  if (name == "strict-eq1") return SelectionMode::kStrictEq1;
  throw Error("unknown-selection-mode", "no selection mode named '" + name + "'");
}

double lambda_score(const MethodMetrics& m) {
  const double recall_den = static_cast<double>(m.tp + m.fn);
  const double precision_den = static_cast<double>(m.tp + m.fp);
  if (recall_den == 0.0 && precision_den == 0.0) {
    throw Error("undefined-lambda", "no positives observed or predicted");
  }
  double recall = recall_den > 0.0 ? static_cast<double>(m.tp) / recall_den : 0.0;
  double precision = precision_den > 0.0 ? static_cast<double>(m.tp) / precision_den : 0.0;
  return 0.6 * recall + 0.4 * precision;
}

double determination_time(const MethodMetrics& m) {
  if (m.t_end < m.t_start) {
    throw Error("clock-skew", "method finished before it started");
  }
  return m.t_end - m.t_start;
}

SelectionResult select_final(const std::vector<MethodMetrics>& metrics,
                             const SelectionWeights& weights, SelectionMode mode) {
  if (metrics.size() != 10) {
    throw Error("method-ids", "expected exactly 10 method metrics, got " +
                                  std::to_string(metrics.size()));
  }
  std::vector<const MethodMetrics*> by_id(10, nullptr);
  for (const auto& m : metrics) {
    if (m.id < 1 || m.id > 10) {
      throw Error("method-ids", "method id " + std::to_string(m.id) + " out of range");
    }
    if (by_id[static_cast<std::size_t>(m.id - 1)]) {
      throw Error("method-ids", "duplicate method id " + std::to_string(m.id));
    }
    by_id[static_cast<std::size_t>(m.id - 1)] = &m;
  }

  std::vector<double> nu(10), lambda(10);
  for (int i = 0; i < 10; ++i) {
    nu[static_cast<std::size_t>(i)] = determination_time(*by_id[static_cast<std::size_t>(i)]);
    lambda[static_cast<std::size_t>(i)] = lambda_score(*by_id[static_cast<std::size_t>(i)]);
  }

  SelectionResult result;
  result.nu_used.resize(10);
  if (mode == SelectionMode::kNormalized) {
    double nu_min = *std::min_element(nu.begin(), nu.end());
    for (int i = 0; i < 10; ++i) {
      double v = nu[static_cast<std::size_t>(i)];
      result.nu_used[static_cast<std::size_t>(i)] = v == 0.0 ? 1.0 : nu_min / v;
    }
  } else {
    result.nu_used = nu;
  }

  result.objectives.resize(10);
  int best = 0;
  for (int i = 0; i < 10; ++i) {
    result.objectives[static_cast<std::size_t>(i)] =
        weights.alpha[static_cast<std::size_t>(i)] * lambda[static_cast<std::size_t>(i)] +
        weights.beta[static_cast<std::size_t>(i)] * result.nu_used[static_cast<std::size_t>(i)];
    if (result.objectives[static_cast<std::size_t>(i)] >
        result.objectives[static_cast<std::size_t>(best)]) {
      best = i;  // ties keep the lowest id
    }
  }
  result.winner_id = best + 1;
  return result;
}

int TrainedModel::predict_class(const std::vector<double>& features) const {
  std::vector<double> scores;
  impl->class_scores(features, scores);
  return ml::argmax_class(scores, normal_class);
}

Verdict TrainedModel::classify(const std::vector<double>& features) const {
  int c = predict_class(features);
  Verdict v;
  v.attack = c != normal_class;
  if (v.attack) v.type = classes[static_cast<std::size_t>(c)];
  return v;
}

nlohmann::json TrainedModel::serialize() const {
  return {{"id", spec.id},
          {"kind", ml::kind_name(spec.kind)},
          {"hyperparameters", spec.hp.to_json()},
          {"classes", classes},
          {"normal_class", normal_class},
          {"model", impl->to_json()}};
}

TrainedModel TrainedModel::deserialize(const nlohmann::json& j) {
  TrainedModel m;
  m.spec.id = j.at("id").get<int>();
  m.spec.kind = ml::kind_from_name(j.at("kind").get<std::string>());
  m.spec.hp = ml::Hyperparameters::from_json(j.at("hyperparameters"));
  m.classes = j.at("classes").get<std::vector<std::string>>();
  m.normal_class = j.at("normal_class").get<int>();
  m.impl = ml::classifier_from_json(j.at("model"));
  return m;
}

Verdict window_verdict(const std::vector<seaport::FlowRecord>& records,
                       const TrainedModel& model) {
  if (records.empty()) throw Error("empty-window", "cannot classify an empty window");
  std::vector<std::size_t> counts(model.classes.size(), 0);
  for (const auto& r : records) {
    counts[static_cast<std::size_t>(model.predict_class(r.features))] += 1;
  }
  int best = 0;
  for (int c = 1; c < static_cast<int>(counts.size()); ++c) {
    if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(best)]) {
      best = c;
    } else if (counts[static_cast<std::size_t>(c)] == counts[static_cast<std::size_t>(best)] &&
               best == model.normal_class && c != model.normal_class) {
      best = c;
    }
  }
  Verdict v;
  v.attack = best != model.normal_class;
  if (v.attack) v.type = model.classes[static_cast<std::size_t>(best)];
  return v;
}

namespace {

class ConstantNormal final : public ml::Classifier {
 public:
  ml::Kind kind() const override { return ml::Kind::kNB; }
  std::size_t class_count() const override { return 1; }
  void class_scores(const std::vector<double>&, std::vector<double>& out) const override {
    out.assign(1, 1.0);
  }
  std::uint64_t train_ops() const override { return 0; }
  std::uint64_t predict_ops_per_sample() const override { return 1; }
  nlohmann::json to_json() const override { return {{"kind", "always-normal"}}; }
};

}  // namespace

TrainedModel always_normal_model() {
  TrainedModel m;
  m.spec = ml::MethodSpec{1, ml::Kind::kNB, {}};
  m.classes = {kNormalLabel};
  m.normal_class = 0;
  m.impl = std::make_shared<ConstantNormal>();
  return m;
}

// ---- label_data ------------------------------------------------------------

std::vector<FlowRecord> label_data(const std::vector<FlowRecord>& unlabeled,
                                   const std::vector<FlowRecord>& baseline,
                                   const LabelConfig& config, std::uint64_t seed) {
  if (unlabeled.size() != config.unlabeled_count) {
    throw Error("size-mismatch", "expected " + std::to_string(config.unlabeled_count) +
                                     " unlabeled records, got " + std::to_string(unlabeled.size()));
  }
  if (baseline.size() < config.baseline_draw) {
    throw Error("insufficient-baseline",
                "baseline smaller than the configured draw of " +
                    std::to_string(config.baseline_draw));
  }
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < baseline.size(); ++i) {
    if (!baseline[i].label) {
      throw Error("unlabeled-record", "baseline records must be labeled");
    }
    by_label[*baseline[i].label].push_back(i);
  }
  if (by_label.size() < 2) {
    throw Error("single-class", "baseline must contain at least two classes");
  }

  const std::size_t f = baseline[0].features.size();

  // z-normalization statistics from the baseline only.
  std::vector<double> mean(f, 0.0), sd(f, 1.0);
  for (const auto& r : baseline) {
    for (std::size_t i = 0; i < f; ++i) mean[i] += r.features[i];
  }
  for (std::size_t i = 0; i < f; ++i) mean[i] /= static_cast<double>(baseline.size());
  std::vector<double> var(f, 0.0);
  for (const auto& r : baseline) {
    for (std::size_t i = 0; i < f; ++i) {
      double d = r.features[i] - mean[i];
      var[i] += d * d;
    }
  }
  for (std::size_t i = 0; i < f; ++i) {
    double s = std::sqrt(var[i] / static_cast<double>(baseline.size()));
    sd[i] = s < 1e-12 ? 1.0 : s;
  }
  auto znorm = [&](const std::vector<double>& in, std::vector<double>& out) {
    out.resize(f);
    for (std::size_t i = 0; i < f; ++i) out[i] = (in[i] - mean[i]) / sd[i];
  };

  std::vector<std::vector<double>> zbase(baseline.size());
  for (std::size_t i = 0; i < baseline.size(); ++i) znorm(baseline[i].features, zbase[i]);

  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, config.k)),
                                              baseline.size());
  std::vector<FlowRecord> out;
  out.reserve(config.unlabeled_count + config.baseline_draw);

  std::vector<double> zq;
  std::vector<std::pair<double, std::size_t>> dist(baseline.size());
  for (const auto& record : unlabeled) {
    znorm(record.features, zq);
    for (std::size_t i = 0; i < baseline.size(); ++i) {
      double acc = 0.0;
      for (std::size_t d = 0; d < f; ++d) {
        double diff = zbase[i][d] - zq[d];
        acc += diff * diff;
      }
      dist[i] = {acc, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k), dist.end());

    std::map<std::string, std::size_t> votes;
    std::size_t attack_votes = 0, normal_votes = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const std::string& l = *baseline[dist[i].second].label;
      votes[l] += 1;
      if (seaport::is_attack_label(l)) {
        ++attack_votes;
      } else {
        ++normal_votes;
      }
    }

    FlowRecord labeled = record;
    if (attack_votes >= normal_votes && attack_votes > 0) {
      // Plurality attack type; std::map iteration gives the lexicographically
      // smallest name on ties.
      std::string best_type;
      std::size_t best_count = 0;
      for (const auto& [l, count] : votes) {
        if (seaport::is_attack_label(l) && count > best_count) {
          best_type = l;
          best_count = count;
        }
      }
      labeled.label = best_type;
    } else {
      labeled.label = kNormalLabel;
    }
    out.push_back(std::move(labeled));
  }

  // Proportional stratified draw from the baseline (largest remainder).
  std::vector<std::pair<std::string, std::size_t>> quota;  // label -> draw count
  {
    std::vector<std::pair<double, std::string>> remainders;
    std::size_t assigned = 0;
    for (const auto& [label, idx] : by_label) {
      double exact = static_cast<double>(config.baseline_draw) *
                     static_cast<double>(idx.size()) / static_cast<double>(baseline.size());
      std::size_t base = static_cast<std::size_t>(exact);
      base = std::min(base, idx.size());
      quota.emplace_back(label, base);
      assigned += base;
      remainders.emplace_back(exact - static_cast<double>(base), label);
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::size_t i = 0;
    while (assigned < config.baseline_draw && !remainders.empty()) {
      const std::string& label = remainders[i % remainders.size()].second;
      for (auto& [l, q] : quota) {
        if (l == label && q < by_label[l].size()) {
          ++q;
          ++assigned;
          break;
        }
      }
      ++i;
      if (i > 4 * config.baseline_draw) break;  // all classes exhausted
    }
  }
  for (const auto& [label, q] : quota) {
    const auto& idx = by_label[label];
    Rng rng(derive_seed(seed, "baseline-draw/" + label));
    for (std::size_t pick : sample_without_replacement(idx.size(), q, rng)) {
      out.push_back(baseline[idx[pick]]);
    }
  }
  return out;
}

// ---- train_and_evaluate ----------------------------------------------------

namespace {

struct Split {
  std::vector<std::size_t> train, test;
};

Split stratified_split(const std::vector<int>& y, std::size_t n_classes, std::uint64_t seed) {
  Split s;
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == static_cast<int>(c)) idx.push_back(i);
    }
    Rng rng(derive_seed(seed, "split", c));
    rng.shuffle(idx);
    std::size_t n_train = static_cast<std::size_t>(0.7 * static_cast<double>(idx.size()) + 0.5);
    n_train = std::min(n_train, idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      (i < n_train ? s.train : s.test).push_back(idx[i]);
    }
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

bool split_degenerate(const Split& s, const std::vector<int>& y, std::size_t n_classes) {
  std::vector<char> seen(n_classes, 0);
  for (std::size_t i : s.train) seen[static_cast<std::size_t>(y[i])] = 1;
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (!seen[c]) return true;
  }
  return false;
}

}  // namespace

EvalResult train_and_evaluate(const ml::MethodSpec& spec,
                              const std::vector<seaport::FlowRecord>& data,
                              std::uint64_t split_seed, TimingMode timing) {
  if (data.empty()) throw Error("empty-dataset", "no training data");
  std::vector<std::string> classes = class_dictionary(data);
  if (classes.size() < 2) {
    throw Error("single-class", "training data must contain at least two classes");
  }
  std::map<std::string, int> class_index;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    class_index[classes[i]] = static_cast<int>(i);
  }
  const int normal_class = classes[0] == kNormalLabel ? 0 : -1;

  std::vector<int> y(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) y[i] = class_index[*data[i].label];

  Split split = stratified_split(y, classes.size(), split_seed);
  if (split_degenerate(split, y, classes.size())) {
    split = stratified_split(y, classes.size(), derive_seed(split_seed, "reshuffle"));
    if (split_degenerate(split, y, classes.size())) {
      throw Error("degenerate-split", "a class is absent from the training split");
    }
  }

  ml::TrainData train;
  train.n_classes = classes.size();
  train.x.reserve(split.train.size());
  train.y.reserve(split.train.size());
  for (std::size_t i : split.train) {
    train.x.push_back(data[i].features);
    train.y.push_back(y[i]);
  }

  double t_start = timing == TimingMode::kReal ? monotonic_seconds() : 0.0;
  std::unique_ptr<ml::Classifier> impl =
      ml::train_classifier(spec, train, derive_seed(split_seed, "init", static_cast<std::uint64_t>(spec.id)));

  EvalResult result;
  result.metrics.id = spec.id;
  result.metrics.kind = spec.kind;

  std::vector<double> scores;
  for (std::size_t i : split.test) {
    impl->class_scores(data[i].features, scores);
    int predicted = ml::argmax_class(scores, normal_class);
    bool truth_attack = y[i] != normal_class;
    bool predicted_attack = predicted != normal_class;
    if (truth_attack && predicted_attack) ++result.metrics.tp;
    if (!truth_attack && predicted_attack) ++result.metrics.fp;
    if (truth_attack && !predicted_attack) ++result.metrics.fn;
    if (!truth_attack && !predicted_attack) ++result.metrics.tn;
  }

  if (timing == TimingMode::kReal) {
    result.metrics.t_start = t_start;
    result.metrics.t_end = monotonic_seconds();
  } else {
    result.metrics.t_start = 0.0;
    result.metrics.t_end = 1e-9 * static_cast<double>(impl->train_ops() +
                                                      impl->predict_ops_per_sample() *
                                                          split.test.size());
  }

  result.model.spec = spec;
  result.model.classes = std::move(classes);
  result.model.normal_class = normal_class;
  result.model.impl = std::move(impl);
  return result;
}

// ---- run_autocm ------------------------------------------------------------

nlohmann::json AutocmReport::to_json() const {
  nlohmann::json jm = nlohmann::json::array();
  for (const auto& m : methods) {
    jm.push_back({{"id", m.metrics.id},
                  {"kind", ml::kind_name(m.metrics.kind)},
                  {"TP", m.metrics.tp},
                  {"FP", m.metrics.fp},
                  {"FN", m.metrics.fn},
                  {"TN", m.metrics.tn},
                  {"lambda", m.lambda},
                  {"nu_seconds", m.nu_seconds},
                  {"nu_normalized", m.nu_normalized},
                  {"objective", m.objective}});
  }
  return {{"methods", jm},
          {"winner", winner_id},
          {"weights",
           {{"alpha", std::vector<double>(weights.alpha.begin(), weights.alpha.end())},
            {"beta", std::vector<double>(weights.beta.begin(), weights.beta.end())}}},
          {"seed", seed},
          {"mode", selection_mode_name(mode)},
          {"note",
           "normalized mode scores speed as nu_normalized = min(nu)/nu so the fastest method "
           "earns the full beta bonus; strict-eq1 mode scores raw nu_seconds, which rewards "
           "slower methods and exists for fidelity testing only"}};
}

RunResult run_autocm(const std::vector<seaport::FlowRecord>& unlabeled,
                     const std::vector<seaport::FlowRecord>& baseline, const Options& options) {
  std::vector<seaport::FlowRecord> labeled =
      label_data(unlabeled, baseline, options.label_config, derive_seed(options.seed, "label"));

  const std::vector<ml::MethodSpec> registry = ml::method_registry(options.hp);
  const std::uint64_t split_seed = derive_seed(options.seed, "train");

  std::vector<EvalResult> evals(registry.size());
  if (options.parallel) {
    std::vector<std::future<EvalResult>> futures;
    futures.reserve(registry.size());
    for (const auto& spec : registry) {
      futures.push_back(std::async(std::launch::async, [&labeled, spec, split_seed, &options] {
        return train_and_evaluate(spec, labeled, split_seed, options.timing);
      }));
    }
    for (std::size_t i = 0; i < futures.size(); ++i) evals[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < registry.size(); ++i) {
      evals[i] = train_and_evaluate(registry[i], labeled, split_seed, options.timing);
    }
  }

  std::vector<MethodMetrics> metrics;
  metrics.reserve(evals.size());
  for (const auto& e : evals) metrics.push_back(e.metrics);
  SelectionResult selection = select_final(metrics, options.weights, options.mode);

  RunResult result;
  result.report.winner_id = selection.winner_id;
  result.report.weights = options.weights;
  result.report.seed = options.seed;
  result.report.mode = options.mode;
  for (std::size_t i = 0; i < evals.size(); ++i) {
    MethodReport mr;
    mr.metrics = evals[i].metrics;
    mr.lambda = lambda_score(mr.metrics);
    mr.nu_seconds = determination_time(mr.metrics);
    mr.nu_normalized = selection.nu_used[i];
    mr.objective = selection.objectives[i];
    result.report.methods.push_back(mr);
  }

  int chosen = selection.winner_id;
  if (options.pin_method) {
    chosen = static_cast<int>(*options.pin_method);
  }
  result.winner = std::move(evals[static_cast<std::size_t>(chosen - 1)].model);
  return result;
}

}  // namespace twinpot::autocm
