#include "twinpot/detection.hpp"

#include <algorithm>

#include "twinpot/errors.hpp"
#include "twinpot/hash.hpp"
#include "twinpot/rng.hpp"

namespace twinpot::detection {

using seaport::FlowRecord;

double reliability(const ReliabilityStats& stats) {
  const std::uint64_t positives = stats.tp + stats.fn;
  if (positives == 0) {
    throw Error("undefined-reliability", "no attack-labeled windows observed yet");
  }
  return 1.0 - static_cast<double>(stats.fn) / static_cast<double>(positives);
}

std::string mitigation_name(MitigationKind kind) {
  return kind == MitigationKind::kDrop ? "drop" : "quarantine-entity";
}

MitigationKind MitigationPolicy::resolve(const std::string& attack_type) const {
  auto it = overrides.find(attack_type);
  if (it != overrides.end()) return it->second;
  for (const auto& prefix : drop_prefixes) {
    if (attack_type.rfind(prefix, 0) == 0) return MitigationKind::kDrop;
  }
  return MitigationKind::kQuarantineEntity;
}

nlohmann::json EventRecord::to_json() const {
  nlohmann::ordered_json j;
  j["tick"] = tick;
  j["truth"] = truth;
  j["verdict"] = verdict;
  if (action) j["action"] = *action;
  if (notice) j["notice"] = *notice;
  if (gamma) j["gamma"] = *gamma;
  if (reselected) j["reselected"] = true;
  return j;
}

std::string events_to_jsonl(const std::vector<EventRecord>& events) {
  std::string out;
  for (const auto& e : events) {
    out += e.to_json().dump();
    out += '\n';
  }
  return out;
}

std::string window_truth(const std::vector<seaport::FlowRecord>& records) {
  std::map<std::string, std::size_t> attack_votes;
  bool labeled = false;
  for (const auto& r : records) {
    if (!r.label) continue;
    labeled = true;
    if (seaport::is_attack_label(*r.label)) attack_votes[*r.label] += 1;
  }
  if (!labeled) return "";
  if (attack_votes.empty()) return seaport::kNormalLabel;
  std::string best;
  std::size_t best_count = 0;
  for (const auto& [type, count] : attack_votes) {
    if (count > best_count) {
      best = type;
      best_count = count;
    }
  }
  return best;
}

autocm::Verdict detect(const Window& window, DetectionState& state) {
  if (window.records.empty()) throw Error("empty-window", "cannot detect on an empty window");
  for (const auto& r : window.records) {
    if (r.origin != seaport::Origin::kInternal) {
      throw Error("wrong-origin", "external flow in the internal detection pipeline");
    }
  }
  // Verdict strictly first; ground truth is only consulted afterwards for the
  // stats accumulator, so decisions never see labels.
  autocm::Verdict verdict = autocm::window_verdict(window.records, state.model);

  const std::string truth = window_truth(window.records);
  if (!truth.empty()) {
    const bool truth_attack = seaport::is_attack_label(truth);
    if (truth_attack && verdict.attack) ++state.stats.tp;
    if (!truth_attack && verdict.attack) ++state.stats.fp;
    if (truth_attack && !verdict.attack) ++state.stats.fn;
    if (!truth_attack && !verdict.attack) ++state.stats.tn;
  }
  return verdict;
}

MitigationAction mitigate(const autocm::Verdict& verdict, const Window& window,
                          const MitigationPolicy& policy) {
  if (!verdict.attack) {
    throw Error("invalid-call", "mitigation requires an attack verdict");
  }
  MitigationAction action;
  action.window_id = window.id;
  action.action = policy.resolve(verdict.type);
  action.notice = "attack " + verdict.type + " on window " + std::to_string(window.id) +
                  " mitigated by " + mitigation_name(action.action);
  return action;
}

namespace {

void reselect(DetectionState& state) {
  ++state.autocm_invocations;
  const std::uint64_t seed =
      derive_seed(state.reselection.seed, "reselect", state.autocm_invocations);

  // Unlabeled pool: a seeded draw from the flattened recent-window buffer.
  std::vector<FlowRecord> pool;
  for (const auto& w : state.recent_windows) {
    pool.insert(pool.end(), w.records.begin(), w.records.end());
  }
  autocm::Options options;
  options.weights = state.reselection.weights;
  options.label_config = state.reselection.label_config;
  options.hp = state.reselection.hp;
  options.timing = state.reselection.timing;
  options.mode = state.reselection.mode;
  options.seed = seed;
  options.parallel = state.reselection.parallel;

  std::vector<FlowRecord> unlabeled;
  const std::size_t want = std::min(options.label_config.unlabeled_count, pool.size());
  Rng rng(derive_seed(seed, "pool"));
  for (std::size_t pick : sample_without_replacement(pool.size(), want, rng)) {
    FlowRecord r = pool[pick];
    r.label.reset();
    unlabeled.push_back(std::move(r));
  }
  options.label_config.unlabeled_count = unlabeled.size();

  // Baseline enriched with honeypot feedback exemplars.
  std::vector<FlowRecord> baseline = state.reselection.baseline;
  baseline.insert(baseline.end(), state.feedback.flows.begin(), state.feedback.flows.end());

  autocm::RunResult run = autocm::run_autocm(unlabeled, baseline, options);
  state.model = std::move(run.winner);
  state.autocm_reports.push_back(std::move(run.report));
  state.stats = ReliabilityStats{};  // gamma now reflects only the new model
}

}  // namespace

void detection_step(DetectionState& state, const Window& window,
                    const MitigationPolicy& policy) {
  autocm::Verdict verdict = detect(window, state);

  state.recent_windows.push_back(window);
  while (state.recent_windows.size() > state.reselection.recent_window_cap) {
    state.recent_windows.pop_front();
  }

  EventRecord event;
  event.tick = window.tick;
  event.truth = window_truth(window.records);
  event.verdict = verdict.str();

  if (verdict.attack) {
    MitigationAction action = mitigate(verdict, window, policy);
    event.action = mitigation_name(action.action);
    event.notice = action.notice;
  } else {
    if (state.stats.tp + state.stats.fn > 0) {
      double gamma = reliability(state.stats);
      event.gamma = gamma;
      if (gamma < state.threshold) {
        reselect(state);
        event.reselected = true;
      }
    }
    // gamma undefined (no attack-labeled windows yet): continue with the
    // existing model.
  }
  state.event_log.push_back(std::move(event));
}

}  // namespace twinpot::detection
