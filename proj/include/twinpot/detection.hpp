#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twinpot/autocm.hpp"
#include "twinpot/honeypot.hpp"
#include "twinpot/seaport.hpp"

namespace twinpot::detection {

// Running confusion counts, window-level, against ground truth revealed after
// each verdict.
struct ReliabilityStats {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::uint64_t labeled_windows() const { return tp + fp + fn + tn; }
};

// gamma = 1 - FN/(TP+FN). Errors with undefined-reliability when TP+FN == 0.
double reliability(const ReliabilityStats& stats);

enum class MitigationKind { kDrop, kQuarantineEntity };

std::string mitigation_name(MitigationKind kind);

struct MitigationAction {
  std::uint64_t window_id = 0;
  MitigationKind action = MitigationKind::kDrop;
  std::string notice;  // admin message
};

// Volumetric attack types get dropped, everything else quarantines the
// targeted entity; overridable per type.
struct MitigationPolicy {
  std::vector<std::string> drop_prefixes = {"ddos", "dos"};
  std::map<std::string, MitigationKind> overrides;

  MitigationKind resolve(const std::string& attack_type) const;
};

struct Window {
  std::uint64_t id = 0;
  long tick = 0;
  std::vector<seaport::FlowRecord> records;
};

struct EventRecord {
  long tick = 0;
  std::string truth;  // window ground truth; empty when unlabeled
  std::string verdict;
  std::optional<std::string> action;
  std::optional<std::string> notice;
  std::optional<double> gamma;
  bool reselected = false;

  nlohmann::json to_json() const;
};

std::string events_to_jsonl(const std::vector<EventRecord>& events);

// Inputs the re-selection path feeds back into AutoCM.
struct ReselectionConfig {
  std::vector<seaport::FlowRecord> baseline;
  autocm::LabelConfig label_config;
  autocm::SelectionWeights weights;
  autocm::SelectionMode mode = autocm::SelectionMode::kNormalized;
  autocm::TimingMode timing = autocm::TimingMode::kVirtual;
  ml::Hyperparameters hp;
  std::uint64_t seed = 0;
  bool parallel = true;
  std::size_t recent_window_cap = 1000;
};

struct DetectionState {
  autocm::TrainedModel model;
  ReliabilityStats stats;
  double threshold = 0.95;
  honeypot::FeedbackStore feedback;
  std::vector<EventRecord> event_log;
  ReselectionConfig reselection;
  std::deque<Window> recent_windows;
  std::uint64_t autocm_invocations = 0;
  std::vector<autocm::AutocmReport> autocm_reports;
};

// Verdict from the active model; updates confusion counts when the window
// carries ground-truth labels. Errors with wrong-origin on external records.
autocm::Verdict detect(const Window& window, DetectionState& state);

// Deterministic action for an attack verdict. Errors with invalid-call on a
// normal verdict.
MitigationAction mitigate(const autocm::Verdict& verdict, const Window& window,
                          const MitigationPolicy& policy);

// One Algorithm-1 step: attack -> mitigate + inform; otherwise check gamma
// and either continue or re-select the model through AutoCM.
void detection_step(DetectionState& state, const Window& window,
                    const MitigationPolicy& policy = MitigationPolicy{});

// Window ground truth: attack iff any record is labeled with an attack type;
// the type is the plurality attack label. Empty when no record is labeled.
std::string window_truth(const std::vector<seaport::FlowRecord>& records);

}  // namespace twinpot::detection
