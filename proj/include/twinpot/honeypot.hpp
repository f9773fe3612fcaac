#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "twinpot/autocm.hpp"
#include "twinpot/seaport.hpp"
#include "twinpot/twin.hpp"

namespace twinpot::honeypot {

inline constexpr std::size_t kExemplarCap = 100;
inline constexpr std::size_t kFeedbackCap = 1000;

struct FeatureSummary {
  double mean = 0.0;
  double variance = 0.0;  // population variance
  double min = 0.0;
  double max = 0.0;
};

struct BehaviorReport {
  std::string attack_type;
  double t_begin = 0.0;
  double t_end = 0.0;
  std::uint64_t flow_count = 0;
  std::vector<FeatureSummary> per_feature;       // length F
  std::vector<std::string> targeted_entities;    // distinct, sorted
  std::vector<seaport::FlowRecord> exemplars;    // capped, labeled, external
};

enum class RouteDestination { kDtServiceLayer, kHoneypotContainment };

struct RouteDecision {
  RouteDestination destination = RouteDestination::kDtServiceLayer;
};

std::string destination_name(RouteDestination d);

// Labeled exemplar flows fed back as additional AutoCM baseline data.
// FIFO-evicting, single-writer.
struct FeedbackStore {
  std::deque<seaport::FlowRecord> flows;
  std::size_t cap = kFeedbackCap;
};

struct ReplayResult {
  seaport::EntityGraph pot;
  std::vector<seaport::TelemetrySample> emitted;  // one per updated entity, by id
};

// Applies database documents with tick <= current tick, latest wins per
// entity; emits one telemetry sample per entity whose values changed.
ReplayResult replay_tick(const std::vector<twin::ModelDocument>& database,
                         const seaport::EntityGraph& pot, long tick,
                         std::size_t feature_dim = seaport::kDefaultFeatureDim);

// Verdict from the honeypot's active model. Errors with wrong-origin if any
// record is internal.
autocm::Verdict classify_external(const std::vector<seaport::FlowRecord>& window,
                                  const autocm::TrainedModel& model);

// Exact statistics over one attack episode plus capped labeled exemplars.
BehaviorReport analyze_behavior(const std::vector<seaport::FlowRecord>& episode,
                                const std::string& attack_type,
                                const seaport::EntityGraph& pot,
                                std::size_t exemplar_cap = kExemplarCap);

// Appends the report's exemplars to the feedback store (FIFO cap, duplicates
// allowed).
FeedbackStore forward_report(const BehaviorReport& report, FeedbackStore store);

RouteDecision route_external(const autocm::Verdict& verdict);

nlohmann::json report_to_json(const BehaviorReport& report);
std::string report_file_name(long tick, const std::string& attack_type);

// Groups consecutive same-type attack windows into episodes; a normal verdict
// or a type change closes the open episode.
class EpisodeTracker {
 public:
  struct Episode {
    std::string type;
    long first_tick = 0;
    std::vector<seaport::FlowRecord> records;
  };

  // Returns the episode closed by this window, if any.
  std::optional<Episode> feed(long tick, const autocm::Verdict& verdict,
                              const std::vector<seaport::FlowRecord>& records);
  std::optional<Episode> flush();

 private:
  std::optional<Episode> open_;
};

}  // namespace twinpot::honeypot
