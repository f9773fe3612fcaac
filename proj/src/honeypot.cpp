#include "twinpot/honeypot.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include "twinpot/errors.hpp"

namespace twinpot::honeypot {

using seaport::FlowRecord;

std::string destination_name(RouteDestination d) {
  return d == RouteDestination::kDtServiceLayer ? "dt-service-layer" : "honeypot-containment";
}

ReplayResult replay_tick(const std::vector<twin::ModelDocument>& database,
                         const seaport::EntityGraph& pot, long tick, std::size_t feature_dim) {
  if (database.empty()) {
    throw Error("empty-database", "replay requires a nonempty document database");
  }

  // Latest document (tick <= now) per entity; equal ticks keep the later line.
  std::map<std::string, const twin::ModelDocument*> effective;
  for (const auto& doc : database) {
    if (doc.tick > tick) continue;
    auto it = effective.find(doc.entity_id);
    if (it == effective.end() || doc.tick >= it->second->tick) {
      effective[doc.entity_id] = &doc;
    }
  }

  ReplayResult out;
  seaport::GraphBuilder b(pot);
  std::vector<std::string> updated;
  for (const auto& [entity_id, doc] : effective) {
    seaport::Entity* e = b.graph().find_mutable(entity_id);
    if (!e) continue;  // database may reference entities the pot does not carry
    bool changed = false;
    for (const auto& f : doc->fields) {
      const seaport::Attribute* existing = e->find_attribute(f.name);
      if (!existing || seaport::attr_value_repr(existing->value) !=
                           seaport::attr_value_repr(f.value) ||
          existing->sensitivity != f.sensitivity) {
        changed = true;
      }
      e->set_attribute(f.name, f.value, f.sensitivity);
    }
    if (changed) updated.push_back(entity_id);
  }
  out.pot = b.finish();

  std::sort(updated.begin(), updated.end());
  for (const auto& id : updated) {
    seaport::TelemetrySample sample;
    sample.entity_id = id;
    sample.timestamp = static_cast<double>(tick);
    sample.values.assign(feature_dim, 0.0);
    const seaport::Entity* e = out.pot.find(id);
    for (std::size_t i = 0; i < feature_dim; ++i) {
      const seaport::Attribute* a = e->find_attribute(seaport::telemetry_attr_name(i));
      if (a && std::holds_alternative<double>(a->value)) {
        sample.values[i] = std::get<double>(a->value);
      }
    }
    out.emitted.push_back(std::move(sample));
  }
  return out;
}

autocm::Verdict classify_external(const std::vector<FlowRecord>& window,
                                  const autocm::TrainedModel& model) {
  if (window.empty()) throw Error("empty-window", "cannot classify an empty window");
  for (const auto& r : window) {
    if (r.origin != seaport::Origin::kExternal) {
      throw Error("wrong-origin", "internal flow in the external pipeline");
    }
  }
  return autocm::window_verdict(window, model);
}

BehaviorReport analyze_behavior(const std::vector<FlowRecord>& episode,
                                const std::string& attack_type,
                                const seaport::EntityGraph& pot, std::size_t exemplar_cap) {
  if (episode.empty()) throw Error("empty-episode", "behavioral analysis needs flows");
  for (const auto& r : episode) {
    if (r.origin != seaport::Origin::kExternal) {
      throw Error("wrong-origin", "internal flow in an external attack episode");
    }
  }
  (void)pot;

  BehaviorReport report;
  report.attack_type = attack_type;
  report.flow_count = episode.size();
  report.t_begin = episode.front().timestamp;
  report.t_end = episode.front().timestamp;
  for (const auto& r : episode) {
    report.t_begin = std::min(report.t_begin, r.timestamp);
    report.t_end = std::max(report.t_end, r.timestamp);
  }

  const std::size_t f = episode[0].features.size();
  const double n = static_cast<double>(episode.size());
  report.per_feature.assign(f, FeatureSummary{});
  for (std::size_t i = 0; i < f; ++i) {
    report.per_feature[i].min = std::numeric_limits<double>::infinity();
    report.per_feature[i].max = -std::numeric_limits<double>::infinity();
  }
  for (const auto& r : episode) {
    for (std::size_t i = 0; i < f; ++i) {
      report.per_feature[i].mean += r.features[i];
      report.per_feature[i].min = std::min(report.per_feature[i].min, r.features[i]);
      report.per_feature[i].max = std::max(report.per_feature[i].max, r.features[i]);
    }
  }
  for (std::size_t i = 0; i < f; ++i) report.per_feature[i].mean /= n;
  for (const auto& r : episode) {
    for (std::size_t i = 0; i < f; ++i) {
      double d = r.features[i] - report.per_feature[i].mean;
      report.per_feature[i].variance += d * d;
    }
  }
  for (std::size_t i = 0; i < f; ++i) report.per_feature[i].variance /= n;

  std::set<std::string> targets;
  for (const auto& r : episode) {
    if (!r.target.empty()) targets.insert(r.target);
  }
  report.targeted_entities.assign(targets.begin(), targets.end());

  const std::size_t cap = std::min(exemplar_cap, episode.size());
  for (std::size_t i = 0; i < cap; ++i) {
    FlowRecord exemplar = episode[i];
    exemplar.label = attack_type;
    report.exemplars.push_back(std::move(exemplar));
  }
  return report;
}

FeedbackStore forward_report(const BehaviorReport& report, FeedbackStore store) {
  for (const auto& r : report.exemplars) {
    store.flows.push_back(r);
  }
  while (store.flows.size() > store.cap) store.flows.pop_front();
  return store;
}

RouteDecision route_external(const autocm::Verdict& verdict) {
  RouteDecision d;
  d.destination = verdict.attack ? RouteDestination::kHoneypotContainment
                                 : RouteDestination::kDtServiceLayer;
  return d;
}

nlohmann::json report_to_json(const BehaviorReport& report) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& s : report.per_feature) {
    features.push_back(
        {{"mean", s.mean}, {"variance", s.variance}, {"min", s.min}, {"max", s.max}});
  }
  nlohmann::json exemplars = nlohmann::json::array();
  for (const auto& r : report.exemplars) exemplars.push_back(seaport::flow_to_json(r));
  return {{"attack_type", report.attack_type},
          {"window", {{"t_begin", report.t_begin}, {"t_end", report.t_end}}},
          {"flow_count", report.flow_count},
          {"per_feature", features},
          {"targeted_entities", report.targeted_entities},
          {"exemplars", exemplars}};
}

std::string report_file_name(long tick, const std::string& attack_type) {
  return "report_" + std::to_string(tick) + "_" + attack_type + ".json";
}

std::optional<EpisodeTracker::Episode> EpisodeTracker::feed(
    long tick, const autocm::Verdict& verdict, const std::vector<FlowRecord>& records) {
  if (!verdict.attack) {
    return flush();
  }
  if (open_ && open_->type == verdict.type) {
    open_->records.insert(open_->records.end(), records.begin(), records.end());
    return std::nullopt;
  }
  std::optional<Episode> closed = std::move(open_);
  open_ = Episode{verdict.type, tick, records};
  return closed;
}

std::optional<EpisodeTracker::Episode> EpisodeTracker::flush() {
  std::optional<Episode> closed = std::move(open_);
  open_.reset();
  return closed;
}

}  // namespace twinpot::honeypot
