#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace twinpot::seaport {

inline constexpr std::size_t kDefaultFeatureDim = 16;
inline constexpr const char* kNormalLabel = "normal";

enum class EntityKind { kShip, kCrane, kGate, kIotSensor, kGateway, kServer };
enum class Sensitivity { kPublic, kCritical };
enum class Origin { kInternal, kExternal };

std::string kind_name(EntityKind kind);
EntityKind kind_from_name(const std::string& name);
std::string sensitivity_name(Sensitivity s);
Sensitivity sensitivity_from_name(const std::string& name);
std::string origin_name(Origin o);
Origin origin_from_name(const std::string& name);

// Scalar or string attribute value.
using AttrValue = std::variant<double, std::string>;

std::string attr_type_tag(const AttrValue& v);     // "number" | "string"
std::string attr_value_repr(const AttrValue& v);   // canonical text, digest input
nlohmann::json attr_value_json(const AttrValue& v);
AttrValue attr_value_from_json(const nlohmann::json& j);

struct Attribute {
  std::string name;
  AttrValue value;
  Sensitivity sensitivity = Sensitivity::kPublic;
};

struct Entity {
  std::string id;
  EntityKind kind = EntityKind::kIotSensor;
  std::vector<Attribute> attributes;  // names unique, insertion order kept

  const Attribute* find_attribute(const std::string& name) const;
  void set_attribute(const std::string& name, AttrValue value,
                     Sensitivity sensitivity = Sensitivity::kPublic);
};

struct Relation {
  std::string src;
  std::string dst;
  std::string relation;

  friend bool operator==(const Relation&, const Relation&) = default;
};

// Immutable-by-convention snapshot of the physical/twin/honeypot entity set.
// Mutating operations return a new graph; instances are safe to share
// read-only across threads.
class EntityGraph {
 public:
  EntityGraph() = default;

  const std::vector<Entity>& nodes() const { return nodes_; }
  const std::vector<Relation>& edges() const { return edges_; }

  bool has_entity(const std::string& id) const;
  const Entity* find(const std::string& id) const;
  Entity* find_mutable(const std::string& id);

  // Validates edge endpoints, self-loops and id uniqueness; throws Error.
  void validate() const;

 private:
  friend EntityGraph build_entity_graph(std::vector<Entity>, std::vector<Relation>);
  friend class GraphBuilder;

  std::vector<Entity> nodes_;  // sorted by id
  std::vector<Relation> edges_;
  std::map<std::string, std::size_t> index_;

  void reindex();
};

// Internal helper for operations that produce a modified copy.
class GraphBuilder {
 public:
  explicit GraphBuilder(const EntityGraph& base) : graph_(base) {}
  EntityGraph& graph() { return graph_; }
  std::vector<Entity>& nodes() { return graph_.nodes_; }
  EntityGraph finish();

 private:
  EntityGraph graph_;
};

struct TelemetrySample {
  std::string entity_id;
  double timestamp = 0.0;  // simulated seconds
  std::vector<double> values;  // length F
};

struct FlowRecord {
  std::uint64_t id = 0;
  double timestamp = 0.0;
  Origin origin = Origin::kInternal;
  std::vector<double> features;             // length F
  std::optional<std::string> label;         // "normal" or attack type name
  std::string target;                       // destination entity id, "" if none
};

inline bool is_attack_label(const std::string& label) { return label != kNormalLabel; }

// Validates specs and returns a graph with nodes ordered by id.
// Errors: duplicate-id, duplicate-attribute, dangling-endpoint, self-loop, empty-spec.
EntityGraph build_entity_graph(std::vector<Entity> entities, std::vector<Relation> relations);

// Folds one telemetry sample into the entity's t0..t(F-1) attributes.
// Errors: unknown-entity, length-mismatch.
EntityGraph apply_telemetry(const EntityGraph& graph, const TelemetrySample& sample,
                            std::size_t feature_dim = kDefaultFeatureDim);

// Stable content hash over sorted nodes/edges/attributes; hex string.
std::string graph_digest(const EntityGraph& graph);

// JSON document: {"entities":[{id,kind,attributes:[{name,value,sensitivity?}]}],
//                 "relations":[{src,dst,relation}]}
EntityGraph entity_graph_from_json(const nlohmann::json& doc);
nlohmann::json entity_graph_to_json(const EntityGraph& graph);

nlohmann::json flow_to_json(const FlowRecord& record);
FlowRecord flow_from_json(const nlohmann::json& j);

std::string telemetry_attr_name(std::size_t index);

}  // namespace twinpot::seaport
