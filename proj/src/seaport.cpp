#include "twinpot/seaport.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "twinpot/errors.hpp"
#include "twinpot/hash.hpp"

namespace twinpot {

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

}  // namespace twinpot

namespace twinpot::seaport {

namespace {

const std::pair<EntityKind, const char*> kKindNames[] = {
    {EntityKind::kShip, "ship"},         {EntityKind::kCrane, "crane"},
    {EntityKind::kGate, "gate"},         {EntityKind::kIotSensor, "iot-sensor"},
    {EntityKind::kGateway, "gateway"},   {EntityKind::kServer, "server"},
};

}  // namespace

std::string kind_name(EntityKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "iot-sensor";
}

EntityKind kind_from_name(const std::string& name) {
  for (const auto& [k, n] : kKindNames) {
    if (name == n) return k;
  }
  throw Error("unknown-kind", "no entity kind named '" + name + "'");
}

std::string sensitivity_name(Sensitivity s) {
  return s == Sensitivity::kCritical ? "critical" : "public";
}

Sensitivity sensitivity_from_name(const std::string& name) {
  if (name == "critical") return Sensitivity::kCritical;
  if (name == "public") return Sensitivity::kPublic;
  throw Error("unknown-sensitivity", "no sensitivity named '" + name + "'");
}

std::string origin_name(Origin o) {
  return o == Origin::kInternal ? "internal" : "external";
}

Origin origin_from_name(const std::string& name) {
  if (name == "internal") return Origin::kInternal;
  if (name == "external") return Origin::kExternal;
  throw Error("unknown-origin", "no origin named '" + name + "'");
}

std::string attr_type_tag(const AttrValue& v) {
  return std::holds_alternative<double>(v) ? "number" : "string";
}

std::string attr_value_repr(const AttrValue& v) {
  if (const double* d = std::get_if<double>(&v)) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", *d);
    return std::string(buf);
  }
  return std::get<std::string>(v);
}

nlohmann::json attr_value_json(const AttrValue& v) {
  if (const double* d = std::get_if<double>(&v)) return *d;
  return std::get<std::string>(v);
}

AttrValue attr_value_from_json(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw Error("bad-attribute-value", "attribute values are numbers or strings");
}

const Attribute* Entity::find_attribute(const std::string& name) const {
  for (const auto& a : attributes) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

void Entity::set_attribute(const std::string& name, AttrValue value, Sensitivity sensitivity) {
  for (auto& a : attributes) {
    if (a.name == name) {
      a.value = std::move(value);
      a.sensitivity = sensitivity;
      return;
    }
  }
  attributes.push_back(Attribute{name, std::move(value), sensitivity});
}

bool EntityGraph::has_entity(const std::string& id) const {
  return index_.count(id) != 0;
}

const Entity* EntityGraph::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &nodes_[it->second];
}

Entity* EntityGraph::find_mutable(const std::string& id) {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &nodes_[it->second];
}

void EntityGraph::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    index_[nodes_[i].id] = i;
  }
}

void EntityGraph::validate() const {
  std::set<std::string> ids;
  for (const auto& n : nodes_) {
    if (!ids.insert(n.id).second) {
      throw Error("duplicate-id", "entity id '" + n.id + "' declared twice");
    }
    std::set<std::string> attr_names;
    for (const auto& a : n.attributes) {
      if (!attr_names.insert(a.name).second) {
        throw Error("duplicate-attribute",
                    "attribute '" + a.name + "' declared twice on '" + n.id + "'");
      }
    }
  }
  for (const auto& e : edges_) {
    if (e.src == e.dst) {
      throw Error("self-loop", "edge on '" + e.src + "' loops to itself");
    }
    if (!ids.count(e.src)) {
      throw Error("dangling-endpoint", "relation source '" + e.src + "' is not declared");
    }
    if (!ids.count(e.dst)) {
      throw Error("dangling-endpoint", "relation target '" + e.dst + "' is not declared");
    }
  }
}

EntityGraph GraphBuilder::finish() {
  graph_.reindex();
  graph_.validate();
  return std::move(graph_);
}

EntityGraph build_entity_graph(std::vector<Entity> entities, std::vector<Relation> relations) {
  if (entities.empty()) {
    throw Error("empty-spec", "entity spec list is empty");
  }
  EntityGraph g;
  g.nodes_ = std::move(entities);
  std::sort(g.nodes_.begin(), g.nodes_.end(),
            [](const Entity& a, const Entity& b) { return a.id < b.id; });
  g.edges_ = std::move(relations);
  std::sort(g.edges_.begin(), g.edges_.end(), [](const Relation& a, const Relation& b) {
    return std::tie(a.src, a.dst, a.relation) < std::tie(b.src, b.dst, b.relation);
  });
  g.reindex();
  g.validate();
  return g;
}

std::string telemetry_attr_name(std::size_t index) {
  return "t" + std::to_string(index);
}

EntityGraph apply_telemetry(const EntityGraph& graph, const TelemetrySample& sample,
                            std::size_t feature_dim) {
  if (!graph.has_entity(sample.entity_id)) {
    throw Error("unknown-entity", "telemetry for undeclared entity '" + sample.entity_id + "'");
  }
  if (sample.values.size() != feature_dim) {
    throw Error("length-mismatch", "telemetry vector has " + std::to_string(sample.values.size()) +
                                       " values, expected " + std::to_string(feature_dim));
  }
  GraphBuilder b(graph);
  Entity* e = b.graph().find_mutable(sample.entity_id);
  for (std::size_t i = 0; i < feature_dim; ++i) {
    e->set_attribute(telemetry_attr_name(i), sample.values[i], Sensitivity::kPublic);
  }
  return b.finish();
}

std::string graph_digest(const EntityGraph& graph) {
  Fnv1a h;
  // Nodes are kept sorted by id; attributes digest in name-sorted order so
  // insertion order never changes the digest.
  for (const auto& n : graph.nodes()) {
    h.update("n|");
    h.update(n.id);
    h.update("|");
    h.update(kind_name(n.kind));
    std::vector<const Attribute*> attrs;
    attrs.reserve(n.attributes.size());
    for (const auto& a : n.attributes) attrs.push_back(&a);
    std::sort(attrs.begin(), attrs.end(),
              [](const Attribute* a, const Attribute* b) { return a->name < b->name; });
    for (const Attribute* a : attrs) {
      h.update("|a|");
      h.update(a->name);
      h.update("=");
      h.update(attr_value_repr(a->value));
      h.update(":");
      h.update(sensitivity_name(a->sensitivity));
    }
    h.update("\n");
  }
  for (const auto& e : graph.edges()) {
    h.update("e|");
    h.update(e.src);
    h.update(">");
    h.update(e.dst);
    h.update("|");
    h.update(e.relation);
    h.update("\n");
  }
  return to_hex(h.value());
}

EntityGraph entity_graph_from_json(const nlohmann::json& doc) {
  std::vector<Entity> entities;
  for (const auto& je : doc.at("entities")) {
    Entity e;
    e.id = je.at("id").get<std::string>();
    e.kind = kind_from_name(je.at("kind").get<std::string>());
    if (je.contains("attributes")) {
      for (const auto& ja : je.at("attributes")) {
        Attribute a;
        a.name = ja.at("name").get<std::string>();
        a.value = attr_value_from_json(ja.at("value"));
        a.sensitivity = ja.contains("sensitivity")
                            ? sensitivity_from_name(ja.at("sensitivity").get<std::string>())
                            : Sensitivity::kPublic;
        e.attributes.push_back(std::move(a));
      }
    }
    entities.push_back(std::move(e));
  }
  std::vector<Relation> relations;
  if (doc.contains("relations")) {
    for (const auto& jr : doc.at("relations")) {
      relations.push_back(Relation{jr.at("src").get<std::string>(),
                                   jr.at("dst").get<std::string>(),
                                   jr.at("relation").get<std::string>()});
    }
  }
  return build_entity_graph(std::move(entities), std::move(relations));
}

nlohmann::json entity_graph_to_json(const EntityGraph& graph) {
  nlohmann::json entities = nlohmann::json::array();
  for (const auto& n : graph.nodes()) {
    nlohmann::json attrs = nlohmann::json::array();
    for (const auto& a : n.attributes) {
      attrs.push_back({{"name", a.name},
                       {"value", attr_value_json(a.value)},
                       {"sensitivity", sensitivity_name(a.sensitivity)}});
    }
    entities.push_back({{"id", n.id}, {"kind", kind_name(n.kind)}, {"attributes", attrs}});
  }
  nlohmann::json relations = nlohmann::json::array();
  for (const auto& e : graph.edges()) {
    relations.push_back({{"src", e.src}, {"dst", e.dst}, {"relation", e.relation}});
  }
  return {{"entities", entities}, {"relations", relations}};
}

nlohmann::json flow_to_json(const FlowRecord& record) {
  nlohmann::json j = {{"id", record.id},
                      {"t", record.timestamp},
                      {"origin", origin_name(record.origin)},
                      {"features", record.features}};
  if (record.label) j["label"] = *record.label;
  if (!record.target.empty()) j["target"] = record.target;
  return j;
}

FlowRecord flow_from_json(const nlohmann::json& j) {
  FlowRecord r;
  r.id = j.at("id").get<std::uint64_t>();
  r.timestamp = j.at("t").get<double>();
  r.origin = origin_from_name(j.at("origin").get<std::string>());
  r.features = j.at("features").get<std::vector<double>>();
  if (j.contains("label")) r.label = j.at("label").get<std::string>();
  r.target = j.value("target", std::string());
  return r;
}

}  // namespace twinpot::seaport
