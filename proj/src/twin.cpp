#include "twinpot/twin.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "twinpot/errors.hpp"
#include "twinpot/hash.hpp"

namespace twinpot::twin {

namespace {

bool same_attributes(const seaport::Entity& a, const seaport::Entity& b) {
  if (a.attributes.size() != b.attributes.size()) return false;
  for (std::size_t i = 0; i < a.attributes.size(); ++i) {
    const auto& x = a.attributes[i];
    const auto& y = b.attributes[i];
    if (x.name != y.name || x.sensitivity != y.sensitivity ||
        seaport::attr_value_repr(x.value) != seaport::attr_value_repr(y.value)) {
      return false;
    }
  }
  return a.kind == b.kind;
}

}  // namespace

std::pair<seaport::EntityGraph, SyncReport> synchronize(const seaport::EntityGraph& physical,
                                                        const seaport::EntityGraph& twin,
                                                        long tick) {
  SyncReport report;
  report.tick = tick;
  report.digest_before = seaport::graph_digest(twin);

  for (const auto& n : physical.nodes()) {
    if (!twin.has_entity(n.id)) report.unmatched_physical.push_back(n.id);
  }
  for (const auto& n : twin.nodes()) {
    if (!physical.has_entity(n.id)) report.unmatched_twin.push_back(n.id);
  }

  if (report.unmatched_physical.empty() && report.unmatched_twin.empty()) {
    // Id sets match: the twin becomes an exact snapshot, edges included.
    for (const auto& n : physical.nodes()) {
      const seaport::Entity* old = twin.find(n.id);
      if (!old || !same_attributes(*old, n)) ++report.updated;
    }
    seaport::EntityGraph synced = physical;
    report.digest_after = seaport::graph_digest(synced);
    return {std::move(synced), report};
  }

  seaport::GraphBuilder b(twin);
  for (const auto& n : physical.nodes()) {
    seaport::Entity* mine = b.graph().find_mutable(n.id);
    if (!mine) continue;
    if (!same_attributes(*mine, n)) {
      mine->kind = n.kind;
      mine->attributes = n.attributes;
      ++report.updated;
    }
  }
  seaport::EntityGraph synced = b.finish();
  report.digest_after = seaport::graph_digest(synced);
  return {std::move(synced), report};
}

std::vector<ModelDocument> export_service_documents(const seaport::EntityGraph& twin) {
  std::vector<ModelDocument> docs;
  docs.reserve(twin.nodes().size());
  for (const auto& n : twin.nodes()) {
    ModelDocument doc;
    doc.entity_id = n.id;
    doc.schema = "seaport-" + seaport::kind_name(n.kind);
    for (const auto& a : n.attributes) {
      doc.fields.push_back(
          ModelField{a.name, seaport::attr_type_tag(a.value), a.sensitivity, a.value});
    }
    std::sort(doc.fields.begin(), doc.fields.end(),
              [](const ModelField& x, const ModelField& y) { return x.name < y.name; });
    docs.push_back(std::move(doc));
  }
  return docs;
}

seaport::AttrValue decoy_value(const seaport::AttrValue& original, std::uint64_t seed,
                               const std::string& entity_id, const std::string& field_name) {
  std::uint64_t h = derive_seed(seed, entity_id + "/" + field_name);
  if (std::holds_alternative<double>(original)) {
    double fake = static_cast<double>(h % 1000000ull) / 100.0;
    if (fake == std::get<double>(original)) fake += 1.0;
    return fake;
  }
  std::string fake = "decoy-" + to_hex(h).substr(4);
  if (fake == std::get<std::string>(original)) fake += "x";
  return fake;
}

std::vector<ModelDocument> scrub_critical(std::vector<ModelDocument> docs,
                                          const ScrubPolicy& policy) {
  for (auto& doc : docs) {
    if (policy.mode == ScrubMode::kRemove) {
      doc.fields.erase(std::remove_if(doc.fields.begin(), doc.fields.end(),
                                      [](const ModelField& f) {
                                        return f.sensitivity == seaport::Sensitivity::kCritical;
                                      }),
                       doc.fields.end());
    } else {
      for (auto& f : doc.fields) {
        if (f.sensitivity == seaport::Sensitivity::kCritical) {
          f.value = decoy_value(f.value, policy.seed, doc.entity_id, f.name);
        }
      }
    }
  }
  return docs;
}

MirrorResult mirror_to_twinpot(const seaport::EntityGraph& twin, const ScrubPolicy& policy,
                               long tick) {
  MirrorResult out;

  seaport::GraphBuilder b(twin);
  for (auto& n : b.nodes()) {
    if (policy.mode == ScrubMode::kRemove) {
      n.attributes.erase(std::remove_if(n.attributes.begin(), n.attributes.end(),
                                        [](const seaport::Attribute& a) {
                                          return a.sensitivity == seaport::Sensitivity::kCritical;
                                        }),
                         n.attributes.end());
    } else {
      for (auto& a : n.attributes) {
        if (a.sensitivity == seaport::Sensitivity::kCritical) {
          a.value = decoy_value(a.value, policy.seed, n.id, a.name);
        }
      }
    }
  }
  out.pot = b.finish();

  out.database = scrub_critical(export_service_documents(twin), policy);
  for (auto& doc : out.database) doc.tick = tick;
  return out;
}

namespace {

nlohmann::ordered_json document_json(const ModelDocument& doc, bool with_tick) {
  nlohmann::ordered_json j;
  if (with_tick) j["tick"] = doc.tick;
  j["entity"] = doc.entity_id;
  j["schema"] = doc.schema;
  nlohmann::ordered_json fields = nlohmann::ordered_json::array();
  for (const auto& f : doc.fields) {
    nlohmann::ordered_json jf;
    jf["name"] = f.name;
    jf["type"] = f.type_tag;
    jf["sensitivity"] = seaport::sensitivity_name(f.sensitivity);
    jf["value"] = seaport::attr_value_json(f.value);
    fields.push_back(std::move(jf));
  }
  j["fields"] = std::move(fields);
  return j;
}

}  // namespace

std::string documents_to_jsonl(const std::vector<ModelDocument>& docs, bool with_tick) {
  std::string out;
  for (const auto& doc : docs) {
    out += document_json(doc, with_tick).dump();
    out += '\n';
  }
  return out;
}

std::vector<ModelDocument> documents_from_jsonl(const std::string& text) {
  std::vector<ModelDocument> docs;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    ModelDocument doc;
    doc.tick = j.value("tick", 0L);
    doc.entity_id = j.at("entity").get<std::string>();
    doc.schema = j.at("schema").get<std::string>();
    for (const auto& jf : j.at("fields")) {
      ModelField f;
      f.name = jf.at("name").get<std::string>();
      f.type_tag = jf.at("type").get<std::string>();
      f.sensitivity = seaport::sensitivity_from_name(jf.at("sensitivity").get<std::string>());
      f.value = seaport::attr_value_from_json(jf.at("value"));
      doc.fields.push_back(std::move(f));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace twinpot::twin
