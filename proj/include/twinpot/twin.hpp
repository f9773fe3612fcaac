#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "twinpot/seaport.hpp"

namespace twinpot::twin {

struct SyncReport {
  long tick = 0;
  std::size_t updated = 0;  // entities whose attributes actually changed
  std::string digest_before;
  std::string digest_after;
  double lag = 0.0;  // simulated seconds; snapshot copy completes instantly
  std::vector<std::string> unmatched_physical;  // ids only in the physical graph
  std::vector<std::string> unmatched_twin;      // ids only in the twin
};

enum class ScrubMode { kRemove, kDecoy };

struct ScrubPolicy {
  ScrubMode mode = ScrubMode::kRemove;
  std::uint64_t seed = 0;
};

struct ModelField {
  std::string name;
  std::string type_tag;  // "number" | "string"
  seaport::Sensitivity sensitivity = seaport::Sensitivity::kPublic;
  seaport::AttrValue value;
};

// One exported schema document per entity, fields sorted by name.
struct ModelDocument {
  long tick = 0;
  std::string entity_id;
  std::string schema;  // "seaport-<kind>"
  std::vector<ModelField> fields;
};

// Copies physical attribute values into the twin. When the id sets match the
// twin becomes an exact copy (digest_after == physical digest); otherwise the
// shared entities are copied and the divergent ids are reported.
std::pair<seaport::EntityGraph, SyncReport> synchronize(const seaport::EntityGraph& physical,
                                                        const seaport::EntityGraph& twin,
                                                        long tick);

// One document per entity, every attribute as a field, deterministic order.
std::vector<ModelDocument> export_service_documents(const seaport::EntityGraph& twin);

// remove: drops critical fields. decoy: replaces critical values with
// seed-deterministic fakes, never equal to the original. Public fields pass
// through byte-identical.
std::vector<ModelDocument> scrub_critical(std::vector<ModelDocument> docs,
                                          const ScrubPolicy& policy);

struct MirrorResult {
  seaport::EntityGraph pot;             // structurally isomorphic to the twin
  std::vector<ModelDocument> database;  // scrubbed documents for replay
};

MirrorResult mirror_to_twinpot(const seaport::EntityGraph& twin, const ScrubPolicy& policy,
                               long tick = 0);

// JSON Lines serialization (*.mdl.jsonl). Replay database lines lead with a
// tick field; plain twin exports omit it.
std::string documents_to_jsonl(const std::vector<ModelDocument>& docs, bool with_tick);
std::vector<ModelDocument> documents_from_jsonl(const std::string& text);

seaport::AttrValue decoy_value(const seaport::AttrValue& original, std::uint64_t seed,
                               const std::string& entity_id, const std::string& field_name);

}  // namespace twinpot::twin
