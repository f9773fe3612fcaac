#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "twinpot/errors.hpp"
#include "twinpot/rng.hpp"
#include "twinpot/twin.hpp"

using namespace twinpot;
using namespace twinpot::seaport;
using namespace twinpot::twin;

namespace {

EntityGraph port_graph() {
  Entity ship{"ship-1", EntityKind::kShip, {}};
  ship.set_attribute("loa", 100.0);
  ship.set_attribute("ais-key", std::string("secret-ais"), Sensitivity::kCritical);
  Entity crane{"crane-1", EntityKind::kCrane, {}};
  crane.set_attribute("reach", 45.0);
  Entity gate{"gate-1", EntityKind::kGate, {}};
  gate.set_attribute("code", std::string("1919"), Sensitivity::kCritical);
  gate.set_attribute("lat", 41.0);
  return build_entity_graph({ship, crane, gate},
                            {{"ship-1", "crane-1", "berthed-at"},
                             {"crane-1", "gate-1", "feeds"}});
}

EntityGraph random_critical_graph(Rng& rng) {
  std::vector<Entity> entities;
  const std::size_t n = 2 + rng.below(5);
  for (std::size_t i = 0; i < n; ++i) {
    Entity e{"n-" + std::to_string(i), EntityKind::kIotSensor, {}};
    const std::size_t attrs = 1 + rng.below(5);
    for (std::size_t a = 0; a < attrs; ++a) {
      const bool critical = rng.below(2) == 0;
      if (rng.below(2) == 0) {
        e.set_attribute("a" + std::to_string(a), rng.uniform(-5, 5),
                        critical ? Sensitivity::kCritical : Sensitivity::kPublic);
      } else {
        e.set_attribute("a" + std::to_string(a), "v" + std::to_string(rng.below(100)),
                        critical ? Sensitivity::kCritical : Sensitivity::kPublic);
      }
    }
    entities.push_back(std::move(e));
  }
  return build_entity_graph(std::move(entities), {});
}

}  // namespace

TEST_CASE("synchronize copies changed entities and matches digests") {
  EntityGraph physical = port_graph();
  EntityGraph twin_graph = physical;

  GraphBuilder b(physical);
  b.graph().find_mutable("ship-1")->set_attribute("loa", 101.0);
  b.graph().find_mutable("crane-1")->set_attribute("reach", 46.0);
  b.graph().find_mutable("gate-1")->set_attribute("lat", 42.0);
  physical = b.finish();

  auto [synced, report] = synchronize(physical, twin_graph, 3);
  CHECK(report.tick == 3);
  CHECK(report.updated == 3);
  CHECK(report.lag >= 0.0);
  CHECK(report.digest_after == graph_digest(physical));
  CHECK(graph_digest(synced) == graph_digest(physical));
}

TEST_CASE("synchronize is idempotent") {
  EntityGraph physical = port_graph();
  EntityGraph twin_graph = physical;
  auto [synced, report] = synchronize(physical, twin_graph, 1);
  CHECK(report.updated == 0);
  CHECK(graph_digest(synced) == graph_digest(twin_graph));
}

TEST_CASE("synchronize reports unmatched ids without failing") {
  EntityGraph physical = port_graph();
  Entity extra{"extra-1", EntityKind::kServer, {}};
  extra.set_attribute("x", 1.0);
  std::vector<Entity> nodes(physical.nodes().begin(), physical.nodes().end());
  nodes.push_back(extra);
  std::vector<Relation> edges(physical.edges().begin(), physical.edges().end());
  EntityGraph bigger = build_entity_graph(nodes, edges);

  EntityGraph twin_graph = port_graph();
  auto [synced, report] = synchronize(bigger, twin_graph, 0);
  REQUIRE(report.unmatched_physical.size() == 1);
  CHECK(report.unmatched_physical[0] == "extra-1");
  CHECK(report.unmatched_twin.empty());
  CHECK_FALSE(synced.has_entity("extra-1"));
}

TEST_CASE("export produces one document per entity with fields preserved") {
  EntityGraph g = port_graph();
  std::vector<ModelDocument> docs = export_service_documents(g);
  REQUIRE(docs.size() == 3);

  const auto& gate = docs[1];  // nodes sorted: crane-1, gate-1, ship-1
  CHECK(gate.entity_id == "gate-1");
  CHECK(gate.schema == "seaport-gate");
  REQUIRE(gate.fields.size() == 2);
  CHECK(gate.fields[0].name == "code");  // fields sorted by name
  CHECK(gate.fields[1].name == "lat");
}

TEST_CASE("export is byte-identical across runs") {
  EntityGraph g = port_graph();
  CHECK(documents_to_jsonl(export_service_documents(g), false) ==
        documents_to_jsonl(export_service_documents(g), false));
}

TEST_CASE("scrub remove drops critical fields only") {
  auto docs = scrub_critical(export_service_documents(port_graph()),
                             {ScrubMode::kRemove, 1});
  for (const auto& d : docs) {
    for (const auto& f : d.fields) {
      CHECK(f.sensitivity == Sensitivity::kPublic);
    }
  }
  // gate-1 keeps lat, loses code
  CHECK(docs[1].fields.size() == 1);
  CHECK(docs[1].fields[0].name == "lat");
}

TEST_CASE("scrub decoy replaces critical values deterministically") {
  auto original = export_service_documents(port_graph());
  auto a = scrub_critical(original, {ScrubMode::kDecoy, 7});
  auto b = scrub_critical(original, {ScrubMode::kDecoy, 7});
  auto c = scrub_critical(original, {ScrubMode::kDecoy, 8});

  CHECK(documents_to_jsonl(a, false) == documents_to_jsonl(b, false));
  CHECK(documents_to_jsonl(a, false) != documents_to_jsonl(c, false));

  // critical values never equal the original; public fields byte-identical
  for (std::size_t d = 0; d < original.size(); ++d) {
    REQUIRE(a[d].fields.size() == original[d].fields.size());
    for (std::size_t f = 0; f < original[d].fields.size(); ++f) {
      const auto& before = original[d].fields[f];
      const auto& after = a[d].fields[f];
      if (before.sensitivity == Sensitivity::kCritical) {
        CHECK(attr_value_repr(after.value) != attr_value_repr(before.value));
      } else {
        CHECK(attr_value_repr(after.value) == attr_value_repr(before.value));
      }
    }
  }
}

TEST_CASE("scrub with no critical fields is the identity") {
  Entity plain{"p-1", EntityKind::kServer, {}};
  plain.set_attribute("cpu", 4.0);
  EntityGraph g = build_entity_graph({plain}, {});
  auto docs = export_service_documents(g);
  auto scrubbed = scrub_critical(docs, {ScrubMode::kRemove, 0});
  CHECK(documents_to_jsonl(docs, false) == documents_to_jsonl(scrubbed, false));
}

TEST_CASE("scrub soundness over random graphs") {
  Rng rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    EntityGraph g = random_critical_graph(rng);
    auto docs = export_service_documents(g);
    auto removed = scrub_critical(docs, {ScrubMode::kRemove, trial});
    for (const auto& d : removed) {
      for (const auto& f : d.fields) CHECK(f.sensitivity != Sensitivity::kCritical);
    }
    auto decoyed = scrub_critical(docs, {ScrubMode::kDecoy, static_cast<std::uint64_t>(trial)});
    for (std::size_t i = 0; i < docs.size(); ++i) {
      for (std::size_t f = 0; f < docs[i].fields.size(); ++f) {
        if (docs[i].fields[f].sensitivity == Sensitivity::kCritical) {
          CHECK(attr_value_repr(decoyed[i].fields[f].value) !=
                attr_value_repr(docs[i].fields[f].value));
        }
      }
    }
  }
}

TEST_CASE("mirror preserves structure and scrubs critical attributes") {
  EntityGraph twin_graph = port_graph();
  MirrorResult mirror = mirror_to_twinpot(twin_graph, {ScrubMode::kRemove, 5}, 2);

  CHECK(mirror.pot.nodes().size() == twin_graph.nodes().size());
  REQUIRE(mirror.pot.edges().size() == twin_graph.edges().size());
  std::vector<std::string> relations_before, relations_after;
  for (const auto& e : twin_graph.edges()) relations_before.push_back(e.relation);
  for (const auto& e : mirror.pot.edges()) relations_after.push_back(e.relation);
  std::sort(relations_before.begin(), relations_before.end());
  std::sort(relations_after.begin(), relations_after.end());
  CHECK(relations_before == relations_after);

  for (const auto& n : mirror.pot.nodes()) {
    for (const auto& a : n.attributes) CHECK(a.sensitivity != Sensitivity::kCritical);
  }
  for (const auto& d : mirror.database) {
    CHECK(d.tick == 2);
    for (const auto& f : d.fields) CHECK(f.sensitivity != Sensitivity::kCritical);
  }
}

TEST_CASE("mirror is deterministic for a fixed seed") {
  EntityGraph twin_graph = port_graph();
  auto m1 = mirror_to_twinpot(twin_graph, {ScrubMode::kDecoy, 9});
  auto m2 = mirror_to_twinpot(twin_graph, {ScrubMode::kDecoy, 9});
  CHECK(graph_digest(m1.pot) == graph_digest(m2.pot));
}

TEST_CASE("document JSONL round trip keeps ticks leading") {
  EntityGraph g = port_graph();
  auto docs = export_service_documents(g);
  for (std::size_t i = 0; i < docs.size(); ++i) docs[i].tick = static_cast<long>(i);

  std::string with_tick = documents_to_jsonl(docs, true);
  CHECK(with_tick.substr(0, 9) == "{\"tick\":0");

  auto back = documents_from_jsonl(with_tick);
  REQUIRE(back.size() == docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    CHECK(back[i].tick == docs[i].tick);
    CHECK(back[i].entity_id == docs[i].entity_id);
    CHECK(back[i].fields.size() == docs[i].fields.size());
  }

  std::string without_tick = documents_to_jsonl(docs, false);
  CHECK(without_tick.find("tick") == std::string::npos);
}
