#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "twinpot/errors.hpp"
#include "twinpot/rng.hpp"
#include "twinpot/seaport.hpp"

using namespace twinpot;
using namespace twinpot::seaport;

namespace {

Entity make_entity(const std::string& id, EntityKind kind) {
  return Entity{id, kind, {}};
}

EntityGraph small_port() {
  Entity ship = make_entity("ship-1", EntityKind::kShip);
  ship.set_attribute("loa", 100.0);
  Entity crane = make_entity("crane-1", EntityKind::kCrane);
  crane.set_attribute("reach", 45.0);
  crane.set_attribute("key", std::string("abc"), Sensitivity::kCritical);
  return build_entity_graph({ship, crane}, {{"ship-1", "crane-1", "berthed-at"}});
}

EntityGraph random_graph(Rng& rng, std::size_t n_nodes) {
  std::vector<Entity> entities;
  for (std::size_t i = 0; i < n_nodes; ++i) {
    Entity e = make_entity("e-" + std::to_string(i),
                           i % 2 ? EntityKind::kIotSensor : EntityKind::kServer);
    const std::size_t attrs = 1 + rng.below(4);
    for (std::size_t a = 0; a < attrs; ++a) {
      e.set_attribute("a" + std::to_string(a), rng.uniform(-10, 10),
                      rng.below(3) == 0 ? Sensitivity::kCritical : Sensitivity::kPublic);
    }
    entities.push_back(std::move(e));
  }
  std::vector<Relation> relations;
  for (std::size_t i = 1; i < n_nodes; ++i) {
    relations.push_back({"e-" + std::to_string(rng.below(i)), "e-" + std::to_string(i), "link"});
  }
  return build_entity_graph(std::move(entities), std::move(relations));
}

}  // namespace

TEST_CASE("build_entity_graph minimal case") {
  EntityGraph g = small_port();
  CHECK(g.nodes().size() == 2);
  CHECK(g.edges().size() == 1);
  CHECK(g.nodes()[0].id == "crane-1");  // ordered by id
  CHECK(g.nodes()[1].id == "ship-1");
}

TEST_CASE("build_entity_graph with no relations keeps isolated nodes") {
  EntityGraph g = build_entity_graph(
      {make_entity("a", EntityKind::kGate), make_entity("b", EntityKind::kGateway)}, {});
  CHECK(g.nodes().size() == 2);
  CHECK(g.edges().empty());
}

TEST_CASE("build_entity_graph rejects bad specs") {
  CHECK_THROWS_WITH_AS(
      build_entity_graph({make_entity("ship-1", EntityKind::kShip),
                          make_entity("ship-1", EntityKind::kShip)},
                         {}),
      doctest::Contains("duplicate-id"), Error);
  CHECK_THROWS_WITH_AS(
      build_entity_graph({make_entity("a", EntityKind::kShip)}, {{"a", "ghost", "x"}}),
      doctest::Contains("dangling-endpoint"), Error);
  CHECK_THROWS_WITH_AS(
      build_entity_graph({make_entity("a", EntityKind::kShip)}, {{"a", "a", "x"}}),
      doctest::Contains("self-loop"), Error);
  CHECK_THROWS_WITH_AS(build_entity_graph({}, {}), doctest::Contains("empty-spec"), Error);
}

TEST_CASE("apply_telemetry updates only the addressed entity") {
  EntityGraph g = small_port();
  TelemetrySample s{"crane-1", 1.0, std::vector<double>(kDefaultFeatureDim, 2.5)};
  EntityGraph g2 = apply_telemetry(g, s);

  const Entity* crane = g2.find("crane-1");
  REQUIRE(crane != nullptr);
  const Attribute* t0 = crane->find_attribute("t0");
  REQUIRE(t0 != nullptr);
  CHECK(std::get<double>(t0->value) == 2.5);

  const Entity* ship = g2.find("ship-1");
  CHECK(ship->find_attribute("t0") == nullptr);
}

TEST_CASE("apply_telemetry last write wins") {
  EntityGraph g = small_port();
  TelemetrySample first{"crane-1", 1.0, std::vector<double>(kDefaultFeatureDim, 1.0)};
  TelemetrySample second{"crane-1", 2.0, std::vector<double>(kDefaultFeatureDim, 9.0)};
  EntityGraph g2 = apply_telemetry(apply_telemetry(g, first), second);
  CHECK(std::get<double>(g2.find("crane-1")->find_attribute("t7")->value) == 9.0);
}

TEST_CASE("apply_telemetry validates input") {
  EntityGraph g = small_port();
  TelemetrySample bad_len{"crane-1", 1.0, std::vector<double>(kDefaultFeatureDim - 1, 0.0)};
  CHECK_THROWS_WITH_AS(apply_telemetry(g, bad_len), doctest::Contains("length-mismatch"), Error);
  TelemetrySample bad_id{"ghost", 1.0, std::vector<double>(kDefaultFeatureDim, 0.0)};
  CHECK_THROWS_WITH_AS(apply_telemetry(g, bad_id), doctest::Contains("unknown-entity"), Error);
}

TEST_CASE("apply_telemetry never changes topology") {
  Rng rng(11);
  EntityGraph g = random_graph(rng, 6);
  TelemetrySample s{"e-3", 0.5, std::vector<double>(kDefaultFeatureDim, 1.0)};
  EntityGraph g2 = apply_telemetry(g, s);
  CHECK(g2.nodes().size() == g.nodes().size());
  REQUIRE(g2.edges().size() == g.edges().size());
  for (std::size_t i = 0; i < g.edges().size(); ++i) {
    CHECK(g2.edges()[i] == g.edges()[i]);
  }
}

TEST_CASE("graph_digest is deterministic and content sensitive") {
  EntityGraph g = small_port();
  CHECK(graph_digest(g) == graph_digest(g));

  EntityGraph g2 = small_port();
  GraphBuilder b(g2);
  b.graph().find_mutable("crane-1")->set_attribute("reach", 46.0);
  EntityGraph changed = b.finish();
  CHECK(graph_digest(changed) != graph_digest(g));
}

TEST_CASE("graph_digest ignores insertion order") {
  Entity a = make_entity("a", EntityKind::kShip);
  a.set_attribute("p", 1.0);
  a.set_attribute("q", 2.0);
  Entity b = make_entity("b", EntityKind::kCrane);

  Entity a_swapped = make_entity("a", EntityKind::kShip);
  a_swapped.set_attribute("q", 2.0);
  a_swapped.set_attribute("p", 1.0);

  EntityGraph g1 = build_entity_graph({a, b}, {{"a", "b", "x"}});
  EntityGraph g2 = build_entity_graph({b, a_swapped}, {{"a", "b", "x"}});
  CHECK(graph_digest(g1) == graph_digest(g2));
}

TEST_CASE("graph_digest detects any single attribute change") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    EntityGraph g = random_graph(rng, 5);
    std::string digest = graph_digest(g);

    const std::size_t node = rng.below(g.nodes().size());
    GraphBuilder b(g);
    Entity& e = b.nodes()[node];
    const std::size_t attr = rng.below(e.attributes.size());
    e.attributes[attr].value = std::get<double>(e.attributes[attr].value) + 1.0;
    CHECK(graph_digest(b.finish()) != digest);
  }
}

TEST_CASE("entity graph JSON round trip") {
  EntityGraph g = small_port();
  EntityGraph g2 = entity_graph_from_json(entity_graph_to_json(g));
  CHECK(graph_digest(g) == graph_digest(g2));
}

TEST_CASE("flow record JSON round trip") {
  FlowRecord r;
  r.id = 42;
  r.timestamp = 1.5;
  r.origin = Origin::kExternal;
  r.features = {1.0, 2.0};
  r.label = "ddos-udp";
  r.target = "crane-1";
  FlowRecord back = flow_from_json(flow_to_json(r));
  CHECK(back.id == r.id);
  CHECK(back.origin == Origin::kExternal);
  CHECK(back.features == r.features);
  CHECK(*back.label == "ddos-udp");
  CHECK(back.target == "crane-1");
}
