#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <unistd.h>
#include <fstream>
#include <set>

#include "twinpot/autocm.hpp"
#include "twinpot/dataset.hpp"
#include "twinpot/errors.hpp"
#include "twinpot/experiments.hpp"

using namespace twinpot;
using namespace twinpot::dataset;
using seaport::FlowRecord;
using seaport::Origin;

namespace {

struct TempCsv {
  std::string path;
  explicit TempCsv(const std::string& content) {
    path = std::string("/tmp/twinpot_test_") + std::to_string(::getpid()) + "_" +
           std::to_string(counter()++) + ".csv";
    std::ofstream out(path);
    out << content;
  }
  ~TempCsv() { std::remove(path.c_str()); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string clean_csv(std::size_t rows) {
  std::string text = "f0,f1,f2,label\n";
  for (std::size_t i = 0; i < rows; ++i) {
    text += std::to_string(i) + ",1.5,2.5," + (i % 2 ? "attack-x" : "normal") + "\n";
  }
  return text;
}

}  // namespace

TEST_CASE("load_flow_csv parses a clean file completely") {
  TempCsv file(clean_csv(100));
  SchemaMap schema;
  schema.label_column = "label";
  schema.feature_columns = {"f0", "f1", "f2"};
  LoadResult result = load_flow_csv(file.path, schema, Origin::kInternal, 8);
  CHECK(result.records.size() == 100);
  CHECK(result.report.parsed == 100);
  CHECK(result.report.skipped == 0);
  CHECK(result.records[0].features.size() == 8);
  CHECK(result.records[0].features[1] == 1.5);
  CHECK(result.records[0].features[3] == 0.0);  // padded
  CHECK(*result.records[1].label == "attack-x");
  CHECK(result.records[0].origin == Origin::kInternal);
}

TEST_CASE("load_flow_csv counts and skips malformed rows") {
  std::string text = clean_csv(10);
  text += "not-a-number,1.0,2.0,normal\n";
  text += "3.0,1.0\n";       // short row
  text += "4.0,1.0,2.0,\n";  // empty label
  TempCsv file(text);
  SchemaMap schema;
  schema.label_column = "label";
  schema.feature_columns = {"f0", "f1", "f2"};
  LoadResult result = load_flow_csv(file.path, schema, Origin::kExternal, 4);
  CHECK(result.records.size() == 10);
  CHECK(result.report.skipped == 3);
}

TEST_CASE("load_flow_csv schema errors") {
  TempCsv file(clean_csv(5));
  SchemaMap missing_label;
  missing_label.label_column = "ground_truth";
  missing_label.feature_columns = {"f0"};
  CHECK_THROWS_WITH_AS(load_flow_csv(file.path, missing_label, Origin::kInternal, 4),
                       doctest::Contains("missing-column"), Error);

  TempCsv empty("f0,label\n");
  SchemaMap schema;
  schema.label_column = "label";
  schema.feature_columns = {"f0"};
  CHECK_THROWS_WITH_AS(load_flow_csv(empty.path, schema, Origin::kInternal, 4),
                       doctest::Contains("no-rows"), Error);

  CHECK_THROWS_WITH_AS(load_flow_csv("/nonexistent/file.csv", schema, Origin::kInternal, 4),
                       doctest::Contains("file-not-found"), Error);
}

TEST_CASE("load_flow_csv optional z-normalization") {
  TempCsv file("f0,label\n10,normal\n20,normal\n30,attack\n40,attack\n");
  SchemaMap schema;
  schema.label_column = "label";
  schema.feature_columns = {"f0"};
  schema.znormalize = true;
  LoadResult result = load_flow_csv(file.path, schema, Origin::kInternal, 2);
  double mean = 0.0;
  for (const auto& r : result.records) mean += r.features[0];
  CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("synth_flows is seed-deterministic with exact class counts") {
  GeneratorSpec spec;
  spec.classes = {{"normal", 40}, {"ddos-udp", 25}};
  spec.noise_dims = 2;
  auto a = synth_flows(spec, Origin::kInternal, 5);
  auto b = synth_flows(spec, Origin::kInternal, 5);
  auto c = synth_flows(spec, Origin::kInternal, 6);
  REQUIRE(a.size() == 65);
  CHECK(std::equal(a.begin(), a.end(), b.begin(), [](const FlowRecord& x, const FlowRecord& y) {
    return x.features == y.features && x.label == y.label;
  }));
  CHECK(a[0].features != c[0].features);
  std::size_t normals = 0;
  for (const auto& r : a) {
    if (*r.label == "normal") ++normals;
  }
  CHECK(normals == 40);
}

TEST_CASE("5-sigma separated synthetic data trains a high-sensitivity LR") {
  GeneratorSpec spec;
  spec.classes = {{"normal", 400}, {"ddos-udp", 400}};
  spec.separation = 5.0;
  spec.noise_dims = 2;
  auto data = synth_flows(spec, Origin::kInternal, 77);
  ml::MethodSpec lr{6, ml::Kind::kLR, {}};
  auto eval = autocm::train_and_evaluate(lr, data, 3, autocm::TimingMode::kVirtual);
  double sensitivity = static_cast<double>(eval.metrics.tp) /
                       static_cast<double>(eval.metrics.tp + eval.metrics.fn);
  CHECK(sensitivity >= 0.99);
}

TEST_CASE("zero separation yields prior-level lambda") {
  GeneratorSpec spec;
  spec.classes = {{"normal", 300}, {"ddos-udp", 300}};
  spec.separation = 0.0;
  spec.noise_dims = 8;
  spec.feature_dim = 8;
  auto data = synth_flows(spec, Origin::kInternal, 88);
  ml::Hyperparameters hp;
  ml::MethodSpec knn{2, ml::Kind::kKNN, hp};
  auto eval = autocm::train_and_evaluate(knn, data, 4, autocm::TimingMode::kVirtual);
  double lambda = autocm::lambda_score(eval.metrics);
  CHECK(lambda >= 0.3);
  CHECK(lambda <= 0.7);
}

TEST_CASE("synth_flows rejects a degenerate covariance") {
  GeneratorSpec spec;
  spec.classes = {{"normal", 5}};
  spec.sigma = 0.0;
  CHECK_THROWS_WITH_AS(synth_flows(spec, Origin::kInternal, 1),
                       doctest::Contains("degenerate-covariance"), Error);
}

TEST_CASE("spread_manifest partitions totals exactly") {
  auto manifest = spread_manifest(experiments::default_internal_attack_types(), 5000);
  REQUIRE(manifest.size() == 12);
  std::size_t total = 0;
  for (const auto& c : manifest) {
    CHECK(c.count >= 1);
    total += c.count;
  }
  CHECK(total == 5000);
}

TEST_CASE("compose_internal_dataset hits the paper counts exactly") {
  auto types = experiments::default_internal_attack_types();
  auto manifest = spread_manifest(types, 5000);

  GeneratorSpec attack_spec;
  attack_spec.classes = manifest;
  attack_spec.noise_dims = 12;
  auto attack_pool = synth_flows(attack_spec, Origin::kInternal, 1);

  GeneratorSpec normal_spec;
  normal_spec.classes = {{"normal", 15000}};
  normal_spec.noise_dims = 12;
  auto normal_pool = synth_flows(normal_spec, Origin::kInternal, 2);

  auto ship_pool = experiments::make_ship_flow_pool(20000, Origin::kInternal, 16, 3);

  ComposedDataset composed =
      compose_internal_dataset(attack_pool, normal_pool, ship_pool, manifest, 9);
  CHECK(composed.records.size() == 40000);
  CHECK(composed.count_source("attack-source") == 5000);
  CHECK(composed.count_source("normal-source") == 15000);
  CHECK(composed.count_source("shipgen") == 20000);

  // attack fraction 0.125, per-type counts match the manifest, origins intact
  std::map<std::string, std::size_t> per_type;
  std::size_t attacks = 0;
  for (const auto& t : composed.records) {
    CHECK(t.record.origin == Origin::kInternal);
    REQUIRE(t.record.label.has_value());
    if (seaport::is_attack_label(*t.record.label)) {
      ++attacks;
      ++per_type[*t.record.label];
    }
  }
  CHECK(attacks == 5000);
  for (const auto& c : manifest) {
    CHECK(per_type[c.label] == c.count);
  }

  // deterministic
  ComposedDataset again =
      compose_internal_dataset(attack_pool, normal_pool, ship_pool, manifest, 9);
  CHECK(composed_to_csv(composed, 16) == composed_to_csv(again, 16));
}

TEST_CASE("compose_external_dataset hits the paper counts exactly") {
  auto types = experiments::default_external_attack_types();
  auto manifest = spread_manifest(types, 2000);

  GeneratorSpec attack_spec;
  attack_spec.classes = manifest;
  attack_spec.noise_dims = 9;
  auto attack_pool = synth_flows(attack_spec, Origin::kExternal, 4);

  GeneratorSpec normal_spec;
  normal_spec.classes = {{"normal", 6000}};
  normal_spec.noise_dims = 9;
  auto normal_pool = synth_flows(normal_spec, Origin::kExternal, 5);

  auto ship_pool = experiments::make_ship_flow_pool(8000, Origin::kExternal, 16, 6);

  ComposedDataset composed =
      compose_external_dataset(attack_pool, normal_pool, ship_pool, manifest, 10);
  CHECK(composed.records.size() == 16000);
  CHECK(composed.count_source("attack-source") == 2000);
  CHECK(composed.count_source("normal-source") == 6000);
  CHECK(composed.count_source("shipgen") == 8000);
  for (const auto& t : composed.records) CHECK(t.record.origin == Origin::kExternal);
}

TEST_CASE("compose rejects insufficient pools") {
  auto manifest = spread_manifest({"a", "b"}, 100);
  GeneratorSpec attack_spec;
  attack_spec.classes = {{"a", 30}, {"b", 50}};  // 'a' has too few rows
  auto attack_pool = synth_flows(attack_spec, Origin::kInternal, 1);
  GeneratorSpec normal_spec;
  normal_spec.classes = {{"normal", 200}};
  auto normal_pool = synth_flows(normal_spec, Origin::kInternal, 2);
  auto ship_pool = experiments::make_ship_flow_pool(150, Origin::kInternal, 16, 3);

  ComposeCounts counts{100, 150, 120};
  CHECK_THROWS_WITH_AS(
      compose_internal_dataset(attack_pool, normal_pool, ship_pool, manifest, 1, counts),
      doctest::Contains("insufficient-data"), Error);
}

TEST_CASE("composed CSV cache has the documented column layout") {
  GeneratorSpec attack_spec;
  attack_spec.classes = {{"ddos-udp", 4}};
  auto attack_pool = synth_flows(attack_spec, Origin::kInternal, 1);
  GeneratorSpec normal_spec;
  normal_spec.classes = {{"normal", 4}};
  auto normal_pool = synth_flows(normal_spec, Origin::kInternal, 2);
  auto ship_pool = experiments::make_ship_flow_pool(4, Origin::kInternal, 16, 3);

  ComposedDataset composed = compose_internal_dataset(
      attack_pool, normal_pool, ship_pool, {{"ddos-udp", 4}}, 1, ComposeCounts{4, 4, 4});
  std::string csv = composed_to_csv(composed, 16);
  CHECK(csv.rfind("flow_id,t,origin,f0,", 0) == 0);
  CHECK(csv.find(",label,source") != std::string::npos);
  CHECK(csv.find("shipgen") != std::string::npos);
  std::size_t lines = 0;
  for (char c : csv) {
    if (c == '\n') ++lines;
  }
  CHECK(lines == 13);  // header + 12 records
}
