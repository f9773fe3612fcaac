#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twinpot/seaport.hpp"

namespace twinpot::dataset {

struct SchemaMap {
  std::string label_column;                  // empty loads unlabeled records
  std::vector<std::string> feature_columns;  // projected down/padded to F
  bool znormalize = false;                   // per selected column
  char delimiter = ',';
};

struct LoadReport {
  std::size_t parsed = 0;
  std::size_t skipped = 0;
};

struct LoadResult {
  std::vector<seaport::FlowRecord> records;
  LoadReport report;
};

// Header row required; malformed rows are counted and skipped. Errors:
// missing-column, no-rows, file-not-found.
LoadResult load_flow_csv(const std::string& path, const SchemaMap& schema,
                         seaport::Origin origin,
                         std::size_t feature_dim = seaport::kDefaultFeatureDim);

struct ClassSpec {
  std::string label;  // "normal" or an attack type name
  std::size_t count = 0;
};

// Per-class Gaussian clusters: class k centers at separation*sigma along
// feature axis (axis_offset + k) mod F. Noise is carried by the first
// noise_dims axes (all of them when 0); the remaining features stay zero so
// distances concentrate on the informative axes.
struct GeneratorSpec {
  std::vector<ClassSpec> classes;
  double separation = 5.0;
  double sigma = 1.0;
  std::size_t feature_dim = seaport::kDefaultFeatureDim;
  std::size_t axis_offset = 0;
  std::size_t noise_dims = 0;
  std::vector<std::string> targets;  // optional entity ids, assigned round-robin
};

std::vector<seaport::FlowRecord> synth_flows(const GeneratorSpec& spec, seaport::Origin origin,
                                             std::uint64_t seed);

struct TaggedRecord {
  seaport::FlowRecord record;
  std::string source;  // provenance tag
};

struct ComposedDataset {
  std::vector<TaggedRecord> records;  // ordered by (source block, draw index)

  std::size_t count_source(const std::string& source) const;
};

struct ComposeCounts {
  std::size_t attack_total = 0;
  std::size_t normal_total = 0;
  std::size_t ship_total = 0;
};

inline ComposeCounts internal_default_counts() { return {5000, 15000, 20000}; }
inline ComposeCounts external_default_counts() { return {2000, 6000, 8000}; }

// Equal split with largest-remainder rounding; sums to total exactly.
std::vector<ClassSpec> spread_manifest(const std::vector<std::string>& labels,
                                       std::size_t total);

// Seeded draws of exact per-class counts from the pools; origin enforced.
// Errors: insufficient-data, wrong-origin.
ComposedDataset compose_internal_dataset(const std::vector<seaport::FlowRecord>& attack_pool,
                                         const std::vector<seaport::FlowRecord>& normal_pool,
                                         const std::vector<seaport::FlowRecord>& ship_pool,
                                         const std::vector<ClassSpec>& attack_manifest,
                                         std::uint64_t seed,
                                         const ComposeCounts& counts = internal_default_counts());

ComposedDataset compose_external_dataset(const std::vector<seaport::FlowRecord>& attack_pool,
                                         const std::vector<seaport::FlowRecord>& normal_pool,
                                         const std::vector<seaport::FlowRecord>& ship_pool,
                                         const std::vector<ClassSpec>& attack_manifest,
                                         std::uint64_t seed,
                                         const ComposeCounts& counts = external_default_counts());

// Cache CSV: flow_id,t,origin,f0..f(F-1),label,source.
std::string composed_to_csv(const ComposedDataset& dataset, std::size_t feature_dim);

}  // namespace twinpot::dataset
