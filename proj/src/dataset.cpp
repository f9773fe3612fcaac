#include "twinpot/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "twinpot/errors.hpp"
#include "twinpot/hash.hpp"
#include "twinpot/rng.hpp"

namespace twinpot::dataset {

using seaport::FlowRecord;
using seaport::Origin;

namespace {

std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == delimiter) {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  cells.push_back(cell);
  return cells;
}

}  // namespace

LoadResult load_flow_csv(const std::string& path, const SchemaMap& schema, Origin origin,
                         std::size_t feature_dim) {
  std::ifstream in(path);
  if (!in) throw Error("file-not-found", "cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw Error("no-rows", "'" + path + "' has no header row");
  std::vector<std::string> header = split_line(line, schema.delimiter);

  auto column_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<long>(i);
    }
    return -1L;
  };

  long label_col = -1;
  if (!schema.label_column.empty()) {
    label_col = column_of(schema.label_column);
    if (label_col < 0) {
      throw Error("missing-column", "label column '" + schema.label_column + "' not in header");
    }
  }
  std::vector<long> feature_cols;
  for (const auto& name : schema.feature_columns) {
    long c = column_of(name);
    if (c < 0) throw Error("missing-column", "feature column '" + name + "' not in header");
    feature_cols.push_back(c);
  }

  LoadResult out;
  std::uint64_t next_id = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells = split_line(line, schema.delimiter);
    bool ok = cells.size() >= header.size();
    FlowRecord r;
    r.id = next_id;
    r.timestamp = static_cast<double>(out.report.parsed);
    r.origin = origin;
    r.features.assign(feature_dim, 0.0);
    if (ok) {
      for (std::size_t i = 0; i < feature_cols.size() && i < feature_dim; ++i) {
        try {
          std::size_t pos = 0;
          const std::string& cell = cells[static_cast<std::size_t>(feature_cols[i])];
          r.features[i] = std::stod(cell, &pos);
          if (pos != cell.size()) ok = false;
        } catch (const std::exception&) {
          ok = false;
        }
      }
      if (ok && label_col >= 0) {
        const std::string& label = cells[static_cast<std::size_t>(label_col)];
        if (label.empty()) {
          ok = false;
        } else {
          r.label = label;
        }
      }
    }
    if (!ok) {
      ++out.report.skipped;
      continue;
    }
    ++next_id;
    ++out.report.parsed;
    out.records.push_back(std::move(r));
  }
  if (out.records.empty()) throw Error("no-rows", "'" + path + "' has zero parseable rows");

  if (schema.znormalize) {
    const std::size_t used = std::min(feature_cols.size(), feature_dim);
    std::vector<double> mean(used, 0.0), sd(used, 1.0);
    for (const auto& r : out.records) {
      for (std::size_t i = 0; i < used; ++i) mean[i] += r.features[i];
    }
    for (auto& m : mean) m /= static_cast<double>(out.records.size());
    std::vector<double> var(used, 0.0);
    for (const auto& r : out.records) {
      for (std::size_t i = 0; i < used; ++i) {
        double d = r.features[i] - mean[i];
        var[i] += d * d;
      }
    }
    for (std::size_t i = 0; i < used; ++i) {
      double s = std::sqrt(var[i] / static_cast<double>(out.records.size()));
      sd[i] = s < 1e-12 ? 1.0 : s;
    }
    for (auto& r : out.records) {
      for (std::size_t i = 0; i < used; ++i) r.features[i] = (r.features[i] - mean[i]) / sd[i];
    }
  }
  return out;
}

std::vector<FlowRecord> synth_flows(const GeneratorSpec& spec, Origin origin,
                                    std::uint64_t seed) {
  if (spec.sigma <= 0.0) throw Error("degenerate-covariance", "sigma must be positive");
  const std::size_t noisy =
      spec.noise_dims == 0 ? spec.feature_dim : std::min(spec.noise_dims, spec.feature_dim);
  std::vector<FlowRecord> out;
  std::uint64_t next_id = 0;
  std::size_t class_index = 0;
  for (const auto& cls : spec.classes) {
    Rng rng(derive_seed(seed, "synth/" + cls.label));
    const std::size_t axis =
        spec.feature_dim ? (spec.axis_offset + class_index) % spec.feature_dim : 0;
    const bool is_normal = cls.label == seaport::kNormalLabel;
    for (std::size_t i = 0; i < cls.count; ++i) {
      FlowRecord r;
      r.id = next_id++;
      r.timestamp = static_cast<double>(i);
      r.origin = origin;
      r.label = cls.label;
      r.features.assign(spec.feature_dim, 0.0);
      for (std::size_t d = 0; d < noisy; ++d) r.features[d] = rng.normal() * spec.sigma;
      if (!is_normal) {
        r.features[axis] += spec.separation * spec.sigma;
      }
      if (!spec.targets.empty()) {
        r.target = spec.targets[i % spec.targets.size()];
      }
      out.push_back(std::move(r));
    }
    ++class_index;
  }
  return out;
}

std::size_t ComposedDataset::count_source(const std::string& source) const {
  std::size_t n = 0;
  for (const auto& t : records) {
    if (t.source == source) ++n;
  }
  return n;
}

std::vector<ClassSpec> spread_manifest(const std::vector<std::string>& labels,
                                       std::size_t total) {
  std::vector<ClassSpec> manifest;
  if (labels.empty()) return manifest;
  const std::size_t base = total / labels.size();
  std::size_t remainder = total - base * labels.size();
  for (const auto& label : labels) {
    std::size_t extra = remainder > 0 ? 1 : 0;
    if (remainder > 0) --remainder;
    manifest.push_back(ClassSpec{label, base + extra});
  }
  return manifest;
}

namespace {

void draw_labeled(std::vector<TaggedRecord>& out, const std::vector<FlowRecord>& pool,
                  const std::string& label, std::size_t count, Origin origin,
                  const std::string& source, std::uint64_t seed) {
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].label && *pool[i].label == label) candidates.push_back(i);
  }
  if (candidates.size() < count) {
    throw Error("insufficient-data", "need " + std::to_string(count) + " '" + label +
                                         "' records, pool has " +
                                         std::to_string(candidates.size()));
  }
  Rng rng(derive_seed(seed, "compose/" + source + "/" + label));
  for (std::size_t pick : sample_without_replacement(candidates.size(), count, rng)) {
    const FlowRecord& r = pool[candidates[pick]];
    if (r.origin != origin) {
      throw Error("wrong-origin", "pool record origin does not match the dataset origin");
    }
    out.push_back(TaggedRecord{r, source});
  }
}

ComposedDataset compose(const std::vector<FlowRecord>& attack_pool,
                        const std::vector<FlowRecord>& normal_pool,
                        const std::vector<FlowRecord>& ship_pool,
                        const std::vector<ClassSpec>& attack_manifest, Origin origin,
                        std::uint64_t seed, const ComposeCounts& counts) {
  std::size_t manifest_total = 0;
  for (const auto& c : attack_manifest) manifest_total += c.count;
  if (manifest_total != counts.attack_total) {
    throw Error("manifest-mismatch", "attack manifest sums to " +
                                         std::to_string(manifest_total) + ", expected " +
                                         std::to_string(counts.attack_total));
  }

  ComposedDataset out;
  out.records.reserve(counts.attack_total + counts.normal_total + counts.ship_total);
  for (const auto& c : attack_manifest) {
    draw_labeled(out.records, attack_pool, c.label, c.count, origin, "attack-source", seed);
  }
  draw_labeled(out.records, normal_pool, seaport::kNormalLabel, counts.normal_total, origin,
               "normal-source", seed);

  if (ship_pool.size() < counts.ship_total) {
    throw Error("insufficient-data", "need " + std::to_string(counts.ship_total) +
                                         " ship telemetry records, pool has " +
                                         std::to_string(ship_pool.size()));
  }
  for (std::size_t i = 0; i < counts.ship_total; ++i) {
    const FlowRecord& r = ship_pool[i];
    if (r.origin != origin) {
      throw Error("wrong-origin", "ship telemetry origin does not match the dataset origin");
    }
    TaggedRecord t{r, "shipgen"};
    t.record.label = seaport::kNormalLabel;  // motion telemetry is benign background
    out.records.push_back(std::move(t));
  }

  // Stable ids over the composed order.
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    out.records[i].record.id = i;
  }
  return out;
}

}  // namespace

ComposedDataset compose_internal_dataset(const std::vector<FlowRecord>& attack_pool,
                                         const std::vector<FlowRecord>& normal_pool,
                                         const std::vector<FlowRecord>& ship_pool,
                                         const std::vector<ClassSpec>& attack_manifest,
                                         std::uint64_t seed, const ComposeCounts& counts) {
  return compose(attack_pool, normal_pool, ship_pool, attack_manifest, Origin::kInternal, seed,
                 counts);
}

ComposedDataset compose_external_dataset(const std::vector<FlowRecord>& attack_pool,
                                         const std::vector<FlowRecord>& normal_pool,
                                         const std::vector<FlowRecord>& ship_pool,
                                         const std::vector<ClassSpec>& attack_manifest,
                                         std::uint64_t seed, const ComposeCounts& counts) {
  return compose(attack_pool, normal_pool, ship_pool, attack_manifest, Origin::kExternal, seed,
                 counts);
}

std::string composed_to_csv(const ComposedDataset& dataset, std::size_t feature_dim) {
  std::string out = "flow_id,t,origin";
  for (std::size_t i = 0; i < feature_dim; ++i) out += ",f" + std::to_string(i);
  out += ",label,source\n";
  char buf[64];
  for (const auto& t : dataset.records) {
    const FlowRecord& r = t.record;
    out += std::to_string(r.id);
    std::snprintf(buf, sizeof buf, ",%.12g,", r.timestamp);
    out += buf;
    out += seaport::origin_name(r.origin);
    for (std::size_t i = 0; i < feature_dim; ++i) {
      std::snprintf(buf, sizeof buf, ",%.12g", i < r.features.size() ? r.features[i] : 0.0);
      out += buf;
    }
    out += ",";
    out += r.label ? *r.label : "";
    out += ",";
    out += t.source;
    out += "\n";
  }
  return out;
}

}  // namespace twinpot::dataset
