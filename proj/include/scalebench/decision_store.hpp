#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scalebench/canonical.hpp"

namespace scalebench {

struct RunRecord;

constexpr int kDecisionStoreVersion = 1;
constexpr std::size_t kFeatureDim = 3;
using FeatureVector = std::array<double, kFeatureDim>;

// Feature layout (store version 1): demand as a fraction of cluster capacity,
// skew level of the dominant subclass (0 low, 1 high), cumulative shuffle
// volume as log10(1 + GiB) / 4.
FeatureVector decision_features(int demand_slots, int capacity_slots, bool high_skew,
                                std::uint64_t shuffled_bytes);

struct DecisionEntry {
  std::string id;
  std::string subclass_id;
  FeatureVector features{};
  int target_executors = 0;
  double cost_delta = 0.0;  // dollars accrued until the next decision
  bool sla_ok = false;
  std::string source_run;

  friend bool operator==(const DecisionEntry&, const DecisionEntry&) = default;
};

Json to_json(const DecisionEntry& e);
DecisionEntry decision_from_json(const Json& j);

struct HistoryQuery {
  std::string subclass_id;  // ranks same-subclass entries first among equal distances
  FeatureVector features{};
};

// Append-only file of decision entries with an in-memory index rebuilt on open.
// Without a path the store lives in memory only.
class DecisionStore {
 public:
  DecisionStore() = default;
  explicit DecisionStore(std::filesystem::path path);

  // One entry per recorded decision; re-ingesting a run id adds nothing.
  // Corrupt records are rejected before anything is written.
  std::size_t ingest(const RunRecord& record);

  std::vector<DecisionEntry> query(const HistoryQuery& query, int k) const;

  const std::vector<DecisionEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool has_run(const std::string& run_id) const { return runs_.count(run_id) != 0; }

  // One JSON entry per line, in ingestion order.
  std::string export_ndjson() const;

 private:
  void load();
  void append_to_file(const std::vector<Json>& lines) const;

  std::optional<std::filesystem::path> path_;
  std::vector<DecisionEntry> entries_;
  std::set<std::string> ids_;
  std::set<std::string> runs_;
};

}  // namespace scalebench
