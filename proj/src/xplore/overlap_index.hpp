#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <utility>
#include <vector>

#include "xplore/entity_set.hpp"

namespace xplore {

using SetId = std::uint32_t;

struct OverlapHit {
  SetId id = 0;
  std::size_t overlap = 0;
  bool operator==(const OverlapHit&) const = default;
};

// Pairwise intersection sizes between registered sets of the same base table,
// maintained eagerly on registration. Many readers or one writer.
class OverlapIndex {
 public:
  OverlapIndex() = default;
  OverlapIndex(const OverlapIndex& other);
  OverlapIndex& operator=(const OverlapIndex& other);

  SetId register_set(EntitySet set);
  // Existing registration with identical members, if any.
  std::optional<SetId> find(const EntitySet& set) const;

  // Entries with overlap >= min_overlap, overlap descending then id ascending;
  // the queried set is excluded.
  std::vector<OverlapHit> query_overlaps(SetId id, std::size_t min_overlap) const;

  std::size_t overlap(SetId a, SetId b) const;  // diagonal = cardinality; 0 across tables
  EntitySet set(SetId id) const;
  std::size_t size() const;

 private:
  void check(SetId id) const;

  mutable std::shared_mutex mutex_;
  std::vector<EntitySet> sets_;
  std::map<std::pair<SetId, SetId>, std::size_t> overlaps_;  // key: (low, high)
};

}  // namespace xplore
