#include "xplore/overlap_index.hpp"

#include <algorithm>
#include <mutex>

#include "xplore/error.hpp"

namespace xplore {

OverlapIndex::OverlapIndex(const OverlapIndex& other) {
  std::shared_lock lock(other.mutex_);
  sets_ = other.sets_;
  overlaps_ = other.overlaps_;
}

OverlapIndex& OverlapIndex::operator=(const OverlapIndex& other) {
  if (this != &other) {
    std::shared_lock theirs(other.mutex_);
    std::unique_lock mine(mutex_);
    sets_ = other.sets_;
    overlaps_ = other.overlaps_;
  }
  return *this;
}

SetId OverlapIndex::register_set(EntitySet set) {
  std::unique_lock lock(mutex_);
  const auto id = static_cast<SetId>(sets_.size());
  for (SetId other = 0; other < id; ++other) {
    if (sets_[other].base_table() != set.base_table()) continue;
    overlaps_[{other, id}] = intersection_size(sets_[other], set);
  }
  overlaps_[{id, id}] = set.size();
  sets_.push_back(std::move(set));
  return id;
}

std::optional<SetId> OverlapIndex::find(const EntitySet& set) const {
  std::shared_lock lock(mutex_);
  for (SetId i = 0; i < sets_.size(); ++i) {
    if (sets_[i].same_members(set)) return i;
  }
  return std::nullopt;
}

void OverlapIndex::check(SetId id) const {
  if (id >= sets_.size()) throw Error(ErrorCode::UnknownSetId, "unknown set id " + std::to_string(id));
}

std::vector<OverlapHit> OverlapIndex::query_overlaps(SetId id, std::size_t min_overlap) const {
  if (min_overlap < 1) throw Error(ErrorCode::InvalidArgument, "min_overlap must be at least 1");
  std::shared_lock lock(mutex_);
  check(id);
  std::vector<OverlapHit> out;
  for (const auto& [key, n] : overlaps_) {
    if (key.first == key.second || n < min_overlap) continue;
    if (key.first == id) out.push_back({key.second, n});
    else if (key.second == id) out.push_back({key.first, n});
  }
  std::sort(out.begin(), out.end(), [](const OverlapHit& a, const OverlapHit& b) {
    return a.overlap != b.overlap ? a.overlap > b.overlap : a.id < b.id;
  });
  return out;
}

std::size_t OverlapIndex::overlap(SetId a, SetId b) const {
  std::shared_lock lock(mutex_);
  check(a);
  check(b);
  auto it = overlaps_.find(std::minmax(a, b));
  return it == overlaps_.end() ? 0 : it->second;
}

EntitySet OverlapIndex::set(SetId id) const {
  std::shared_lock lock(mutex_);
  check(id);
  return sets_[id];
}

std::size_t OverlapIndex::size() const {
  std::shared_lock lock(mutex_);
  return sets_.size();
}

}  // namespace xplore
