#include "xplore/entity_set.hpp"

#include <algorithm>
#include <iterator>

#include "xplore/error.hpp"

namespace xplore {

EntitySet::EntitySet(std::string base_table, std::vector<RowId> rows)
    : base_table_(std::move(base_table)), rows_(std::move(rows)) {
  if (!std::is_sorted(rows_.begin(), rows_.end())) std::sort(rows_.begin(), rows_.end());
  rows_.erase(std::unique(rows_.begin(), rows_.end()), rows_.end());
}

EntitySet EntitySet::full(const Table& table) {
  std::vector<RowId> rows(table.row_count());
  for (RowId r = 0; r < rows.size(); ++r) rows[r] = r;
  EntitySet s(table.name(), std::move(rows));
  s.provenance_ = Provenance{"", std::vector<Comparison>{}};
  return s;
}

EntitySet EntitySet::from_identifiers(const Table& table, std::span<const std::string> ids) {
  std::vector<RowId> rows;
  rows.reserve(ids.size());
  for (const auto& id : ids) {
    auto r = table.find_row(id);
    if (!r) throw Error(ErrorCode::InvalidArgument, "identifier '" + id + "' not in table " + table.name());
    rows.push_back(*r);
  }
  return EntitySet(table.name(), std::move(rows));
}

bool EntitySet::contains(RowId r) const { return std::binary_search(rows_.begin(), rows_.end(), r); }

std::vector<std::string> EntitySet::identifiers(const Table& table) const {
  std::vector<std::string> out;
  out.reserve(rows_.size());
  for (auto r : rows_) out.push_back(table.identifier_of(r));
  return out;
}

nlohmann::json EntitySet::to_json(const Catalog& catalog) const {
  nlohmann::json j{{"base_table", base_table_}, {"ids", identifiers(catalog.table(base_table_))}};
  j["label"] = label_ ? nlohmann::json(*label_) : nlohmann::json(nullptr);
  return j;
}

EntitySet EntitySet::from_json(const nlohmann::json& j, const Catalog& catalog) {
  if (!j.is_object() || !j.contains("base_table") || !j.contains("ids") || !j["ids"].is_array()) {
    throw Error(ErrorCode::SchemaViolation, "entity set needs base_table and ids");
  }
  const Table& t = catalog.table(j["base_table"].get<std::string>());
  auto ids = j["ids"].get<std::vector<std::string>>();
  EntitySet s = from_identifiers(t, ids);
  if (j.contains("label") && j["label"].is_string()) s.label_ = j["label"].get<std::string>();
  return s;
}

SetOp parse_set_op(std::string_view s) {
  if (s == "intersect") return SetOp::Intersect;
  if (s == "union") return SetOp::Union;
  if (s == "difference") return SetOp::Difference;
  throw Error(ErrorCode::InvalidArgument, "unknown set operation '" + std::string(s) + "'");
}

namespace {

void same_base(const EntitySet& a, const EntitySet& b) {
  if (a.base_table() != b.base_table()) {
    throw Error(ErrorCode::BaseTableMismatch,
                "sets over different tables: " + a.base_table() + " vs " + b.base_table());
  }
}

}  // namespace

EntitySet set_algebra(const EntitySet& a, const EntitySet& b, SetOp op) {
  same_base(a, b);
  std::vector<RowId> out;
  const auto& x = a.rows();
  const auto& y = b.rows();
  switch (op) {
    case SetOp::Intersect:
      std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out));
      break;
    case SetOp::Union:
      std::set_union(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out));
      break;
    case SetOp::Difference:
      std::set_difference(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out));
      break;
  }
  return EntitySet(a.base_table(), std::move(out));
}

std::size_t intersection_size(const EntitySet& a, const EntitySet& b) {
  same_base(a, b);
  std::size_t n = 0;
  auto i = a.rows().begin(), ie = a.rows().end();
  auto j = b.rows().begin(), je = b.rows().end();
  while (i != ie && j != je) {
    if (*i < *j) ++i;
    else if (*j < *i) ++j;
    else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

std::string_view rcc_name(RccRelation r) noexcept {
  switch (r) {
    case RccRelation::EQ: return "EQ";
    case RccRelation::DR: return "DR";
    case RccRelation::PO: return "PO";
    case RccRelation::PP: return "PP";
    case RccRelation::PPi: return "PPi";
  }
  return "EQ";
}

RccRelation rcc_relation(const EntitySet& a, const EntitySet& b) {
  const std::size_t common = intersection_size(a, b);
  const std::size_t na = a.size(), nb = b.size();
  if (common == na && common == nb) return RccRelation::EQ;
  // The empty set is disjoint from everything but itself.
  if (common == 0) return RccRelation::DR;
  if (common == na) return RccRelation::PP;
  if (common == nb) return RccRelation::PPi;
  return RccRelation::PO;
}

double jaccard(const EntitySet& a, const EntitySet& b) {
  const std::size_t common = intersection_size(a, b);
  const std::size_t uni = a.size() + b.size() - common;
  if (uni == 0) throw Error(ErrorCode::BothEmpty, "jaccard of two empty sets is undefined");
  return static_cast<double>(common) / static_cast<double>(uni);
}

}  // namespace xplore
