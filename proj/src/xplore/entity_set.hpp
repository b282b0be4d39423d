#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "xplore/catalog.hpp"
#include "xplore/predicate.hpp"

namespace xplore {

// Where a set came from. `filter`, when present, reproduces the set as a
// conjunctive predicate over the full base table.
struct Provenance {
  std::string step_id;
  std::optional<std::vector<Comparison>> filter;

  bool operator==(const Provenance&) const = default;
};

// Rows of one base table, held as row ordinals in ascending order. Identifier
// order is therefore the table's ingest order.
class EntitySet {
 public:
  EntitySet() = default;
  EntitySet(std::string base_table, std::vector<RowId> rows);  // sorts and deduplicates

  static EntitySet full(const Table& table);
  // Throws InvalidArgument when an identifier is absent from the table.
  static EntitySet from_identifiers(const Table& table, std::span<const std::string> ids);

  const std::string& base_table() const noexcept { return base_table_; }
  const std::vector<RowId>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }
  bool contains(RowId r) const;

  const std::optional<std::string>& label() const noexcept { return label_; }
  void set_label(std::optional<std::string> label) { label_ = std::move(label); }
  const std::optional<Provenance>& provenance() const noexcept { return provenance_; }
  void set_provenance(std::optional<Provenance> p) { provenance_ = std::move(p); }

  std::vector<std::string> identifiers(const Table& table) const;

  // Membership equality; labels and provenance are annotations.
  bool same_members(const EntitySet& other) const {
    return base_table_ == other.base_table_ && rows_ == other.rows_;
  }

  // {base_table, label, ids:[...]}
  nlohmann::json to_json(const Catalog& catalog) const;
  static EntitySet from_json(const nlohmann::json& j, const Catalog& catalog);

 private:
  std::string base_table_;
  std::vector<RowId> rows_;
  std::optional<std::string> label_;
  std::optional<Provenance> provenance_;
};

enum class SetOp { Intersect, Union, Difference };
SetOp parse_set_op(std::string_view s);

EntitySet set_algebra(const EntitySet& a, const EntitySet& b, SetOp op);

std::size_t intersection_size(const EntitySet& a, const EntitySet& b);

enum class RccRelation { EQ, DR, PO, PP, PPi };
std::string_view rcc_name(RccRelation r) noexcept;

// RCC-5 over finite sets. Two empty sets are EQ; empty vs non-empty is PP.
RccRelation rcc_relation(const EntitySet& a, const EntitySet& b);

double jaccard(const EntitySet& a, const EntitySet& b);

}  // namespace xplore
