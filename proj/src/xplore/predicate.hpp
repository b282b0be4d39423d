#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "xplore/value.hpp"

namespace xplore {

class Table;

struct ColumnRef {
  std::string table;
  std::string column;

  auto operator<=>(const ColumnRef&) const = default;
  std::string qualified() const { return table + "." + column; }
};

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge, Contains };

std::string_view compare_op_symbol(CompareOp op) noexcept;  // "=", "!=", "<", ...
CompareOp parse_compare_op(std::string_view s);              // throws InvalidArgument

using Literal = std::variant<double, std::string>;

struct Comparison {
  ColumnRef column;
  CompareOp op = CompareOp::Eq;
  Literal value;

  bool operator==(const Comparison&) const = default;
};

// Missing cells never satisfy a comparison.
bool evaluate(const Cell& cell, CompareOp op, const Literal& value) noexcept;

// Throws TypeMismatch when the literal does not fit the column kind.
void check_literal(const Table& table, const Comparison& cmp);

nlohmann::json literal_to_json(const Literal& v);
Literal literal_from_json(const nlohmann::json& j);
nlohmann::json comparison_to_json(const Comparison& c);
Comparison comparison_from_json(const nlohmann::json& j);

}  // namespace xplore
