#include "xplore/predicate.hpp"

#include "xplore/catalog.hpp"
#include "xplore/error.hpp"

namespace xplore {

std::string_view compare_op_symbol(CompareOp op) noexcept {
  switch (op) {
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "!=";
    case CompareOp::Lt: return "<";
    case CompareOp::Le: return "<=";
    case CompareOp::Gt: return ">";
    case CompareOp::Ge: return ">=";
    case CompareOp::Contains: return "contains";
  }
  return "=";
}

CompareOp parse_compare_op(std::string_view s) {
  if (s == "=" || s == "==") return CompareOp::Eq;
  if (s == "!=" || s == "<>" || s == "\xE2\x89\xA0") return CompareOp::Ne;
  if (s == "<") return CompareOp::Lt;
  if (s == "<=" || s == "\xE2\x89\xA4") return CompareOp::Le;
  if (s == ">") return CompareOp::Gt;
  if (s == ">=" || s == "\xE2\x89\xA5") return CompareOp::Ge;
  if (s == "contains") return CompareOp::Contains;
  throw Error(ErrorCode::InvalidArgument, "unknown comparison operator '" + std::string(s) + "'");
}

namespace {

template <class T>
bool ordered(const T& a, CompareOp op, const T& b) {
  switch (op) {
    case CompareOp::Eq: return a == b;
    case CompareOp::Ne: return a != b;
    case CompareOp::Lt: return a < b;
    case CompareOp::Le: return a <= b;
    case CompareOp::Gt: return a > b;
    case CompareOp::Ge: return a >= b;
    case CompareOp::Contains: return false;
  }
  return false;
}

}  // namespace

bool evaluate(const Cell& cell, CompareOp op, const Literal& value) noexcept {
  if (is_missing(cell)) return false;
  if (const auto* d = std::get_if<double>(&cell)) {
    const auto* v = std::get_if<double>(&value);
    return v != nullptr && ordered(*d, op, *v);
  }
  const auto& s = std::get<std::string>(cell);
  const auto* v = std::get_if<std::string>(&value);
  if (v == nullptr) return false;
  if (op == CompareOp::Contains) return s.find(*v) != std::string::npos;
  return ordered(s, op, *v);
}

void check_literal(const Table& table, const Comparison& cmp) {
  const auto& col = table.columns()[table.column_index(cmp.column.column)];
  const bool numeric_literal = std::holds_alternative<double>(cmp.value);
  if (col.kind == ColumnKind::Numeric) {
    if (!numeric_literal) {
      throw Error(ErrorCode::TypeMismatch, "numeric column " + cmp.column.qualified() + " compared with a string");
    }
    if (cmp.op == CompareOp::Contains) {
      throw Error(ErrorCode::TypeMismatch, "'contains' needs a string column, " + cmp.column.qualified() + " is numeric");
    }
  } else if (numeric_literal) {
    throw Error(ErrorCode::TypeMismatch, "string column " + cmp.column.qualified() + " compared with a number");
  }
}

nlohmann::json literal_to_json(const Literal& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::get<std::string>(v);
}

Literal literal_from_json(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw Error(ErrorCode::SchemaViolation, "literal must be a number or a string");
}

nlohmann::json comparison_to_json(const Comparison& c) {
  return {{"table", c.column.table},
          {"attribute", c.column.column},
          {"op", compare_op_symbol(c.op)},
          {"value", literal_to_json(c.value)}};
}

Comparison comparison_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("attribute") || !j.contains("op") || !j.contains("value")) {
    throw Error(ErrorCode::SchemaViolation, "comparison needs attribute, op and value");
  }
  return {{j.value("table", std::string{}), j["attribute"].get<std::string>()},
          parse_compare_op(j["op"].get<std::string>()),
          literal_from_json(j["value"])};
}

}  // namespace xplore
