#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace xplore {

enum class ColumnKind { Identifier, Categorical, Numeric, Text };

std::string_view column_kind_name(ColumnKind kind) noexcept;
std::optional<ColumnKind> parse_column_kind(std::string_view name) noexcept;

// A table cell. std::monostate marks a missing value.
using Cell = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const Cell& c) noexcept { return std::holds_alternative<std::monostate>(c); }

// Shortest round-trip decimal rendering; integral values print without a fraction.
std::string format_number(double v);

// Human-readable rendering; missing renders as the "∅" marker.
std::string render_cell(const Cell& c);

inline constexpr std::string_view kMissingMarker = "\xE2\x88\x85";  // ∅

// Total order over cells: numbers before strings, missing last.
int compare_cells(const Cell& a, const Cell& b) noexcept;

// Strict finite decimal parse; rejects trailing garbage, inf and nan.
std::optional<double> parse_decimal(std::string_view s) noexcept;

// Stable key for hashing cells in join and group indices.
std::string cell_key(const Cell& c);

}  // namespace xplore
