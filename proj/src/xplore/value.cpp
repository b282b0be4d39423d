#include "xplore/value.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace xplore {

std::string_view column_kind_name(ColumnKind kind) noexcept {
  switch (kind) {
    case ColumnKind::Identifier: return "identifier";
    case ColumnKind::Categorical: return "categorical";
    case ColumnKind::Numeric: return "numeric";
    case ColumnKind::Text: return "text";
  }
  return "text";
}

std::optional<ColumnKind> parse_column_kind(std::string_view name) noexcept {
  if (name == "identifier") return ColumnKind::Identifier;
  if (name == "categorical") return ColumnKind::Categorical;
  if (name == "numeric") return ColumnKind::Numeric;
  if (name == "text") return ColumnKind::Text;
  return std::nullopt;
}

std::string format_number(double v) {
  if (v == 0.0) return "0";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) return "0";
  return std::string(buf.data(), end);
}

std::string render_cell(const Cell& c) {
  if (is_missing(c)) return std::string(kMissingMarker);
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  return std::get<std::string>(c);
}

int compare_cells(const Cell& a, const Cell& b) noexcept {
  if (a.index() != b.index()) {
    // monostate(0) sorts last, then double(1) < string(2)
    auto rank = [](const Cell& c) { return c.index() == 0 ? 3 : static_cast<int>(c.index()); };
    return rank(a) < rank(b) ? -1 : 1;
  }
  if (const auto* x = std::get_if<double>(&a)) {
    double y = std::get<double>(b);
    return *x < y ? -1 : (*x > y ? 1 : 0);
  }
  if (const auto* s = std::get_if<std::string>(&a)) {
    int r = s->compare(std::get<std::string>(b));
    return r < 0 ? -1 : (r > 0 ? 1 : 0);
  }
  return 0;
}

std::optional<double> parse_decimal(std::string_view s) noexcept {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::fixed);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    auto [p2, e2] = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::general);
    if (e2 != std::errc{} || p2 != s.data() + s.size()) return std::nullopt;
  }
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

std::string cell_key(const Cell& c) {
  if (is_missing(c)) return std::string("\x00", 1);
  if (const auto* d = std::get_if<double>(&c)) return "n" + format_number(*d);
  return "s" + std::get<std::string>(c);
}

}  // namespace xplore
