#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "xplore/value.hpp"

namespace xplore {

using RowId = std::uint32_t;

struct ColumnDef {
  std::string name;
  ColumnKind kind = ColumnKind::Text;
};

struct SynonymDef {
  std::string term;
  std::string target;  // "table", "table.column" or "table.column=value"
  bool display = false;
};

struct JoinDef {
  std::string from;
  std::string to;
  std::vector<std::pair<std::string, std::string>> keys;  // (from column, to column)
};

// Per-table schema config: {table, identifier, columns, synonyms, joins}.
struct TableSchema {
  std::string table;
  std::string identifier;
  std::vector<ColumnDef> columns;
  std::vector<SynonymDef> synonyms;
  std::vector<JoinDef> joins;

  static TableSchema from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

class Table {
 public:
  Table(std::string name, std::vector<ColumnDef> columns);

  const std::string& name() const noexcept { return name_; }
  const std::vector<ColumnDef>& columns() const noexcept { return columns_; }
  std::size_t row_count() const noexcept { return row_count_; }
  std::size_t identifier_column() const noexcept { return identifier_; }
  const std::string& identifier_name() const { return columns_[identifier_].name; }

  std::optional<std::size_t> find_column(std::string_view name) const noexcept;
  std::size_t column_index(std::string_view name) const;  // throws UnknownColumn
  const ColumnDef& column(std::string_view name) const { return columns_[column_index(name)]; }

  const Cell& cell(RowId row, std::size_t col) const { return data_[col][row]; }
  const std::vector<Cell>& column_data(std::size_t col) const { return data_[col]; }
  const std::string& identifier_of(RowId row) const;
  std::optional<RowId> find_row(std::string_view identifier) const;

  // Appends one typed row; enforces identifier uniqueness.
  void append_row(std::vector<Cell> row);
  // Overwrites one cell; identifier cells cannot be changed this way.
  void set_cell(RowId row, std::size_t col, Cell value);

 private:
  std::string name_;
  std::vector<ColumnDef> columns_;
  std::size_t identifier_ = 0;
  std::size_t row_count_ = 0;
  std::vector<std::vector<Cell>> data_;
  std::unordered_map<std::string, RowId> by_identifier_;
};

// Hash index over one or more key columns; lazily built and cached by Catalog.
using KeyIndex = std::unordered_map<std::string, std::vector<RowId>>;

std::string composite_key(const Table& t, RowId row, const std::vector<std::size_t>& cols);

class Catalog {
 public:
  Catalog() = default;
  Catalog(const Catalog& other);
  Catalog& operator=(const Catalog& other);
  Catalog(Catalog&&) noexcept;
  Catalog& operator=(Catalog&&) noexcept;
  ~Catalog();

  void add(Table table, TableSchema schema);

  bool empty() const noexcept { return tables_.empty(); }
  const std::vector<Table>& tables() const noexcept { return tables_; }
  const std::vector<TableSchema>& schemas() const noexcept { return schemas_; }
  const Table* find(std::string_view name) const noexcept;
  const Table& table(std::string_view name) const;  // throws UnknownTable
  Table& mutable_table(std::string_view name);

  // Returns rows grouped by key over `columns`; rows with a missing key cell are skipped.
  const KeyIndex& key_index(std::string_view table, const std::vector<std::string>& columns) const;

 private:
  std::vector<Table> tables_;
  std::vector<TableSchema> schemas_;
  mutable std::shared_mutex cache_mutex_;
  mutable std::map<std::string, std::unique_ptr<KeyIndex>> key_cache_;
};

struct CsvDocument {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC-4180: comma separated, double-quote quoting with "" escapes; CRLF or LF.
CsvDocument parse_csv(std::string_view content);

Table ingest_csv_text(std::string_view content, const TableSchema& schema);
Table ingest_csv(const std::filesystem::path& path, const TableSchema& schema);

struct ColumnProfile {
  std::string table;
  std::string column;
  ColumnKind kind = ColumnKind::Text;
  std::size_t row_count = 0;
  std::size_t distinct_count = 0;
  std::size_t null_count = 0;
  std::optional<double> min;
  std::optional<double> max;
  std::optional<double> mean;
  // Keyed by rendered value, ascending by cell order.
  std::vector<std::pair<std::string, std::size_t>> frequencies;
  double entropy = 0.0;

  nlohmann::json to_json() const;
};

ColumnProfile profile_column(const Catalog& catalog, std::string_view table, std::string_view column);
std::vector<ColumnProfile> profile_catalog(const Catalog& catalog);

std::string read_file(const std::filesystem::path& path);

}  // namespace xplore
