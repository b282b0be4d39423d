#include "xplore/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "xplore/error.hpp"

namespace xplore {

using nlohmann::json;

namespace {

bool is_missing_token(std::string_view s) { return s.empty() || s == "NULL"; }

void require(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorCode::InvalidConfig, what);
}

}  // namespace

TableSchema TableSchema::from_json(const json& j) {
  require(j.is_object(), "schema config must be an object");
  TableSchema s;
  require(j.contains("table") && j["table"].is_string(), "schema config: missing 'table'");
  require(j.contains("identifier") && j["identifier"].is_string(), "schema config: missing 'identifier'");
  require(j.contains("columns") && j["columns"].is_array(), "schema config: missing 'columns'");
  s.table = j["table"].get<std::string>();
  s.identifier = j["identifier"].get<std::string>();
  for (const auto& c : j["columns"]) {
    require(c.contains("name") && c.contains("kind"), "schema config: column needs name and kind");
    auto kind = parse_column_kind(c["kind"].get<std::string>());
    require(kind.has_value(), "schema config: unknown column kind '" + c["kind"].get<std::string>() + "'");
    s.columns.push_back({c["name"].get<std::string>(), *kind});
  }
  if (j.contains("synonyms")) {
    for (const auto& e : j["synonyms"]) {
      require(e.contains("term") && e.contains("target"), "schema config: synonym needs term and target");
      s.synonyms.push_back({e["term"].get<std::string>(), e["target"].get<std::string>(),
                            e.value("display", false)});
    }
  }
  if (j.contains("joins")) {
    for (const auto& e : j["joins"]) {
      require(e.contains("from") && e.contains("to") && e.contains("keys"),
              "schema config: join needs from, to and keys");
      JoinDef d{e["from"].get<std::string>(), e["to"].get<std::string>(), {}};
      for (const auto& k : e["keys"]) {
        require(k.is_array() && k.size() == 2, "schema config: join key must be a [from, to] pair");
        d.keys.emplace_back(k[0].get<std::string>(), k[1].get<std::string>());
      }
      require(!d.keys.empty(), "schema config: join without keys");
      s.joins.push_back(std::move(d));
    }
  }
  return s;
}

json TableSchema::to_json() const {
  json j{{"table", table}, {"identifier", identifier}, {"columns", json::array()},
         {"synonyms", json::array()}, {"joins", json::array()}};
  for (const auto& c : columns) j["columns"].push_back({{"name", c.name}, {"kind", column_kind_name(c.kind)}});
  for (const auto& s : synonyms) {
    json e{{"term", s.term}, {"target", s.target}};
    if (s.display) e["display"] = true;
    j["synonyms"].push_back(std::move(e));
  }
  for (const auto& d : joins) {
    json keys = json::array();
    for (const auto& [a, b] : d.keys) keys.push_back({a, b});
    j["joins"].push_back({{"from", d.from}, {"to", d.to}, {"keys", keys}});
  }
  return j;
}

// --- Table ---

Table::Table(std::string name, std::vector<ColumnDef> columns)
    : name_(std::move(name)), columns_(std::move(columns)), data_(columns_.size()) {
  std::set<std::string> seen;
  std::size_t identifiers = 0;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (!seen.insert(columns_[i].name).second) {
      throw Error(ErrorCode::InvalidConfig, "duplicate column '" + columns_[i].name + "' in table " + name_);
    }
    if (columns_[i].kind == ColumnKind::Identifier) {
      identifier_ = i;
      ++identifiers;
    }
  }
  if (identifiers != 1) {
    throw Error(ErrorCode::InvalidConfig, "table " + name_ + " must have exactly one identifier column");
  }
}

std::optional<std::size_t> Table::find_column(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Table::column_index(std::string_view name) const {
  if (auto i = find_column(name)) return *i;
  throw Error(ErrorCode::UnknownColumn, "unknown column " + name_ + "." + std::string(name));
}

const std::string& Table::identifier_of(RowId row) const {
  return std::get<std::string>(data_[identifier_][row]);
}

std::optional<RowId> Table::find_row(std::string_view identifier) const {
  auto it = by_identifier_.find(std::string(identifier));
  if (it == by_identifier_.end()) return std::nullopt;
  return it->second;
}

void Table::append_row(std::vector<Cell> row) {
  if (row.size() != columns_.size()) throw Error(ErrorCode::MalformedCsv, "row arity mismatch");
  const auto* id = std::get_if<std::string>(&row[identifier_]);
  if (id == nullptr) {
    throw Error(ErrorCode::TypeCoercion, "identifier must be a non-missing string",
                "row " + std::to_string(row_count_ + 1) + ", column " + columns_[identifier_].name);
  }
  if (!by_identifier_.emplace(*id, static_cast<RowId>(row_count_)).second) {
    throw Error(ErrorCode::DuplicateIdentifier, "duplicate identifier '" + *id + "' in table " + name_,
                "row " + std::to_string(row_count_ + 1) + ", column " + columns_[identifier_].name);
  }
  for (std::size_t c = 0; c < row.size(); ++c) data_[c].push_back(std::move(row[c]));
  ++row_count_;
}

void Table::set_cell(RowId row, std::size_t col, Cell value) {
  if (col == identifier_) throw Error(ErrorCode::InvalidArgument, "identifier cells are immutable");
  if (row >= row_count_ || col >= columns_.size()) throw Error(ErrorCode::InvalidArgument, "cell out of range");
  data_[col][row] = std::move(value);
}

std::string composite_key(const Table& t, RowId row, const std::vector<std::size_t>& cols) {
  std::string key;
  for (auto c : cols) {
    key += cell_key(t.cell(row, c));
    key += '\x1f';
  }
  return key;
}

// --- Catalog ---

Catalog::Catalog(const Catalog& other) : tables_(other.tables_), schemas_(other.schemas_) {}

Catalog& Catalog::operator=(const Catalog& other) {
  if (this != &other) {
    tables_ = other.tables_;
    schemas_ = other.schemas_;
    std::unique_lock lock(cache_mutex_);
    key_cache_.clear();
  }
  return *this;
}

Catalog::Catalog(Catalog&& other) noexcept
    : tables_(std::move(other.tables_)), schemas_(std::move(other.schemas_)) {}

Catalog& Catalog::operator=(Catalog&& other) noexcept {
  tables_ = std::move(other.tables_);
  schemas_ = std::move(other.schemas_);
  key_cache_.clear();
  return *this;
}

Catalog::~Catalog() = default;

void Catalog::add(Table table, TableSchema schema) {
  if (find(table.name()) != nullptr) {
    throw Error(ErrorCode::InvalidConfig, "table '" + table.name() + "' already in catalog");
  }
  tables_.push_back(std::move(table));
  schemas_.push_back(std::move(schema));
  std::unique_lock lock(cache_mutex_);
  key_cache_.clear();
}

const Table* Catalog::find(std::string_view name) const noexcept {
  for (const auto& t : tables_) {
    if (t.name() == name) return &t;
  }
  return nullptr;
}

const Table& Catalog::table(std::string_view name) const {
  if (const auto* t = find(name)) return *t;
  throw Error(ErrorCode::UnknownTable, "unknown table '" + std::string(name) + "'");
}

Table& Catalog::mutable_table(std::string_view name) {
  for (auto& t : tables_) {
    if (t.name() == name) {
      std::unique_lock lock(cache_mutex_);
      key_cache_.clear();
      return t;
    }
  }
  throw Error(ErrorCode::UnknownTable, "unknown table '" + std::string(name) + "'");
}

const KeyIndex& Catalog::key_index(std::string_view table_name, const std::vector<std::string>& columns) const {
  std::string cache_key(table_name);
  for (const auto& c : columns) cache_key += "\x1f" + c;
  {
    std::shared_lock lock(cache_mutex_);
    auto it = key_cache_.find(cache_key);
    if (it != key_cache_.end()) return *it->second;
  }
  const Table& t = table(table_name);
  std::vector<std::size_t> cols;
  for (const auto& c : columns) cols.push_back(t.column_index(c));
  auto index = std::make_unique<KeyIndex>();
  for (RowId r = 0; r < t.row_count(); ++r) {
    bool missing = std::any_of(cols.begin(), cols.end(), [&](auto c) { return is_missing(t.cell(r, c)); });
    if (missing) continue;
    (*index)[composite_key(t, r, cols)].push_back(r);
  }
  std::unique_lock lock(cache_mutex_);
  auto [it, inserted] = key_cache_.emplace(cache_key, std::move(index));
  return *it->second;
}

// --- CSV ---

CsvDocument parse_csv(std::string_view in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool any = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < in.size(); ++i) {
    char c = in[i];
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < in.size() && in[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.empty()) {
          throw Error(ErrorCode::MalformedCsv, "quote inside unquoted field", "line " + std::to_string(line));
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        any = false;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::MalformedCsv, "unterminated quoted field", "line " + std::to_string(line));
  if (any) end_record();

  // blank lines carry no record
  records.erase(std::remove_if(records.begin(), records.end(),
                               [](const auto& r) { return r.size() == 1 && r[0].empty(); }),
                records.end());
  if (records.empty()) throw Error(ErrorCode::MalformedCsv, "missing header row");
  CsvDocument doc;
  doc.header = std::move(records.front());
  doc.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
  return doc;
}

Table ingest_csv_text(std::string_view content, const TableSchema& schema) {
  CsvDocument doc = parse_csv(content);

  std::vector<ColumnDef> columns;
  std::vector<std::size_t> csv_pos;
  for (const auto& def : schema.columns) {
    auto it = std::find(doc.header.begin(), doc.header.end(), def.name);
    if (it == doc.header.end()) {
      throw Error(ErrorCode::MalformedCsv, "header lacks declared column '" + def.name + "'");
    }
    ColumnDef c = def;
    if (c.name == schema.identifier) c.kind = ColumnKind::Identifier;
    else if (c.kind == ColumnKind::Identifier) c.kind = ColumnKind::Categorical;  // foreign key column
    columns.push_back(c);
    csv_pos.push_back(static_cast<std::size_t>(it - doc.header.begin()));
  }
  if (std::none_of(columns.begin(), columns.end(), [&](const auto& c) { return c.name == schema.identifier; })) {
    throw Error(ErrorCode::InvalidConfig, "identifier column '" + schema.identifier + "' not declared");
  }

  Table table(schema.table, columns);
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& raw = doc.rows[r];
    const std::string row_loc = "row " + std::to_string(r + 1);
    if (raw.size() != doc.header.size()) {
      throw Error(ErrorCode::MalformedCsv,
                  "expected " + std::to_string(doc.header.size()) + " fields, got " + std::to_string(raw.size()),
                  row_loc);
    }
    std::vector<Cell> row;
    row.reserve(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const std::string& s = raw[csv_pos[c]];
      if (is_missing_token(s)) {
        if (columns[c].kind == ColumnKind::Identifier) {
          throw Error(ErrorCode::TypeCoercion, "identifier is missing", row_loc + ", column " + columns[c].name);
        }
        row.emplace_back(std::monostate{});
        continue;
      }
      if (columns[c].kind == ColumnKind::Numeric) {
        auto v = parse_decimal(s);
        if (!v) {
          throw Error(ErrorCode::TypeCoercion, "'" + s + "' is not a finite decimal number",
                      row_loc + ", column " + columns[c].name);
        }
        row.emplace_back(*v);
      } else {
        row.emplace_back(s);
      }
    }
    try {
      table.append_row(std::move(row));
    } catch (const Error& e) {
      throw Error(e.code(), e.what(), row_loc + ", column " + schema.identifier);
    }
  }
  return table;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Table ingest_csv(const std::filesystem::path& path, const TableSchema& schema) {
  return ingest_csv_text(read_file(path), schema);
}

// --- profiling ---

json ColumnProfile::to_json() const {
  json j{{"table", table},
         {"column", column},
         {"kind", column_kind_name(kind)},
         {"row_count", row_count},
         {"distinct_count", distinct_count},
         {"null_count", null_count},
         {"entropy", entropy}};
  if (min) j["min"] = *min;
  if (max) j["max"] = *max;
  if (mean) j["mean"] = *mean;
  json f = json::array();
  for (const auto& [v, n] : frequencies) f.push_back({v, n});
  j["frequencies"] = std::move(f);
  return j;
}

ColumnProfile profile_column(const Catalog& catalog, std::string_view table_name, std::string_view column) {
  const Table& t = catalog.table(table_name);
  std::size_t col = t.column_index(column);
  ColumnProfile p;
  p.table = t.name();
  p.column = std::string(column);
  p.kind = t.columns()[col].kind;
  p.row_count = t.row_count();

  std::vector<Cell> values;
  double sum = 0;
  for (const auto& c : t.column_data(col)) {
    if (is_missing(c)) {
      ++p.null_count;
      continue;
    }
    values.push_back(c);
    if (const auto* d = std::get_if<double>(&c)) {
      sum += *d;
      p.min = p.min ? std::min(*p.min, *d) : *d;
      p.max = p.max ? std::max(*p.max, *d) : *d;
    }
  }
  if (p.kind == ColumnKind::Numeric && !values.empty()) p.mean = sum / static_cast<double>(values.size());

  std::sort(values.begin(), values.end(), [](const Cell& a, const Cell& b) { return compare_cells(a, b) < 0; });
  for (std::size_t i = 0; i < values.size();) {
    std::size_t j = i;
    while (j < values.size() && compare_cells(values[i], values[j]) == 0) ++j;
    p.frequencies.emplace_back(render_cell(values[i]), j - i);
    i = j;
  }
  p.distinct_count = p.frequencies.size();

  if (p.distinct_count > 1) {
    const double total = static_cast<double>(values.size());
    double h = 0;
    for (const auto& [v, n] : p.frequencies) {
      double q = static_cast<double>(n) / total;
      h -= q * std::log(q);
    }
    p.entropy = h;
  }
  return p;
}

std::vector<ColumnProfile> profile_catalog(const Catalog& catalog) {
  std::vector<ColumnProfile> out;
  for (const auto& t : catalog.tables()) {
    for (const auto& c : t.columns()) out.push_back(profile_column(catalog, t.name(), c.name));
  }
  return out;
}

}  // namespace xplore
