#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "xplore/dataset.hpp"
#include "xplore/entity_set.hpp"

namespace xtest {

inline std::filesystem::path fixture_dir() { return XPLORE_FIXTURE_DIR; }

inline std::shared_ptr<const xplore::Dataset> fixture() {
  static auto ds = std::make_shared<const xplore::Dataset>(xplore::load_dataset(fixture_dir() / "manifest.json"));
  return ds;
}

inline xplore::EntitySet ids(const std::string& table, std::vector<std::string> names) {
  return xplore::EntitySet::from_identifiers(fixture()->catalog.table(table), names);
}

inline std::vector<std::string> names(const xplore::EntitySet& s) {
  return s.identifiers(fixture()->catalog.table(s.base_table()));
}

// Random subset of `table`'s rows; each row kept with probability 1/2.
inline xplore::EntitySet random_subset(const xplore::Table& table, std::mt19937_64& rng) {
  std::vector<xplore::RowId> rows;
  std::bernoulli_distribution keep(0.5);
  for (xplore::RowId r = 0; r < table.row_count(); ++r) {
    if (keep(rng)) rows.push_back(r);
  }
  return xplore::EntitySet(table.name(), std::move(rows));
}

}  // namespace xtest
