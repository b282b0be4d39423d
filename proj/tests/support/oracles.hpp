#pragma once

// Independent reference computations. Nothing here calls into the library's
// algorithms; inputs are plain containers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using Ids = std::set<std::uint32_t>;

inline std::size_t inter(const Ids& a, const Ids& b) {
  std::size_t n = 0;
  for (auto x : a) n += b.count(x);
  return n;
}

// "EQ", "DR", "PO", "PP", "PPi" from cardinalities alone.
inline std::string rcc(const Ids& a, const Ids& b) {
  const std::size_t i = inter(a, b);
  if (a.empty() && b.empty()) return "EQ";
  if (i == 0) return "DR";
  if (i == a.size() && i == b.size()) return "EQ";
  if (i == a.size()) return "PP";
  if (i == b.size()) return "PPi";
  return "PO";
}

inline double jaccard(const Ids& a, const Ids& b) {
  Ids u = a;
  u.insert(b.begin(), b.end());
  return u.empty() ? 1.0 : static_cast<double>(inter(a, b)) / static_cast<double>(u.size());
}

// Smallest number of candidates whose union contains the coverable part of
// the target, by enumerating every subset (masks over <= 20 candidates).
inline std::size_t min_cover(const std::vector<std::uint32_t>& candidate_masks, std::uint32_t target) {
  std::uint32_t reachable = 0;
  for (auto m : candidate_masks) reachable |= m & target;
  if (reachable == 0) return 0;
  const std::size_t n = candidate_masks.size();
  std::size_t best = n + 1;
  for (std::uint32_t pick = 1; pick < (1u << n); ++pick) {
    const auto size = static_cast<std::size_t>(__builtin_popcount(pick));
    if (size >= best) continue;
    std::uint32_t u = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pick & (1u << i)) u |= candidate_masks[i];
    }
    if ((u & reachable) == reachable) best = size;
  }
  return best;
}

struct Prf {
  double p, r, f;
};

inline std::optional<Prf> accuracy(const Ids& result, const Ids& gold) {
  if (gold.empty()) return std::nullopt;
  const double tp = static_cast<double>(inter(result, gold));
  const double p = result.empty() ? 1.0 : tp / static_cast<double>(result.size());
  const double r = tp / static_cast<double>(gold.size());
  const double f = (p + r) == 0 ? 0.0 : 2 * p * r / (p + r);
  return Prf{p, r, f};
}

inline double entropy(const std::vector<std::size_t>& counts) {
  double total = 0;
  for (auto c : counts) total += static_cast<double>(c);
  double h = 0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double q = static_cast<double>(c) / total;
    h -= q * std::log(q);
  }
  return h;
}

}  // namespace oracle
