#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "relcl/corpus.hpp"
#include "relcl/error.hpp"

namespace relcl {

std::size_t low_resource_count(std::size_t n, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw ArgumentError("low-resource fraction must be in (0, 1]");
  // 1e-9 absorbs representation error, e.g. 0.29 * 100 = 28.999999999999996
  const auto k = static_cast<std::size_t>(std::floor(p * static_cast<double>(n) + 1e-9));
  return std::min(k, n);
}

std::vector<PairInstance> split_low_resource(const std::vector<PairInstance>& pairs, double p,
                                             std::uint64_t seed) {
  const std::size_t keep = low_resource_count(pairs.size(), p);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(keep);
  std::sort(order.begin(), order.end());
  std::vector<PairInstance> out;
  out.reserve(keep);
  for (std::size_t i : order) out.push_back(pairs[i]);
  return out;
}

Corpus restrict_to_pairs(const Corpus& corpus, std::vector<PairInstance> pairs) {
  std::set<std::string> referenced;
  for (const auto& p : pairs) referenced.insert(p.document_id);
  Corpus out;
  out.inventory = corpus.inventory;
  for (const auto& d : corpus.documents) {
    if (referenced.count(d.id)) out.documents.push_back(d);
  }
  out.pairs = std::move(pairs);
  out.reindex();
  return out;
}

}  // namespace relcl
