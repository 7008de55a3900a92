#include "odrop/error.hpp"
#include "odrop/random.hpp"
#include "odrop/tabular.hpp"

namespace odrop::tabular {

FoldAssignment stratified_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("stratified_folds needs k >= 2");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw InvalidArgument("labels must be 0 or 1");
    (labels[i] == 1 ? pos : neg).push_back(i);
  }
  if (pos.size() < k || neg.size() < k) {
    throw InvalidArgument("each class needs at least k=" + std::to_string(k) + " members (positives " +
                          std::to_string(pos.size()) + ", negatives " + std::to_string(neg.size()) + ")");
  }
  Rng rng(derive_seed(seed, 0xf01d));
  rng.shuffle(std::span<std::size_t>(pos));
  rng.shuffle(std::span<std::size_t>(neg));
  FoldAssignment out;
  out.k = k;
  out.fold.assign(labels.size(), 0);
  // Round-robin within each class; the negatives continue where the
  // positives stopped so fold sizes differ by at most one.
  std::size_t slot = 0;
  for (auto i : pos) out.fold[i] = slot++ % k;
  for (auto i : neg) out.fold[i] = slot++ % k;
  return out;
}

std::vector<std::size_t> FoldAssignment::train_rows(std::size_t f) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fold.size(); ++i) {
    if (fold[i] != f) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> FoldAssignment::test_rows(std::size_t f) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fold.size(); ++i) {
    if (fold[i] == f) rows.push_back(i);
  }
  return rows;
}

}  // namespace odrop::tabular
