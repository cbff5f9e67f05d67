#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <vector>

#include "common.hpp"
#include "core.hpp"

namespace gdeform {

//! Weighted isotonic regression by pool-adjacent-violators.
//!
//! Returns the nondecreasing sequence g minimizing sum_i w_i (g_i - t_i)^2
//! in the given index order. Weights must be nonnegative; a pooled block
//! whose total weight is zero takes the plain arithmetic mean of its targets
//! so the fit stays defined when isolated weights vanish.
inline Vector isotonic_fit(const Vector& targets, const Vector& weights) {
  const Eigen::Index n = targets.size();
  if (weights.size() != n) throw data_error("isotonic_fit: size mismatch");
  if (n == 0) return Vector();
  if ((weights.array() < 0.0).any())
    throw data_error("isotonic_fit: negative weight");

  struct Block {
    double wsum;   // total weight
    double wtsum;  // weighted target sum
    double tsum;   // plain target sum, for the zero-weight fallback
    Eigen::Index count;
    double mean() const { return wsum > 0.0 ? wtsum / wsum : tsum / count; }
  };
  std::vector<Block> blocks;
  blocks.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    blocks.push_back({weights(i), weights(i) * targets(i), targets(i), 1});
    while (blocks.size() >= 2 &&
           blocks[blocks.size() - 2].mean() >= blocks.back().mean()) {
      Block top = blocks.back();
      blocks.pop_back();
      Block& prev = blocks.back();
      prev.wsum += top.wsum;
      prev.wtsum += top.wtsum;
      prev.tsum += top.tsum;
      prev.count += top.count;
    }
  }
  Vector fit(n);
  Eigen::Index pos = 0;
  for (const Block& b : blocks) {
    fit.segment(pos, b.count).setConstant(b.mean());
    pos += b.count;
  }
  return fit;
}

//! Isotonic regression of targets against the order induced by keys: the
//! fitted values are nondecreasing when read in sorted-key order. Tied keys
//! keep their original relative order and impose no equality between their
//! fitted values (Kruskal's primary tie treatment). Requires at least one
//! positive weight.
inline Vector weighted_isotonic_regression(const Vector& targets, const Vector& keys,
                                           const Vector& weights) {
  const Eigen::Index n = targets.size();
  if (keys.size() != n || weights.size() != n)
    throw data_error("weighted_isotonic_regression: size mismatch");
  if (!(weights.array() > 0.0).any())
    throw data_error("weighted_isotonic_regression: all weights zero");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return keys(a) < keys(b); });
  Vector ts(n), ws(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    ts(k) = targets(order[static_cast<std::size_t>(k)]);
    ws(k) = weights(order[static_cast<std::size_t>(k)]);
  }
  Vector fs = isotonic_fit(ts, ws);
  Vector fit(n);
  for (Eigen::Index k = 0; k < n; ++k) fit(order[static_cast<std::size_t>(k)]) = fs(k);
  return fit;
}

}  // namespace gdeform
