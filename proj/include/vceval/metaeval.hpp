#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vceval/error.hpp"

namespace vceval {

/// Average (1-based) ranks; tied values share the mean of the ranks they span.
template <typename Derived>
Eigen::VectorXd average_ranks(const Eigen::MatrixBase<Derived>& values) {
  const auto n = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values(a) < values(b); });
  Eigen::VectorXd ranks(n);
  for (Eigen::Index i = 0; i < n;) {
    Eigen::Index j = i;
    while (j + 1 < n && values(order[j + 1]) == values(order[i])) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) ranks(order[k]) = mean_rank;
    i = j + 1;
  }
  return ranks;
}

/// Product-moment correlation. DegenerateInput on length < 2, mismatch, or a constant argument.
template <typename DerivedX, typename DerivedY>
double pearson(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "pearson: unequal lengths");
  if (x.size() < 2) throw Error(ErrorCode::DegenerateInput, "pearson needs at least 2 points");
  if (x.maxCoeff() == x.minCoeff() || y.maxCoeff() == y.minCoeff()) {
    throw Error(ErrorCode::DegenerateInput, "pearson: zero variance");
  }
  const Eigen::ArrayXd dx = x.array() - x.mean();
  const Eigen::ArrayXd dy = y.array() - y.mean();
  const double r = (dx * dy).sum() / std::sqrt((dx * dx).sum() * (dy * dy).sum());
  return std::clamp(r, -1.0, 1.0);
}

/// Pearson correlation of average ranks.
template <typename DerivedX, typename DerivedY>
double spearman(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "spearman: unequal lengths");
  return pearson(average_ranks(x), average_ranks(y));
}

inline Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  return pearson(as_vector(x), as_vector(y));
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  return spearman(as_vector(x), as_vector(y));
}

struct PairedScores {
  std::vector<std::string> labels;
  std::vector<double> automatic;
  std::vector<double> human;
};

enum class Methodology { video_level, target_level, pairwise };

std::string to_string(Methodology m);

struct MetaReport {
  Methodology methodology = Methodology::video_level;
  double pearson = 0.0;
  double spearman = 0.0;
  std::size_t n_units = 0;
  std::size_t skipped_degenerate = 0;
};

/// Correlation across videos of per-video totals (automatic vs human).
MetaReport meta_video_level(const PairedScores& per_video);

/// Correlation per target across systems, then the unweighted mean over non-degenerate targets.
MetaReport meta_target_level(std::span<const PairedScores> per_target);

/// Builds per-video totals: for each label, sums the target scores present on both sides.
/// Labels with no common target are dropped.
PairedScores sum_over_targets(const std::map<std::string, std::map<std::string, double>>& automatic,
                              const std::map<std::string, std::map<std::string, double>>& human);

enum class PairOutcome { a_wins, b_wins, tie };

std::string to_string(PairOutcome o);

/// Fraction of pairs whose predicted winner matches the human winner; predicted ties earn 0.5.
double pairwise_accuracy(std::span<const PairOutcome> predicted, std::span<const PairOutcome> human);

}  // namespace vceval
