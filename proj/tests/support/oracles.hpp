#pragma once

// Slow, direct re-implementations used to cross-check the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace oracle {

using Tokens = std::vector<std::string>;

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline Prf make_prf(double p, double r) { return {p, r, p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r)}; }

/// All n-grams, with repetition, in order.
inline std::vector<Tokens> ngrams(const Tokens& t, std::size_t n) {
  std::vector<Tokens> out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) out.emplace_back(t.begin() + i, t.begin() + i + n);
  return out;
}

inline std::size_t count_of(const std::vector<Tokens>& grams, const Tokens& g) {
  return static_cast<std::size_t>(std::count(grams.begin(), grams.end(), g));
}

/// Matches counted by walking the distinct candidate n-grams and taking min(count_c, count_r).
inline std::size_t clipped(const std::vector<Tokens>& cand, const std::vector<Tokens>& ref) {
  std::vector<Tokens> seen;
  std::size_t total = 0;
  for (const auto& g : cand) {
    if (std::find(seen.begin(), seen.end(), g) != seen.end()) continue;
    seen.push_back(g);
    total += std::min(count_of(cand, g), count_of(ref, g));
  }
  return total;
}

inline Prf rouge_n(const Tokens& cand, const Tokens& ref, std::size_t n) {
  const auto c = ngrams(cand, n);
  const auto r = ngrams(ref, n);
  if (c.empty() || r.empty()) return {};
  const double m = static_cast<double>(clipped(c, r));
  return make_prf(m / static_cast<double>(c.size()), m / static_cast<double>(r.size()));
}

inline bool is_subsequence(const Tokens& sub, const Tokens& seq) {
  std::size_t j = 0;
  for (std::size_t i = 0; i < seq.size() && j < sub.size(); ++i) {
    if (seq[i] == sub[j]) ++j;
  }
  return j == sub.size();
}

/// Exhaustive: tries every subsequence of the shorter stream (keep both under ~16 tokens).
inline std::size_t lcs(const Tokens& a, const Tokens& b) {
  const Tokens& shorter = a.size() <= b.size() ? a : b;
  const Tokens& longer = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  const std::size_t n = shorter.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    Tokens sub;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::size_t{1} << i)) sub.push_back(shorter[i]);
    }
    if (sub.size() > best && is_subsequence(sub, longer)) best = sub.size();
  }
  return best;
}

inline Prf rouge_l(const Tokens& cand, const Tokens& ref) {
  if (cand.empty() || ref.empty()) return {};
  const double l = static_cast<double>(lcs(cand, ref));
  return make_prf(l / static_cast<double>(cand.size()), l / static_cast<double>(ref.size()));
}

inline double bleu(const Tokens& cand, const std::vector<Tokens>& refs, std::size_t max_n = 4) {
  if (cand.empty()) return 0.0;
  double product = 1.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    const auto c = ngrams(cand, n);
    std::size_t matches = 0;
    std::vector<Tokens> seen;
    for (const auto& g : c) {
      if (std::find(seen.begin(), seen.end(), g) != seen.end()) continue;
      seen.push_back(g);
      std::size_t max_ref = 0;
      for (const auto& r : refs) max_ref = std::max(max_ref, count_of(ngrams(r, n), g));
      matches += std::min(count_of(c, g), max_ref);
    }
    const double p = matches == 0 ? 1.0 / static_cast<double>(c.size() + 1)
                                  : static_cast<double>(matches) / static_cast<double>(c.size());
    product *= std::pow(p, 1.0 / static_cast<double>(max_n));
  }
  // Closest reference length, shorter one on ties.
  std::size_t r = refs.front().size();
  for (const auto& ref : refs) {
    const long d = std::labs(static_cast<long>(ref.size()) - static_cast<long>(cand.size()));
    const long best = std::labs(static_cast<long>(r) - static_cast<long>(cand.size()));
    if (d < best || (d == best && ref.size() < r)) r = ref.size();
  }
  const double c = static_cast<double>(cand.size());
  const double bp = c < static_cast<double>(r) ? std::exp(1.0 - static_cast<double>(r) / c) : 1.0;
  return bp * product;
}

/// Textbook product-moment formula with explicit sums.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

/// Rank = 1 + (#smaller) + (#equal others) / 2, i.e. the average rank of a tie group.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double smaller = 0, equal = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) ++smaller;
      else if (j != i && v[j] == v[i]) ++equal;
    }
    out[i] = 1.0 + smaller + equal / 2.0;
  }
  return out;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

}  // namespace oracle
