#include "vceval/textmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "vceval/error.hpp"
#include "vceval/unicode.hpp"

namespace vceval {

SimilarityScore SimilarityScore::from(double precision, double recall) {
  const double sum = precision + recall;
  return {precision, recall, sum > 0.0 ? 2.0 * precision * recall / sum : 0.0};
}

MetricTokenStream metric_tokenize(std::string_view text) {
  MetricTokenStream out;
  std::u32string word;
  auto flush = [&] {
    if (!word.empty()) out.tokens.push_back(unicode::encode(word));
    word.clear();
  };
  for (char32_t cp : unicode::decode(text)) {
    if (unicode::is_cjk(cp)) {
      flush();
      out.tokens.push_back(unicode::encode(cp));
    } else if (unicode::is_word_char(cp)) {
      word.push_back(unicode::to_lower(cp));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const MetricTokenStream& s, std::size_t n) {
  NgramCounts counts;
  if (s.size() < n) return counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    ++counts[std::vector<std::string>(s.tokens.begin() + i, s.tokens.begin() + i + n)];
  }
  return counts;
}

std::size_t clipped_matches(const NgramCounts& candidate, const NgramCounts& reference) {
  std::size_t matches = 0;
  for (const auto& [gram, count] : candidate) {
    const auto it = reference.find(gram);
    if (it != reference.end()) matches += std::min(count, it->second);
  }
  return matches;
}

}  // namespace

SimilarityScore rouge_n(const MetricTokenStream& candidate, const MetricTokenStream& reference, int n) {
  if (n < 1) throw Error(ErrorCode::InvalidN, std::to_string(n));
  const auto un = static_cast<std::size_t>(n);
  if (candidate.size() < un || reference.size() < un) return {};
  const auto matches = static_cast<double>(clipped_matches(count_ngrams(candidate, un), count_ngrams(reference, un)));
  return SimilarityScore::from(matches / static_cast<double>(candidate.size() - un + 1),
                               matches / static_cast<double>(reference.size() - un + 1));
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

SimilarityScore rouge_l(const MetricTokenStream& candidate, const MetricTokenStream& reference) {
  if (candidate.size() == 0 || reference.size() == 0) return {};
  const auto lcs = static_cast<double>(lcs_length(candidate.tokens, reference.tokens));
  return SimilarityScore::from(lcs / static_cast<double>(candidate.size()),
                               lcs / static_cast<double>(reference.size()));
}

double bleu(const MetricTokenStream& candidate, std::span<const MetricTokenStream> references, int max_n) {
  if (references.empty()) throw Error(ErrorCode::NoReference, "bleu needs at least one reference");
  if (max_n < 1) throw Error(ErrorCode::InvalidN, std::to_string(max_n));
  const auto c = candidate.size();
  if (c == 0) return 0.0;

  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const auto un = static_cast<std::size_t>(n);
    const auto cand = count_ngrams(candidate, un);
    // Clip each candidate n-gram by its maximum count in any single reference.
    NgramCounts max_ref;
    for (const auto& ref : references) {
      for (const auto& [gram, count] : count_ngrams(ref, un)) {
        auto& slot = max_ref[gram];
        slot = std::max(slot, count);
      }
    }
    const auto matches = clipped_matches(cand, max_ref);
    const auto total = c >= un ? c - un + 1 : 0;
    const double p = matches == 0 ? 1.0 / static_cast<double>(total + 1)
                                  : static_cast<double>(matches) / static_cast<double>(total);
    log_sum += std::log(p) / static_cast<double>(max_n);
  }

  // Closest reference length; ties resolve to the shorter reference.
  std::size_t r = references.front().size();
  for (const auto& ref : references) {
    const auto d = ref.size() > c ? ref.size() - c : c - ref.size();
    const auto best = r > c ? r - c : c - r;
    if (d < best || (d == best && ref.size() < r)) r = ref.size();
  }
  const double bp = c < r ? std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c)) : 1.0;
  return bp * std::exp(log_sum);
}

std::string to_string(BaselineMetric m) {
  switch (m) {
    case BaselineMetric::rouge1: return "rouge1";
    case BaselineMetric::rouge2: return "rouge2";
    case BaselineMetric::rougeL: return "rougeL";
    case BaselineMetric::bleu: return "bleu";
  }
  return "unknown";
}

BaselineMetric parse_baseline_metric(std::string_view name) {
  if (name == "rouge1") return BaselineMetric::rouge1;
  if (name == "rouge2") return BaselineMetric::rouge2;
  if (name == "rougeL") return BaselineMetric::rougeL;
  if (name == "bleu") return BaselineMetric::bleu;
  throw Error(ErrorCode::Usage, "unknown metric '" + std::string(name) + "' (rouge1|rouge2|rougeL|bleu)");
}

double text_similarity(const MetricTokenStream& candidate, const MetricTokenStream& reference,
                       BaselineMetric metric) {
  switch (metric) {
    case BaselineMetric::rouge1: return rouge_n(candidate, reference, 1).f1;
    case BaselineMetric::rouge2: return rouge_n(candidate, reference, 2).f1;
    case BaselineMetric::rougeL: return rouge_l(candidate, reference).f1;
    case BaselineMetric::bleu: return bleu(candidate, std::span(&reference, 1));
  }
  return 0.0;
}

double baseline_course_score(const VideoCourse& course, std::span<const ReferenceMaterial> materials,
                             BaselineMetric metric) {
  if (materials.empty()) throw Error(ErrorCode::NoReference, "no materials for " + course.course_id);
  const auto candidate = metric_tokenize(course_text(course));
  double sum = 0.0;
  for (const auto& m : materials) sum += text_similarity(candidate, metric_tokenize(m.text), metric);
  return 100.0 * sum / static_cast<double>(materials.size());
}

std::map<std::string, double> baseline_target_scores(const VideoCourse& course,
                                                     std::span<const ReferenceMaterial> materials,
                                                     BaselineMetric metric) {
  if (materials.empty()) throw Error(ErrorCode::NoReference, "no materials for " + course.course_id);
  const auto candidate = metric_tokenize(course_text(course));
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& m : materials) {
    auto& [sum, n] = acc[m.target_id];
    sum += text_similarity(candidate, metric_tokenize(m.text), metric);
    ++n;
  }
  std::map<std::string, double> out;
  for (const auto& [t, sn] : acc) out[t] = 100.0 * sn.first / static_cast<double>(sn.second);
  return out;
}

}  // namespace vceval
