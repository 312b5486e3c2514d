#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vceval/corpus.hpp"

namespace vceval {

/// Lowercased word tokens; CJK runs split into single characters. Never contains empty tokens.
struct MetricTokenStream {
  std::vector<std::string> tokens;

  [[nodiscard]] std::size_t size() const noexcept { return tokens.size(); }
  bool operator==(const MetricTokenStream&) const = default;
};

struct SimilarityScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static SimilarityScore from(double precision, double recall);
};

MetricTokenStream metric_tokenize(std::string_view text);

/// Clipped n-gram overlap. Zero score when either stream has fewer than n tokens.
SimilarityScore rouge_n(const MetricTokenStream& candidate, const MetricTokenStream& reference, int n);

/// Token-level longest common subsequence.
SimilarityScore rouge_l(const MetricTokenStream& candidate, const MetricTokenStream& reference);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

/// Uniform-weight BLEU with add-one smoothing on zero-match orders and closest-length brevity penalty.
double bleu(const MetricTokenStream& candidate, std::span<const MetricTokenStream> references,
            int max_n = 4);

enum class BaselineMetric { rouge1, rouge2, rougeL, bleu };

std::string to_string(BaselineMetric m);
BaselineMetric parse_baseline_metric(std::string_view name);

/// Metric value of `candidate` against one reference text, in [0,1]. ROUGE reports F1.
double text_similarity(const MetricTokenStream& candidate, const MetricTokenStream& reference,
                       BaselineMetric metric);

/// Mean over materials of the metric between course_text and each material, scaled to [0,100].
double baseline_course_score(const VideoCourse& course, std::span<const ReferenceMaterial> materials,
                             BaselineMetric metric);

/// Per target: 100 x mean similarity of the course text to that target's materials.
std::map<std::string, double> baseline_target_scores(const VideoCourse& course,
                                                     std::span<const ReferenceMaterial> materials,
                                                     BaselineMetric metric);

}  // namespace vceval
