#include "vceval/consistency.hpp"

#include <algorithm>

#include "vceval/error.hpp"
#include "vceval/parallel.hpp"

namespace vceval {

std::vector<ConsistencyPoint> consistency_probe(const Corpus& corpus, const std::string& course_id,
                                                const ExamSet& exam, const EvaluationOptions& options,
                                                std::span<const double> fractions, std::uint64_t subset_seed,
                                                int jobs) {
  if (fractions.empty() || fractions.back() != 1.0) {
    throw Error(ErrorCode::InvalidFraction, "fractions must end at 1.0");
  }
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] > 0.0 && fractions[i] <= 1.0)) {
      throw Error(ErrorCode::InvalidFraction, "fraction " + std::to_string(fractions[i]) + " outside (0,1]");
    }
    if (i > 0 && fractions[i] <= fractions[i - 1]) {
      throw Error(ErrorCode::InvalidFraction, "fractions must be strictly ascending");
    }
  }
  const auto& course = corpus.course(course_id);
  std::vector<ConsistencyPoint> curve(fractions.size());
  parallel_for(fractions.size(), jobs, [&](std::size_t i) {
    const auto subset = subset_course(course, fractions[i], subset_seed);
    curve[i] = {fractions[i], evaluate_course(corpus, subset, exam, options).video_score};
  });
  return curve;
}

double max_consistency_violation(std::span<const ConsistencyPoint> curve) {
  double worst = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    for (std::size_t j = i + 1; j < curve.size(); ++j) {
      worst = std::max(worst, curve[i].video_score - curve[j].video_score);
    }
  }
  return worst;
}

}  // namespace vceval
