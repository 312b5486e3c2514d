#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vceval/evaluator.hpp"

namespace vceval {

struct ConsistencyPoint {
  double fraction = 1.0;
  double video_score = 0.0;
};

/// Scores nested segment subsets of one course. `fractions` must ascend and end at 1.0.
std::vector<ConsistencyPoint> consistency_probe(const Corpus& corpus, const std::string& course_id,
                                                const ExamSet& exam, const EvaluationOptions& options,
                                                std::span<const double> fractions, std::uint64_t subset_seed,
                                                int jobs = 1);

/// Largest drop between a point and any later (larger) fraction's score.
double max_consistency_violation(std::span<const ConsistencyPoint> curve);

}  // namespace vceval
