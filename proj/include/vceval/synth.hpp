#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vceval/corpus.hpp"

namespace vceval {

struct SyntheticCourse {
  std::string course_id;
  /// Fraction of every target's keywords whose source sentences the course contains.
  double coverage = 1.0;
  /// Per-target override of `coverage`, indexed like the generated targets.
  std::vector<double> target_coverage;
  /// Chatter sentences per content sentence.
  double filler_ratio = 0.0;
};

struct SyntheticSpec {
  int targets = 4;
  int keywords_per_target = 8;
  int noise_vocab = 300;
  std::string subject = "science";
  std::string series_id = "series-1";
  std::vector<SyntheticCourse> courses;
};

/// Throws SpecInvalid on out-of-range counts or coverages.
void check_spec(const SyntheticSpec& spec);
SyntheticSpec spec_from_json(const nlohmann::json& j);

/// Targets with planted keywords, reference materials, courses that contain a controlled share of
/// the keyword sentences, and annotations holding the planted scores (100 x coverage).
Corpus synthesize_corpus(const SyntheticSpec& spec, std::uint64_t seed);

/// Verbal filler words used for chatter sentences.
const std::vector<std::string>& chatter_words();

}  // namespace vceval
