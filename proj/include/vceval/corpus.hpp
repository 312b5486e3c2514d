#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vceval/error.hpp"

namespace vceval {

enum class Channel { asr, ocr };

struct TextSegment {
  Channel channel = Channel::asr;
  std::string text;
  std::uint64_t order = 0;

  bool operator==(const TextSegment&) const = default;
};

struct VideoCourse {
  std::string course_id;
  std::string series_id;
  std::string subject;
  std::vector<TextSegment> segments;  // sorted by order, strictly increasing

  bool operator==(const VideoCourse&) const = default;
};

struct CourseSeries {
  std::string series_id;
  std::string subject;
  std::vector<std::string> course_ids;

  bool operator==(const CourseSeries&) const = default;
};

struct TeachingTarget {
  std::string target_id;
  std::string subject;
  std::string name;
  std::string description;

  bool operator==(const TeachingTarget&) const = default;
};

struct ReferenceMaterial {
  std::string target_id;
  std::string text;

  bool operator==(const ReferenceMaterial&) const = default;
};

/// Human score on a 0-100 scale. No target_id means a video-level (or series-level) score.
struct HumanAnnotation {
  std::string subject_id;
  std::optional<std::string> target_id;
  double score = 0.0;

  bool operator==(const HumanAnnotation&) const = default;
};

/// Human preference between two courses on one target (pairs.jsonl, optional).
struct PairAnnotation {
  std::string target_id;
  std::string course_a;
  std::string course_b;
  bool a_wins = true;

  bool operator==(const PairAnnotation&) const = default;
};

struct CorpusRecords {
  std::vector<CourseSeries> series;
  std::vector<VideoCourse> courses;
  std::vector<TeachingTarget> targets;
  std::vector<ReferenceMaterial> materials;
  std::vector<HumanAnnotation> annotations;
  std::vector<PairAnnotation> pairs;

  bool operator==(const CorpusRecords&) const = default;
};

/// Validated, cross-referenced corpus. Immutable once built.
class Corpus {
 public:
  /// Validates referential invariants; throws on the first violation.
  explicit Corpus(CorpusRecords records);

  [[nodiscard]] const CorpusRecords& records() const noexcept { return records_; }
  [[nodiscard]] const std::vector<VideoCourse>& courses() const noexcept { return records_.courses; }
  [[nodiscard]] const std::vector<CourseSeries>& series() const noexcept { return records_.series; }
  [[nodiscard]] const std::vector<TeachingTarget>& targets() const noexcept { return records_.targets; }
  [[nodiscard]] const std::vector<ReferenceMaterial>& materials() const noexcept {
    return records_.materials;
  }
  [[nodiscard]] const std::vector<HumanAnnotation>& annotations() const noexcept {
    return records_.annotations;
  }
  [[nodiscard]] const std::vector<PairAnnotation>& pairs() const noexcept { return records_.pairs; }

  [[nodiscard]] const VideoCourse* find_course(const std::string& id) const;
  [[nodiscard]] const CourseSeries* find_series(const std::string& id) const;
  [[nodiscard]] const TeachingTarget* find_target(const std::string& id) const;
  [[nodiscard]] const VideoCourse& course(const std::string& id) const;

  bool operator==(const Corpus& other) const { return records_ == other.records_; }

 private:
  CorpusRecords records_;
  std::map<std::string, std::size_t> course_index_;
  std::map<std::string, std::size_t> series_index_;
  std::map<std::string, std::size_t> target_index_;
};

/// Reads courses/series/targets/materials JSONL files (plus optional annotations and pairs).
Corpus load_corpus(const std::filesystem::path& root);

/// Same checks as load_corpus but keeps going and returns every error found.
std::vector<Error> validate_corpus_dir(const std::filesystem::path& root);

void write_corpus(const Corpus& corpus, const std::filesystem::path& root);

/// Segment texts joined by a single space, in `order`.
std::string course_text(const VideoCourse& course);

/// Seeded subset of ceil(keep_fraction * n) segments, original order preserved. Subsets for the
/// same seed are nested: a smaller fraction always keeps a prefix of the same permutation.
VideoCourse subset_course(const VideoCourse& course, double keep_fraction, std::uint64_t seed);

std::string to_string(Channel c);

}  // namespace vceval
