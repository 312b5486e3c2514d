#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vceval/corpus.hpp"
#include "vceval/learner.hpp"
#include "vceval/metaeval.hpp"
#include "vceval/questgen.hpp"

namespace vceval {

struct QuestionResult {
  std::string question_id;
  std::string target_id;
  OptionDistribution probabilities;
  std::size_t answer_index = 0;
  double correct_probability = 0.0;
  bool is_correct = false;
};

/// A sentence of the course transcript that supports a question.
struct EvidenceSpan {
  std::uint64_t segment_order = 0;
  std::size_t start = 0;  // codepoint offsets within the segment text
  std::size_t end = 0;
  double overlap_score = 0.0;

  bool operator==(const EvidenceSpan&) const = default;
};

struct ScoreReport {
  std::string course_id;
  std::vector<QuestionResult> questions;
  /// 100 x mean correct-option probability per target.
  std::map<std::string, double> target_scores;
  std::map<std::string, double> target_accuracy;
  /// Unweighted mean of target_scores.
  double video_score = 0.0;
  /// Fraction of questions answered correctly (question-weighted).
  double accuracy = 0.0;
  std::map<std::string, std::vector<EvidenceSpan>> evidence;
};

/// One result per question in exam order. Requires a fully trained model unless allow_probe.
std::vector<QuestionResult> administer_exam(const ModelState& model, const ExamSet& exam, bool allow_probe = false);

ScoreReport score_report(std::span<const QuestionResult> results, const std::string& course_id);

inline constexpr double kDefaultTieEpsilon = 0.5;

PairOutcome pairwise_compare(const ScoreReport& a, const ScoreReport& b, const std::string& target_id,
                             double tie_epsilon = kDefaultTieEpsilon);

/// Course sentences ranked by how many distinct content words they share with the stem and answer.
std::vector<EvidenceSpan> find_evidence(const VideoCourse& course, const ExamQuestion& question, int top_k);

struct EvaluationOptions {
  QuestgenConfig questgen;
  ModelConfig model;
  int evidence_top_k = 3;
  /// Questions answered wrongly or with correct_probability below this get evidence.
  double evidence_threshold = 0.5;
  /// When set, the trained model is written here.
  std::optional<std::filesystem::path> checkpoint;
};

/// Vocabulary over every material, every course transcript, and the exam text, so all courses of
/// a corpus start from the same initial model.
Vocabulary corpus_vocabulary(const Corpus& corpus, const ExamSet& exam);

/// In-class set, init, unlearn, pretrain, finetune, exam, scoring and evidence for one course.
ScoreReport evaluate_course(const Corpus& corpus, const std::string& course_id, const ExamSet& exam,
                            const EvaluationOptions& options);

/// As above, for a course that is not (or no longer exactly) part of the corpus, e.g. a subset.
ScoreReport evaluate_course(const Corpus& corpus, const VideoCourse& course, const ExamSet& exam,
                            const EvaluationOptions& options);

struct SeriesScore {
  std::string series_id;
  std::vector<std::string> course_ids;
  /// Mean of the courses' video scores.
  double video_score = 0.0;
  /// 100 x mean correct probability over every question of every course, pooled per target then averaged.
  double pooled_score = 0.0;
  /// Per target, mean of the courses' target scores.
  std::map<std::string, double> target_scores;
};

SeriesScore aggregate_series(const std::string& series_id, std::span<const ScoreReport> reports);

nlohmann::json to_json(const ScoreReport& report, const std::string& method = "vceval");
nlohmann::json to_json(const SeriesScore& series, const std::string& method = "vceval");
ScoreReport report_from_json(const nlohmann::json& j);

/// CSV with one row per target and one score column per course.
void write_targets_csv(const std::filesystem::path& path, std::span<const ScoreReport> reports);

}  // namespace vceval
