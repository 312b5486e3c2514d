#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vceval/corpus.hpp"

namespace vceval {

inline constexpr std::string_view kBlankMarker = "____";
inline constexpr std::size_t kOptionCount = 4;

enum class QuestionOrigin { reference, inclass, imported };

std::string to_string(QuestionOrigin origin);

struct Keyword {
  std::string surface;
  std::string target_id;
  double salience = 0.0;

  bool operator==(const Keyword&) const = default;
};

struct ExamQuestion {
  std::string question_id;
  std::string target_id;
  std::string stem;
  std::string answer;
  std::array<std::string, kOptionCount> options;
  std::size_t answer_index = 0;
  QuestionOrigin origin = QuestionOrigin::reference;

  bool operator==(const ExamQuestion&) const = default;
};

/// Throws InvariantViolation unless the stem has exactly one blank, options are pairwise
/// distinct, and options[answer_index] == answer.
void check_question(const ExamQuestion& q);

class ExamSet {
 public:
  ExamSet() = default;
  explicit ExamSet(std::vector<ExamQuestion> questions);

  void add(ExamQuestion q);

  [[nodiscard]] const std::vector<ExamQuestion>& questions() const noexcept { return questions_; }
  [[nodiscard]] const std::map<std::string, std::vector<std::string>>& by_target() const noexcept {
    return by_target_;
  }
  [[nodiscard]] std::size_t size() const noexcept { return questions_.size(); }
  [[nodiscard]] bool empty() const noexcept { return questions_.empty(); }

 private:
  std::vector<ExamQuestion> questions_;
  std::map<std::string, std::vector<std::string>> by_target_;
};

/// English function words, common verbal fillers, and a few frequent Chinese function bigrams.
std::set<std::string> default_stopwords();

struct QuestgenConfig {
  int per_target_k = 8;
  /// Keywords drawn from a course's own text for the in-class set.
  int inclass_k = 32;
  int distractors = 3;
  std::set<std::string> stopwords = default_stopwords();
};

/// One stopword per line; blank lines and lines starting with '#' ignored. Entries are lowercased.
std::set<std::string> load_stopwords(const std::filesystem::path& path);

/// Codepoint offsets [begin, end) of one sentence in its source text.
struct SentenceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Splits after '.', '!', '?' followed by whitespace or end of text, and after '。', '！', '？'.
std::vector<SentenceSpan> split_sentences(std::u32string_view text);
std::vector<std::string> split_sentences(std::string_view text);

/// Keyword candidates of a text: lowercased word tokens of >= 2 characters plus CJK character
/// bigrams, stopwords removed, in text order.
std::vector<std::string> keyword_candidates(std::string_view text, const std::set<std::string>& stopwords);

/// Per target: the top-k tf-idf candidates (tf within the target's material, smoothed idf
/// ln((1+N)/(1+df))+1 across the N targets). Ties go to the lexicographically smaller surface.
std::vector<Keyword> extract_keywords(std::span<const ReferenceMaterial> materials, int per_target_k,
                                      const std::set<std::string>& stopwords);

struct ClozeItem {
  std::string stem;
  std::string answer;
};

/// Position (codepoints) of the first case-insensitive occurrence of `surface` in `text`,
/// respecting word boundaries for alphabetic surfaces; npos when absent.
std::size_t find_keyword(std::u32string_view text, std::u32string_view surface);

/// Replaces the first occurrence of the keyword with the blank marker.
ClozeItem build_cloze_question(std::string_view sentence, const Keyword& keyword);

/// Cosine similarity of character-bigram count profiles.
double similarity(std::string_view a, std::string_view b);

/// The n pool surfaces most similar to the answer (answer and similarity-1.0 candidates excluded).
std::vector<std::string> sample_distractors(const Keyword& answer, std::span<const Keyword> pool, int n,
                                            std::uint64_t seed);

ExamSet build_exam_set(std::span<const ReferenceMaterial> materials, const QuestgenConfig& config,
                       std::uint64_t seed);

/// The exam procedure applied to the course text as one material owned by the course id.
ExamSet build_inclass_set(const VideoCourse& course, const QuestgenConfig& config, std::uint64_t seed);

/// questions.jsonl reader; origins are kept as written.
std::vector<ExamQuestion> read_questions(const std::filesystem::path& path);
/// Same as read_questions but every question is marked imported.
std::vector<ExamQuestion> import_questions(const std::filesystem::path& path);
void write_questions(const std::filesystem::path& path, std::span<const ExamQuestion> questions);

}  // namespace vceval
