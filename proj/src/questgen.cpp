#include "vceval/questgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "vceval/error.hpp"
#include "vceval/jsonl.hpp"
#include "vceval/rng.hpp"
#include "vceval/unicode.hpp"

namespace vceval {

using jsonl::json;

std::string to_string(QuestionOrigin origin) {
  switch (origin) {
    case QuestionOrigin::reference: return "reference";
    case QuestionOrigin::inclass: return "inclass";
    case QuestionOrigin::imported: return "imported";
  }
  return "unknown";
}

namespace {

std::size_t count_blanks(std::string_view stem) {
  std::size_t count = 0;
  for (auto pos = stem.find(kBlankMarker); pos != std::string_view::npos;
       pos = stem.find(kBlankMarker, pos + kBlankMarker.size())) {
    ++count;
  }
  return count;
}

}  // namespace

void check_question(const ExamQuestion& q) {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::InvariantViolation, "question " + q.question_id + ": " + what);
  };
  if (count_blanks(q.stem) != 1) fail("stem must contain exactly one blank marker");
  if (q.answer_index >= kOptionCount) fail("answer_index out of range");
  for (std::size_t i = 0; i < kOptionCount; ++i) {
    if (q.options[i].empty()) fail("empty option");
    for (std::size_t j = i + 1; j < kOptionCount; ++j) {
      if (q.options[i] == q.options[j]) fail("duplicate option '" + q.options[i] + "'");
    }
  }
  if (q.options[q.answer_index] != q.answer) fail("options[answer_index] is not the answer");
}

ExamSet::ExamSet(std::vector<ExamQuestion> questions) {
  for (auto& q : questions) add(std::move(q));
}

void ExamSet::add(ExamQuestion q) {
  check_question(q);
  by_target_[q.target_id].push_back(q.question_id);
  questions_.push_back(std::move(q));
}

std::set<std::string> default_stopwords() {
  return {
      // function words
      "a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been",
      "before", "but", "by", "can", "could", "did", "do", "does", "each", "for", "from", "had",
      "has", "have", "he", "her", "here", "his", "how", "i", "if", "in", "into", "is", "it", "its",
      "may", "more", "most", "much", "must", "my", "no", "not", "of", "on", "one", "only", "or",
      "other", "our", "out", "over", "she", "should", "some", "such", "than", "that", "the",
      "their", "them", "then", "there", "these", "they", "this", "those", "through", "to", "too",
      "under", "up", "very", "was", "we", "were", "what", "when", "where", "which", "while", "who",
      "why", "will", "with", "would", "you", "your",
      // verbal fillers common in lecture transcripts
      "ah", "alright", "anyway", "basically", "er", "erm", "gonna", "hmm", "huh", "kind", "know",
      "like", "literally", "mean", "mhm", "oh", "ok", "okay", "right", "so", "sort", "stuff",
      "thing", "things", "uh", "um", "well", "yeah", "yes", "just", "really", "actually", "let",
      "see", "look", "now", "guys", "gotta", "wanna",
      // frequent Chinese function bigrams
      "我们", "这个", "那个", "就是", "然后", "一个", "什么", "他们", "你们", "大家", "所以", "因为",
  };
}

std::set<std::string> load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto w = unicode::trim(line);
    if (w.empty() || w.front() == '#') continue;
    out.insert(unicode::encode(unicode::to_lower(unicode::decode(w))));
  }
  return out;
}

std::vector<SentenceSpan> split_sentences(std::u32string_view text) {
  std::vector<SentenceSpan> out;
  auto emit = [&](std::size_t b, std::size_t e) {
    while (b < e && unicode::is_space(text[b])) ++b;
    while (e > b && unicode::is_space(text[e - 1])) --e;
    if (b < e) out.push_back({b, e});
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char32_t c = text[i];
    const bool cjk_stop = c == U'。' || c == U'！' || c == U'？';
    const bool ascii_stop =
        (c == U'.' || c == U'!' || c == U'?') && (i + 1 == text.size() || unicode::is_space(text[i + 1]));
    if (cjk_stop || ascii_stop) {
      emit(start, i + 1);
      start = i + 1;
    }
  }
  emit(start, text.size());
  return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
  const auto u = unicode::decode(text);
  std::vector<std::string> out;
  for (const auto& s : split_sentences(std::u32string_view(u))) {
    out.push_back(unicode::encode(std::u32string_view(u).substr(s.begin, s.end - s.begin)));
  }
  return out;
}

std::vector<std::string> keyword_candidates(std::string_view text, const std::set<std::string>& stopwords) {
  std::vector<std::string> out;
  std::u32string word;
  std::u32string cjk_run;
  auto keep = [&](const std::string& s) {
    if (!stopwords.contains(s)) out.push_back(s);
  };
  auto flush_word = [&] {
    if (word.size() >= 2) keep(unicode::encode(word));
    word.clear();
  };
  auto flush_cjk = [&] {
    for (std::size_t i = 0; i + 1 < cjk_run.size(); ++i) keep(unicode::encode(cjk_run.substr(i, 2)));
    cjk_run.clear();
  };
  for (char32_t cp : unicode::decode(text)) {
    if (unicode::is_cjk(cp)) {
      flush_word();
      cjk_run.push_back(cp);
    } else if (unicode::is_word_char(cp)) {
      flush_cjk();
      word.push_back(unicode::to_lower(cp));
    } else {
      flush_word();
      flush_cjk();
    }
  }
  flush_word();
  flush_cjk();
  return out;
}

namespace {

/// Materials grouped per target in target_id order; several materials of one target are joined.
std::vector<ReferenceMaterial> group_by_target(std::span<const ReferenceMaterial> materials) {
  std::map<std::string, std::string> grouped;
  for (const auto& m : materials) {
    auto& text = grouped[m.target_id];
    if (!text.empty()) text += ' ';
    text += m.text;
  }
  std::vector<ReferenceMaterial> out;
  for (auto& [id, text] : grouped) out.push_back({id, std::move(text)});
  return out;
}

}  // namespace

std::vector<Keyword> extract_keywords(std::span<const ReferenceMaterial> materials, int per_target_k,
                                      const std::set<std::string>& stopwords) {
  if (per_target_k < 1) throw Error(ErrorCode::ConfigInvalid, "per_target_k must be >= 1");
  const auto grouped = group_by_target(materials);
  std::vector<std::map<std::string, std::size_t>> tf(grouped.size());
  std::vector<std::size_t> totals(grouped.size(), 0);
  std::map<std::string, std::size_t> df;
  for (std::size_t i = 0; i < grouped.size(); ++i) {
    for (auto& c : keyword_candidates(grouped[i].text, stopwords)) {
      ++tf[i][c];
      ++totals[i];
    }
    for (const auto& [term, count] : tf[i]) ++df[term];
  }
  const auto n_docs = static_cast<double>(grouped.size());
  std::vector<Keyword> out;
  for (std::size_t i = 0; i < grouped.size(); ++i) {
    if (tf[i].empty()) throw Error(ErrorCode::EmptyMaterial, grouped[i].target_id);
    std::vector<Keyword> scored;
    for (const auto& [term, count] : tf[i]) {
      const double idf = std::log((1.0 + n_docs) / (1.0 + static_cast<double>(df[term]))) + 1.0;
      scored.push_back({term, grouped[i].target_id,
                        static_cast<double>(count) / static_cast<double>(totals[i]) * idf});
    }
    std::sort(scored.begin(), scored.end(), [](const Keyword& a, const Keyword& b) {
      return a.salience != b.salience ? a.salience > b.salience : a.surface < b.surface;
    });
    scored.resize(std::min<std::size_t>(scored.size(), static_cast<std::size_t>(per_target_k)));
    out.insert(out.end(), scored.begin(), scored.end());
  }
  return out;
}

std::size_t find_keyword(std::u32string_view text, std::u32string_view surface) {
  if (surface.empty()) return std::u32string::npos;
  const auto lowered = unicode::to_lower(text);
  const auto needle = unicode::to_lower(surface);
  const bool word_like = !unicode::is_cjk(needle.front());
  auto boundary_ok = [&](std::size_t pos) {
    if (!word_like) return true;
    const bool left = pos == 0 || !unicode::is_word_char(lowered[pos - 1]) || unicode::is_cjk(lowered[pos - 1]);
    const auto end = pos + needle.size();
    const bool right =
        end == lowered.size() || !unicode::is_word_char(lowered[end]) || unicode::is_cjk(lowered[end]);
    return left && right;
  };
  for (auto pos = lowered.find(needle); pos != std::u32string::npos; pos = lowered.find(needle, pos + 1)) {
    if (boundary_ok(pos)) return pos;
  }
  return std::u32string::npos;
}

ClozeItem build_cloze_question(std::string_view sentence, const Keyword& keyword) {
  auto text = unicode::decode(sentence);
  const auto surface = unicode::decode(keyword.surface);
  const auto pos = find_keyword(text, surface);
  if (pos == std::u32string::npos) {
    throw Error(ErrorCode::KeywordAbsent, "'" + keyword.surface + "' not in '" + std::string(sentence) + "'");
  }
  text.replace(pos, surface.size(), unicode::decode(kBlankMarker));
  return {unicode::encode(text), keyword.surface};
}

double similarity(std::string_view a, std::string_view b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyString, "similarity of an empty string");
  auto profile = [](std::string_view s) {
    const auto u = unicode::decode(s);
    std::map<std::u32string, double> p;
    for (std::size_t i = 0; i + 1 < u.size(); ++i) p[u.substr(i, 2)] += 1.0;
    return p;
  };
  const auto pa = profile(a);
  const auto pb = profile(b);
  // Single-character strings have no bigrams; fall back to exact equality.
  if (pa.empty() || pb.empty()) return a == b ? 1.0 : 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [g, c] : pa) {
    na += c * c;
    if (const auto it = pb.find(g); it != pb.end()) dot += c * it->second;
  }
  for (const auto& [g, c] : pb) nb += c * c;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

std::vector<std::string> sample_distractors(const Keyword& answer, std::span<const Keyword> pool, int n,
                                            std::uint64_t seed) {
  std::set<std::string> unique;
  for (const auto& k : pool) {
    if (k.surface != answer.surface) unique.insert(k.surface);
  }
  struct Candidate {
    std::string surface;
    double sim;
  };
  std::vector<Candidate> candidates;
  for (const auto& s : unique) {  // lexicographic order from the set
    const double sim = similarity(s, answer.surface);
    if (sim < 1.0) candidates.push_back({s, sim});
  }
  if (n < 0 || candidates.size() < static_cast<std::size_t>(n)) {
    throw Error(ErrorCode::InsufficientPool, "need " + std::to_string(n) + " distractors for '" +
                                                 answer.surface + "', pool has " +
                                                 std::to_string(candidates.size()));
  }
  Rng rng(seed);
  rng.shuffle(std::span<Candidate>(candidates));
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.sim > b.sim; });
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(candidates[static_cast<std::size_t>(i)].surface);
  return out;
}

namespace {

ExamSet build_questions(std::span<const ReferenceMaterial> materials, int k, const QuestgenConfig& config,
                        std::uint64_t seed, QuestionOrigin origin, const std::string& id_prefix) {
  if (config.distractors + 1 != static_cast<int>(kOptionCount)) {
    throw Error(ErrorCode::ConfigInvalid, "exactly 3 distractors per question are supported");
  }
  const auto grouped = group_by_target(materials);
  const auto keywords = extract_keywords(grouped, k, config.stopwords);
  ExamSet exam;
  std::uint64_t index = 0;
  for (const auto& material : grouped) {
    const auto sentences = split_sentences(material.text);
    std::size_t local = 0;
    for (const auto& kw : keywords) {
      if (kw.target_id != material.target_id) continue;
      const auto it = std::find_if(sentences.begin(), sentences.end(), [&](const std::string& s) {
        return find_keyword(unicode::decode(s), unicode::decode(kw.surface)) != std::u32string::npos;
      });
      if (it == sentences.end()) continue;
      const auto cloze = build_cloze_question(*it, kw);
      const auto distractors = sample_distractors(kw, keywords, config.distractors, derive_seed(seed, 2 * index));

      ExamQuestion q;
      q.question_id = id_prefix + material.target_id + "-q" + std::to_string(++local);
      q.target_id = material.target_id;
      q.stem = cloze.stem;
      q.answer = cloze.answer;
      q.origin = origin;
      std::array<std::size_t, kOptionCount> perm{0, 1, 2, 3};
      Rng rng(derive_seed(seed, 2 * index + 1));
      rng.shuffle(std::span<std::size_t>(perm));
      for (std::size_t slot = 0; slot < kOptionCount; ++slot) {
        q.options[slot] = perm[slot] == 0 ? kw.surface : distractors[perm[slot] - 1];
        if (perm[slot] == 0) q.answer_index = slot;
      }
      exam.add(std::move(q));
      ++index;
    }
  }
  if (exam.empty()) throw Error(ErrorCode::NoQuestions, "no questions could be generated");
  return exam;
}

}  // namespace

ExamSet build_exam_set(std::span<const ReferenceMaterial> materials, const QuestgenConfig& config,
                       std::uint64_t seed) {
  return build_questions(materials, config.per_target_k, config, seed, QuestionOrigin::reference, "");
}

ExamSet build_inclass_set(const VideoCourse& course, const QuestgenConfig& config, std::uint64_t seed) {
  const auto text = course_text(course);
  if (unicode::trim(text).empty()) throw Error(ErrorCode::EmptyCourse, course.course_id);
  const ReferenceMaterial as_material{course.course_id, text};
  try {
    return build_questions(std::span(&as_material, 1), config.inclass_k, config, seed, QuestionOrigin::inclass,
                           "ic-");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptyMaterial) {
      throw Error(ErrorCode::NoQuestions, "course " + course.course_id + " has no keyword candidates");
    }
    throw;
  }
}

namespace {

QuestionOrigin parse_origin(const jsonl::Record& r) {
  const auto o = r.string("origin");
  if (o == "reference") return QuestionOrigin::reference;
  if (o == "inclass") return QuestionOrigin::inclass;
  if (o == "imported") return QuestionOrigin::imported;
  r.fail("origin must be reference|inclass|imported");
}

}  // namespace

std::vector<ExamQuestion> read_questions(const std::filesystem::path& path) {
  std::vector<ExamQuestion> out;
  const auto name = path.filename().string();
  jsonl::read(path, [&](const json& j, std::size_t line) {
    jsonl::Record r(j, line, name);
    r.allow_only({"question_id", "target_id", "stem", "answer", "options", "answer_index", "origin"});
    ExamQuestion q;
    q.question_id = r.string("question_id");
    q.target_id = r.string("target_id");
    q.stem = r.string("stem");
    q.answer = r.string("answer");
    const auto options = r.string_array("options");
    if (options.size() != kOptionCount) r.fail("options must hold exactly 4 strings");
    std::copy(options.begin(), options.end(), q.options.begin());
    const auto idx = r.integer("answer_index");
    if (idx < 0 || idx >= static_cast<long long>(kOptionCount)) {
      throw Error(ErrorCode::InvariantViolation, "question " + q.question_id + ": answer_index out of range");
    }
    q.answer_index = static_cast<std::size_t>(idx);
    q.origin = parse_origin(r);
    check_question(q);
    out.push_back(std::move(q));
  });
  return out;
}

std::vector<ExamQuestion> import_questions(const std::filesystem::path& path) {
  auto out = read_questions(path);
  for (auto& q : out) q.origin = QuestionOrigin::imported;
  return out;
}

void write_questions(const std::filesystem::path& path, std::span<const ExamQuestion> questions) {
  std::vector<json> lines;
  for (const auto& q : questions) {
    lines.push_back({{"question_id", q.question_id},
                     {"target_id", q.target_id},
                     {"stem", q.stem},
                     {"answer", q.answer},
                     {"options", q.options},
                     {"answer_index", q.answer_index},
                     {"origin", to_string(q.origin)}});
  }
  jsonl::write(path, lines);
}

}  // namespace vceval
