#include "vceval/questgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <map>

#include <gtest/gtest.h>

#include "../support/fixtures.hpp"
#include "vceval/rng.hpp"

using namespace vceval;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::Usage;
}

Keyword kw(std::string s) { return {std::move(s), "t", 1.0}; }

std::vector<Keyword> pool(std::initializer_list<const char*> words) {
  std::vector<Keyword> out;
  for (const auto* w : words) out.push_back(kw(w));
  return out;
}

std::vector<ReferenceMaterial> geography() {
  return {{"t1", "Glaciers carve valleys. Glaciers move slowly! Valleys hold rivers and moraines."},
          {"t2", "Deltas form where rivers meet the sea. Deltas collect silt and sand."},
          {"t3", "Deserts receive little rain. Dunes migrate across deserts. Oases dot deserts."}};
}

}  // namespace

TEST(SplitSentences, Boundaries) {
  EXPECT_EQ(split_sentences("One. Two! Three? Four"),
            (std::vector<std::string>{"One.", "Two!", "Three?", "Four"}));
  EXPECT_EQ(split_sentences("e.g.x stays. Next"), (std::vector<std::string>{"e.g.x stays.", "Next"}));
  EXPECT_EQ(split_sentences("亚洲很大。非洲也大！"), (std::vector<std::string>{"亚洲很大。", "非洲也大！"}));
  EXPECT_TRUE(split_sentences("   ").empty());
}

TEST(KeywordCandidates, FiltersStopwordsAndShortTokens) {
  const auto c = keyword_candidates("The a River, the x DELTA 亚洲大", default_stopwords());
  EXPECT_EQ(c, (std::vector<std::string>{"river", "delta", "亚洲", "洲大"}));
}

TEST(ExtractKeywords, SingleMaterial) {
  const std::vector<ReferenceMaterial> m{{"t", "alpha alpha beta"}};
  const auto k = extract_keywords(m, 1, {});
  ASSERT_EQ(k.size(), 1u);
  EXPECT_EQ(k[0].surface, "alpha");
  EXPECT_EQ(k[0].target_id, "t");
}

// Smoothed idf ln((1+N)/(1+df)) + 1 and tf = count / candidates, computed by hand.
TEST(ExtractKeywords, MatchesHandTfIdf) {
  const std::vector<ReferenceMaterial> m{{"t1", "river river delta silt"}, {"t2", "delta dune dune dune"}};
  const auto k = extract_keywords(m, 3, {});
  const double idf_shared = std::log(3.0 / 3.0) + 1.0;
  const double idf_unique = std::log(3.0 / 2.0) + 1.0;
  const std::map<std::string, double> t1{{"river", 0.5 * idf_unique}, {"silt", 0.25 * idf_unique}, {"delta", 0.25 * idf_shared}};
  ASSERT_EQ(k.size(), 5u);  // t2 has only two distinct candidates
  EXPECT_EQ(k[0].surface, "river");
  EXPECT_EQ(k[1].surface, "silt");
  EXPECT_EQ(k[2].surface, "delta");
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(k[static_cast<std::size_t>(i)].salience, t1.at(k[static_cast<std::size_t>(i)].surface), 1e-12);
  EXPECT_EQ(k[3].surface, "dune");
  EXPECT_NEAR(k[3].salience, 0.75 * idf_unique, 1e-12);
  EXPECT_NEAR(k[4].salience, 0.25 * idf_shared, 1e-12);
}

TEST(ExtractKeywords, TiesAreLexicographic) {
  const std::vector<ReferenceMaterial> m{{"t", "zeta beta alpha gamma"}};
  const auto k = extract_keywords(m, 2, {});
  EXPECT_EQ(k[0].surface, "alpha");
  EXPECT_EQ(k[1].surface, "beta");
}

TEST(ExtractKeywords, ErrorsAndDeterminism) {
  const std::vector<ReferenceMaterial> only_stop{{"t", "the of and is"}};
  EXPECT_EQ(code_of([&] { extract_keywords(only_stop, 2, default_stopwords()); }), ErrorCode::EmptyMaterial);
  const auto m = geography();
  EXPECT_EQ(extract_keywords(m, 4, default_stopwords()), extract_keywords(m, 4, default_stopwords()));
}

TEST(Cloze, Examples) {
  const auto q = build_cloze_question("Asia spans tropical, temperate and cold zones", kw("temperate"));
  EXPECT_EQ(q.stem, "Asia spans tropical, ____ and cold zones");
  EXPECT_EQ(q.answer, "temperate");
  EXPECT_EQ(build_cloze_question("Rain, more rain.", kw("rain")).stem, "____, more rain.");
  EXPECT_EQ(build_cloze_question("terrain and rain", kw("rain")).stem, "terrain and ____");
  EXPECT_EQ(code_of([] { build_cloze_question("no match here", kw("rain")); }), ErrorCode::KeywordAbsent);
  EXPECT_EQ(build_cloze_question("我们学习亚洲地理。", kw("亚洲")).stem, "我们学习____地理。");
}

TEST(Similarity, Examples) {
  EXPECT_DOUBLE_EQ(similarity("climate", "climate"), 1.0);
  EXPECT_DOUBLE_EQ(similarity("ab", "cd"), 0.0);
  // {ni,ig,gh,ht} vs {li,ig,gh,ht}: dot 3, norms 2 and 2.
  EXPECT_DOUBLE_EQ(similarity("night", "light"), 0.75);
  EXPECT_EQ(code_of([] { similarity("", "a"); }), ErrorCode::EmptyString);
}

TEST(Distractors, Examples) {
  const auto answer = kw("river");
  const auto forced = sample_distractors(answer, pool({"river", "delta", "dune", "silt"}), 3, 1);
  EXPECT_EQ(forced.size(), 3u);
  EXPECT_EQ(std::count(forced.begin(), forced.end(), "river"), 0);
  const auto with_dup = sample_distractors(answer, pool({"river", "river", "delta", "dune", "silt", "rivers"}), 3, 1);
  EXPECT_EQ(std::count(with_dup.begin(), with_dup.end(), "river"), 0);
  EXPECT_EQ(with_dup.front(), "rivers");
  EXPECT_EQ(sample_distractors(answer, pool({"delta", "dune", "silt", "sand", "rover"}), 3, 9),
            sample_distractors(answer, pool({"delta", "dune", "silt", "sand", "rover"}), 3, 9));
  EXPECT_EQ(code_of([&] { sample_distractors(answer, pool({"river", "delta"}), 3, 1); }), ErrorCode::InsufficientPool);
}

TEST(Distractors, SelectedAreAtLeastAsSimilarAsRejected) {
  const auto p = pool({"river", "rivet", "driver", "liver", "delta", "dune", "silt", "sand", "rover", "riven", "arrive"});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto answer = p[seed % p.size()];
    const auto chosen = sample_distractors(answer, p, 3, seed);
    double worst_chosen = 1.0;
    for (const auto& c : chosen) worst_chosen = std::min(worst_chosen, similarity(c, answer.surface));
    for (const auto& k : p) {
      if (k.surface == answer.surface || std::find(chosen.begin(), chosen.end(), k.surface) != chosen.end()) continue;
      EXPECT_LE(similarity(k.surface, answer.surface), worst_chosen);
    }
  }
}

TEST(ExamSet, CardinalityAndInvariants) {
  QuestgenConfig cfg;
  cfg.per_target_k = 2;
  const auto exam = build_exam_set(geography(), cfg, 5);
  EXPECT_EQ(exam.size(), 6u);
  for (const auto& [target, ids] : exam.by_target()) EXPECT_EQ(ids.size(), 2u) << target;
  for (const auto& q : exam.questions()) {
    EXPECT_NO_THROW(check_question(q));
    EXPECT_EQ(q.options[q.answer_index], q.answer);
    EXPECT_EQ(std::count(q.options.begin(), q.options.end(), q.answer), 1);
    EXPECT_EQ(q.origin, QuestionOrigin::reference);
    EXPECT_TRUE(q.target_id == "t1" || q.target_id == "t2" || q.target_id == "t3");
  }
}

TEST(ExamSet, RejectsBrokenQuestions) {
  auto q = fixtures::micro_questions()[0];
  q.answer_index = 1;
  EXPECT_EQ(code_of([&] { check_question(q); }), ErrorCode::InvariantViolation);
  q = fixtures::micro_questions()[0];
  q.stem = "no blank";
  EXPECT_EQ(code_of([&] { check_question(q); }), ErrorCode::InvariantViolation);
  q = fixtures::micro_questions()[0];
  q.options[1] = q.options[2];
  EXPECT_EQ(code_of([&] { check_question(q); }), ErrorCode::InvariantViolation);
}

TEST(ExamSet, PureFunctionOfInputsAndSeed) {
  const auto dir = fixtures::temp_dir("questgen-determinism");
  QuestgenConfig cfg;
  cfg.per_target_k = 3;
  write_questions(dir / "a.jsonl", build_exam_set(geography(), cfg, 42).questions());
  write_questions(dir / "b.jsonl", build_exam_set(geography(), cfg, 42).questions());
  std::ifstream a(dir / "a.jsonl"), b(dir / "b.jsonl");
  const std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  const std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  EXPECT_EQ(sa, sb);
  EXPECT_FALSE(sa.empty());
  std::filesystem::remove_all(dir);
}

TEST(InclassSet, SameProcedureAsExam) {
  QuestgenConfig cfg;
  cfg.per_target_k = 4;
  cfg.inclass_k = 4;
  const auto materials = geography();
  const VideoCourse course{"c1", "s", "geo", {{Channel::asr, materials[0].text, 0}}};
  const auto exam = build_exam_set(std::span(materials).first(1), cfg, 1);
  const auto inclass = build_inclass_set(course, cfg, 1);
  std::set<std::string> a, b;
  for (const auto& q : exam.questions()) a.insert(q.answer);
  for (const auto& q : inclass.questions()) {
    b.insert(q.answer);
    EXPECT_EQ(q.origin, QuestionOrigin::inclass);
    EXPECT_EQ(q.target_id, "c1");
  }
  EXPECT_EQ(a, b);

  const auto other = build_inclass_set(course, cfg, 999);
  ASSERT_EQ(other.size(), inclass.size());
  for (std::size_t i = 0; i < other.size(); ++i) EXPECT_EQ(other.questions()[i].stem, inclass.questions()[i].stem);

  const VideoCourse chatter{"c2", "s", "geo", {{Channel::asr, "um so you know, like, okay.", 0}}};
  EXPECT_EQ(code_of([&] { build_inclass_set(chatter, cfg, 1); }), ErrorCode::NoQuestions);
}

TEST(ImportQuestions, RoundTripAndValidation) {
  const auto dir = fixtures::temp_dir("questgen-import");
  auto qs = fixtures::micro_questions();
  qs.push_back(fixtures::question("q5", "t2", "____ feeds the lake", {"rain", "wind", "sand", "silt"}, 0));
  write_questions(dir / "q.jsonl", qs);
  const auto imported = import_questions(dir / "q.jsonl");
  ASSERT_EQ(imported.size(), 5u);
  for (const auto& q : imported) EXPECT_EQ(q.origin, QuestionOrigin::imported);
  EXPECT_EQ(read_questions(dir / "q.jsonl"), qs);

  std::ofstream(dir / "bad.jsonl")
      << R"({"question_id":"x","target_id":"t","stem":"a ____","answer":"b","options":["b","c","d","e"],"answer_index":2,"origin":"reference"})"
      << "\n";
  EXPECT_EQ(code_of([&] { import_questions(dir / "bad.jsonl"); }), ErrorCode::InvariantViolation);
  std::ofstream(dir / "broken.jsonl") << "{\"question_id\":1}\n";
  EXPECT_EQ(code_of([&] { import_questions(dir / "broken.jsonl"); }), ErrorCode::MalformedRecord);
  std::ofstream(dir / "empty.jsonl").close();
  EXPECT_TRUE(import_questions(dir / "empty.jsonl").empty());
  std::filesystem::remove_all(dir);
}
