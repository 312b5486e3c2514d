#include "vceval/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <gtest/gtest.h>

#include "../support/fixtures.hpp"
#include "vceval/rng.hpp"
#include "vceval/synth.hpp"

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

QuestionResult result(std::string id, std::string target, double p_correct, bool correct) {
  QuestionResult r;
  r.question_id = std::move(id);
  r.target_id = std::move(target);
  r.correct_probability = p_correct;
  r.is_correct = correct;
  const double rest = (1.0 - p_correct) / 3.0;
  r.probabilities.probabilities = {p_correct, rest, rest, rest};
  r.probabilities.chosen_index = correct ? 0 : 1;
  return r;
}

ScoreReport with_target(const std::string& target, double score) {
  ScoreReport r;
  r.target_scores[target] = score;
  return r;
}

Vocabulary micro_vocab() {
  auto texts = fixtures::micro_texts();
  for (const auto& q : fixtures::micro_questions()) {
    texts.push_back(q.stem);
    for (const auto& o : q.options) texts.push_back(o);
  }
  return build_vocab(texts, 1);
}

/// A model with random weights, marked as fully trained so the exam may be administered.
ModelState random_trained(std::uint64_t seed) {
  auto cfg = fixtures::micro_model();
  cfg.seed = seed;
  auto m = init_model(cfg, micro_vocab());
  m.stage_log = {{Stage::unlearn, 0.0}, {Stage::pretrain, 0.0}, {Stage::finetune, 0.0}};
  return m;
}

}  // namespace

TEST(ScoreReport, Examples) {
  const std::vector<QuestionResult> one_target{result("a", "t", 0.9, true), result("b", "t", 0.6, true),
                                               result("c", "t", 0.5, true), result("d", "t", 1.0, true)};
  const auto r = score_report(one_target, "c1");
  EXPECT_NEAR(r.target_scores.at("t"), 75.0, 1e-9);
  EXPECT_NEAR(r.video_score, 75.0, 1e-9);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);

  // Unweighted across targets: 80 from one question, 60 from three.
  const std::vector<QuestionResult> two{result("a", "x", 0.8, true), result("b", "y", 0.6, true),
                                        result("c", "y", 0.5, false), result("d", "y", 0.7, true)};
  const auto r2 = score_report(two, "c2");
  EXPECT_NEAR(r2.target_scores.at("x"), 80.0, 1e-9);
  EXPECT_NEAR(r2.target_scores.at("y"), 60.0, 1e-9);
  EXPECT_NEAR(r2.video_score, 70.0, 1e-9);
  EXPECT_DOUBLE_EQ(r2.accuracy, 0.75);
  EXPECT_NEAR(r2.target_accuracy.at("y"), 2.0 / 3.0, 1e-12);

  EXPECT_EQ(code_of([] { score_report(std::vector<QuestionResult>{}, "c"); }), ErrorCode::EmptyResults);
}

TEST(ScoreReport, BoundedAndOrderInvariant) {
  Rng rng(5);
  std::vector<QuestionResult> rs;
  for (int i = 0; i < 30; ++i) {
    rs.push_back(result("q" + std::to_string(i), "t" + std::to_string(i % 4), rng.uniform(0.0, 1.0), i % 3 == 0));
  }
  const auto a = score_report(rs, "c");
  std::reverse(rs.begin(), rs.end());
  std::rotate(rs.begin(), rs.begin() + 7, rs.end());
  const auto b = score_report(rs, "c");
  EXPECT_EQ(a.target_scores.size(), 4u);
  for (const auto& [t, v] : a.target_scores) {
    EXPECT_NEAR(v, b.target_scores.at(t), 1e-9);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 100.0);
  }
  EXPECT_NEAR(a.video_score, b.video_score, 1e-9);
}

TEST(PairwiseCompare, Examples) {
  EXPECT_EQ(pairwise_compare(with_target("t", 80.0), with_target("t", 60.0), "t"), PairOutcome::a_wins);
  EXPECT_EQ(pairwise_compare(with_target("t", 60.0), with_target("t", 80.0), "t"), PairOutcome::b_wins);
  EXPECT_EQ(pairwise_compare(with_target("t", 60.0), with_target("t", 60.3), "t"), PairOutcome::tie);
  EXPECT_EQ(pairwise_compare(with_target("t", 60.0), with_target("t", 60.3), "t", 0.1), PairOutcome::b_wins);
  EXPECT_EQ(code_of([] { pairwise_compare(with_target("t", 1.0), with_target("u", 1.0), "t"); }),
            ErrorCode::TargetMissing);
}

TEST(FindEvidence, RanksByContentOverlap) {
  const VideoCourse course{"c", "s", "geo",
                           {{Channel::asr, "Deltas collect silt. The river carries silt to the delta.", 0},
                            {Channel::ocr, "Wind moves sand.", 1}}};
  const auto q = fixtures::question("q", "t", "the river carries ____ to the delta", {"silt", "sand", "rain", "wind"}, 0);
  const auto ev = find_evidence(course, q, 3);
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_EQ(ev[0].segment_order, 0u);
  EXPECT_EQ(ev[0].start, 21u);
  EXPECT_EQ(ev[0].end, 57u);
  EXPECT_DOUBLE_EQ(ev[0].overlap_score, 4.0);  // river, carries, delta, silt
  EXPECT_EQ(ev[1].start, 0u);
  EXPECT_DOUBLE_EQ(ev[1].overlap_score, 1.0);
  EXPECT_EQ(find_evidence(course, q, 1).size(), 1u);
  EXPECT_EQ(code_of([&] { find_evidence(course, q, 0); }), ErrorCode::ConfigInvalid);
}

TEST(AdministerExam, RequiresTrainedModel) {
  const auto m = init_model(fixtures::micro_model(), micro_vocab());
  const ExamSet exam(fixtures::micro_questions());
  EXPECT_EQ(code_of([&] { administer_exam(m, exam); }), ErrorCode::StageOrder);
  EXPECT_EQ(administer_exam(m, exam, true).size(), exam.size());
}

TEST(AdministerExam, UniformModelScores25) {
  auto m = random_trained(1);
  m.parameters.setZero();
  const ExamSet exam(fixtures::micro_questions());
  const auto r = score_report(administer_exam(m, exam), "c");
  EXPECT_NEAR(r.video_score, 25.0, 1e-9);
  for (const auto& [t, v] : r.target_scores) EXPECT_NEAR(v, 25.0, 1e-9);
}

TEST(AdministerExam, OptionPermutationMovesProbabilityWithTheOption) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto m = random_trained(seed);
    for (const auto& q : fixtures::micro_questions()) {
      auto permuted = q;
      std::array<std::size_t, 4> perm{2, 0, 3, 1};
      for (std::size_t i = 0; i < 4; ++i) permuted.options[i] = q.options[perm[i]];
      permuted.answer_index = static_cast<std::size_t>(
          std::find(perm.begin(), perm.end(), q.answer_index) - perm.begin());
      const auto a = administer_exam(m, ExamSet({q}))[0];
      const auto b = administer_exam(m, ExamSet({permuted}))[0];
      EXPECT_NEAR(a.correct_probability, b.correct_probability, 1e-12);
      for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(b.probabilities.probabilities[i], a.probabilities.probabilities[perm[i]], 1e-12);
      }
    }
  }
}

TEST(AdministerExam, QuestionOrderDoesNotChangeScores) {
  const auto m = random_trained(4);
  auto qs = fixtures::micro_questions();
  const auto a = score_report(administer_exam(m, ExamSet(qs)), "c");
  std::reverse(qs.begin(), qs.end());
  const auto b = score_report(administer_exam(m, ExamSet(qs)), "c");
  EXPECT_EQ(a.target_scores, b.target_scores);
}

TEST(ReportJson, RoundTrip) {
  const std::vector<QuestionResult> rs{result("a", "x", 0.8, true), result("b", "y", 0.3, false)};
  auto r = score_report(rs, "c1");
  r.evidence["b"] = {{2, 5, 19, 3.0}};
  const auto j = to_json(r);
  EXPECT_EQ(j.at("record"), "course");
  EXPECT_EQ(j.at("method"), "vceval");
  const auto back = report_from_json(j);
  EXPECT_EQ(back.course_id, r.course_id);
  EXPECT_EQ(back.target_scores, r.target_scores);
  EXPECT_EQ(back.evidence, r.evidence);
  ASSERT_EQ(back.questions.size(), 2u);
  EXPECT_EQ(back.questions[1].probabilities.probabilities, r.questions[1].probabilities.probabilities);
  EXPECT_EQ(code_of([] { report_from_json(nlohmann::json{{"course_id", "x"}}); }), ErrorCode::MalformedRecord);
}

TEST(SeriesAggregation, MeanAndPooled) {
  const std::vector<QuestionResult> a{result("a", "x", 0.8, true), result("b", "y", 0.4, false)};
  const std::vector<QuestionResult> b{result("c", "x", 0.6, true), result("d", "x", 0.4, true),
                                      result("e", "y", 0.2, false)};
  const std::vector<ScoreReport> reports{score_report(a, "c1"), score_report(b, "c2")};
  const auto s = aggregate_series("s1", reports);
  EXPECT_EQ(s.course_ids, (std::vector<std::string>{"c1", "c2"}));
  EXPECT_NEAR(s.video_score, (60.0 + 35.0) / 2.0, 1e-9);
  EXPECT_NEAR(s.target_scores.at("x"), (80.0 + 50.0) / 2.0, 1e-9);
  EXPECT_NEAR(s.pooled_score, (60.0 + 30.0) / 2.0, 1e-9);
  EXPECT_EQ(code_of([] { aggregate_series("s", std::vector<ScoreReport>{}); }), ErrorCode::EmptyResults);
}

TEST(EvaluateCourse, EndToEndOnTinyCorpus) {
  SyntheticSpec spec;
  spec.targets = 2;
  spec.keywords_per_target = 5;
  spec.courses = {{"full", 1.0, {}, 0.0}, {"none", 0.0, {}, 0.0}};
  const auto corpus = synthesize_corpus(spec, 3);
  EvaluationOptions opt;
  opt.questgen.per_target_k = 4;
  opt.questgen.inclass_k = 8;
  opt.model = fixtures::micro_model();
  opt.model.context_len = 32;
  opt.model.epochs_pretrain = 3;
  opt.model.epochs_finetune = 3;
  const auto exam = build_exam_set(corpus.materials(), opt.questgen, 1);
  const auto r = evaluate_course(corpus, "full", exam, opt);
  EXPECT_EQ(r.course_id, "full");
  EXPECT_EQ(r.questions.size(), exam.size());
  EXPECT_EQ(r.target_scores.size(), 2u);
  for (const auto& q : r.questions) {
    const bool needs = !q.is_correct || q.correct_probability < opt.evidence_threshold;
    EXPECT_EQ(r.evidence.contains(q.question_id), needs) << q.question_id;
  }
  const auto again = evaluate_course(corpus, "full", exam, opt);
  EXPECT_EQ(to_json(again).dump(), to_json(r).dump());
  EXPECT_EQ(code_of([&] { evaluate_course(corpus, "absent", exam, opt); }), ErrorCode::DanglingReference);
}
