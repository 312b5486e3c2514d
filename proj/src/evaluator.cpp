#include "vceval/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "vceval/error.hpp"
#include "vceval/log.hpp"
#include "vceval/rng.hpp"
#include "vceval/textmetrics.hpp"
#include "vceval/unicode.hpp"

namespace vceval {

using nlohmann::json;

std::vector<QuestionResult> administer_exam(const ModelState& model, const ExamSet& exam, bool allow_probe) {
  if (!allow_probe && !model.fully_trained()) {
    throw Error(ErrorCode::StageOrder, "exam administered to a model that has not completed all stages");
  }
  std::vector<QuestionResult> out;
  out.reserve(exam.size());
  for (const auto& q : exam.questions()) {
    EncodedQuestion encoded;
    try {
      encoded = encode_question(model.vocab, q, model.config.context_len);
    } catch (const Error& e) {
      throw Error(e.code(), "question " + q.question_id + ": " + e.what());
    }
    QuestionResult r;
    r.question_id = q.question_id;
    r.target_id = q.target_id;
    r.probabilities = option_distribution(model, encoded);
    r.answer_index = q.answer_index;
    r.correct_probability = r.probabilities.probabilities[q.answer_index];
    r.is_correct = r.probabilities.chosen_index == q.answer_index;
    out.push_back(std::move(r));
  }
  return out;
}

ScoreReport score_report(std::span<const QuestionResult> results, const std::string& course_id) {
  if (results.empty()) throw Error(ErrorCode::EmptyResults, "no question results for " + course_id);
  ScoreReport report;
  report.course_id = course_id;
  report.questions.assign(results.begin(), results.end());
  std::map<std::string, std::pair<double, std::size_t>> prob_sum;
  std::map<std::string, std::size_t> correct;
  std::size_t total_correct = 0;
  for (const auto& r : results) {
    auto& [sum, n] = prob_sum[r.target_id];
    sum += r.correct_probability;
    ++n;
    correct[r.target_id] += r.is_correct ? 1 : 0;
    total_correct += r.is_correct ? 1 : 0;
  }
  double video = 0.0;
  for (const auto& [target, sn] : prob_sum) {
    const auto& [sum, n] = sn;
    report.target_scores[target] = 100.0 * sum / static_cast<double>(n);
    report.target_accuracy[target] = static_cast<double>(correct[target]) / static_cast<double>(n);
    video += report.target_scores[target];
  }
  report.video_score = video / static_cast<double>(prob_sum.size());
  report.accuracy = static_cast<double>(total_correct) / static_cast<double>(results.size());
  return report;
}

PairOutcome pairwise_compare(const ScoreReport& a, const ScoreReport& b, const std::string& target_id,
                             double tie_epsilon) {
  const auto ia = a.target_scores.find(target_id);
  const auto ib = b.target_scores.find(target_id);
  if (ia == a.target_scores.end() || ib == b.target_scores.end()) {
    throw Error(ErrorCode::TargetMissing, target_id);
  }
  const double diff = ia->second - ib->second;
  if (std::abs(diff) < tie_epsilon) return PairOutcome::tie;
  return diff > 0 ? PairOutcome::a_wins : PairOutcome::b_wins;
}

std::vector<EvidenceSpan> find_evidence(const VideoCourse& course, const ExamQuestion& question, int top_k) {
  if (top_k < 1) throw Error(ErrorCode::ConfigInvalid, "top_k must be >= 1");
  static const auto stopwords = default_stopwords();
  auto content_words = [](std::string_view text) {
    std::set<std::string> words;
    for (auto& t : metric_tokenize(text).tokens) {
      if (!stopwords.contains(t)) words.insert(std::move(t));
    }
    return words;
  };
  auto query = content_words(question.stem);
  query.merge(content_words(question.answer));

  std::vector<EvidenceSpan> spans;
  for (const auto& seg : course.segments) {
    const auto text = unicode::decode(seg.text);
    for (const auto& s : split_sentences(std::u32string_view(text))) {
      const auto words = content_words(unicode::encode(std::u32string_view(text).substr(s.begin, s.end - s.begin)));
      const auto overlap = static_cast<double>(
          std::count_if(words.begin(), words.end(), [&](const std::string& w) { return query.contains(w); }));
      if (overlap > 0) spans.push_back({seg.order, s.begin, s.end, overlap});
    }
  }
  std::stable_sort(spans.begin(), spans.end(),
                   [](const EvidenceSpan& a, const EvidenceSpan& b) { return a.overlap_score > b.overlap_score; });
  if (spans.size() > static_cast<std::size_t>(top_k)) spans.resize(static_cast<std::size_t>(top_k));
  return spans;
}

Vocabulary corpus_vocabulary(const Corpus& corpus, const ExamSet& exam) {
  std::vector<std::string> texts;
  for (const auto& m : corpus.materials()) texts.push_back(m.text);
  for (const auto& c : corpus.courses()) texts.push_back(course_text(c));
  for (const auto& q : exam.questions()) {
    texts.push_back(q.stem);
    texts.insert(texts.end(), q.options.begin(), q.options.end());
  }
  return build_vocab(texts, 1);
}

namespace {

template <typename Fn>
auto run_stage(const char* stage, const std::string& course_id, Fn fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage ") + stage + " (course " + course_id + "): " + e.what());
  }
}

}  // namespace

ScoreReport evaluate_course(const Corpus& corpus, const std::string& course_id, const ExamSet& exam,
                            const EvaluationOptions& options) {
  return evaluate_course(corpus, corpus.course(course_id), exam, options);
}

ScoreReport evaluate_course(const Corpus& corpus, const VideoCourse& course, const ExamSet& exam,
                            const EvaluationOptions& options) {
  const auto& id = course.course_id;
  const auto& cfg = options.model;
  logger()->info("evaluating course {}", id);
  const auto inclass = run_stage("inclass", id, [&] {
    return build_inclass_set(course, options.questgen, derive_seed(cfg.seed, 100));
  });
  auto model = run_stage("init", id, [&] { return init_model(cfg, corpus_vocabulary(corpus, exam)); });
  run_stage("unlearn", id, [&] { return train_unlearn(model, exam); });
  run_stage("pretrain", id, [&] { return train_pretrain(model, course); });
  if (cfg.repeat_unlearn) run_stage("unlearn", id, [&] { return train_unlearn(model, exam); });
  run_stage("finetune", id, [&] { return train_finetune(model, inclass); });
  if (options.checkpoint) run_stage("checkpoint", id, [&] { save_model(model, *options.checkpoint); return 0; });
  const auto results = run_stage("exam", id, [&] { return administer_exam(model, exam); });
  auto report = run_stage("score", id, [&] { return score_report(results, id); });
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (!r.is_correct || r.correct_probability < options.evidence_threshold) {
      report.evidence[r.question_id] = find_evidence(course, exam.questions()[i], options.evidence_top_k);
    }
  }
  logger()->info("course {}: video score {:.2f}, accuracy {:.3f}", id, report.video_score, report.accuracy);
  return report;
}

SeriesScore aggregate_series(const std::string& series_id, std::span<const ScoreReport> reports) {
  if (reports.empty()) throw Error(ErrorCode::EmptyResults, "series " + series_id + " has no reports");
  SeriesScore s{series_id, {}, 0.0, 0.0, {}};
  std::map<std::string, std::pair<double, std::size_t>> pooled;
  std::map<std::string, std::pair<double, std::size_t>> target_mean;
  for (const auto& r : reports) {
    s.course_ids.push_back(r.course_id);
    s.video_score += r.video_score / static_cast<double>(reports.size());
    for (const auto& q : r.questions) {
      pooled[q.target_id].first += q.correct_probability;
      ++pooled[q.target_id].second;
    }
    for (const auto& [t, v] : r.target_scores) {
      target_mean[t].first += v;
      ++target_mean[t].second;
    }
  }
  for (const auto& [t, sn] : pooled) s.pooled_score += 100.0 * sn.first / static_cast<double>(sn.second);
  s.pooled_score /= static_cast<double>(pooled.size());
  for (const auto& [t, sn] : target_mean) s.target_scores[t] = sn.first / static_cast<double>(sn.second);
  return s;
}

json to_json(const ScoreReport& report, const std::string& method) {
  json questions = json::array();
  for (const auto& q : report.questions) {
    questions.push_back({{"question_id", q.question_id},
                         {"target_id", q.target_id},
                         {"probabilities", q.probabilities.probabilities},
                         {"answer_index", q.answer_index},
                         {"correct_probability", q.correct_probability},
                         {"is_correct", q.is_correct}});
  }
  json evidence = json::object();
  for (const auto& [qid, spans] : report.evidence) {
    json list = json::array();
    for (const auto& s : spans) {
      list.push_back({{"segment_order", s.segment_order},
                      {"start", s.start},
                      {"end", s.end},
                      {"overlap_score", s.overlap_score}});
    }
    evidence[qid] = std::move(list);
  }
  return {{"record", "course"},
          {"method", method},
          {"course_id", report.course_id},
          {"video_score", report.video_score},
          {"accuracy", report.accuracy},
          {"target_scores", report.target_scores},
          {"target_accuracy", report.target_accuracy},
          {"questions", std::move(questions)},
          {"evidence", std::move(evidence)}};
}

json to_json(const SeriesScore& s, const std::string& method) {
  return {{"record", "series"},
          {"method", method},
          {"series_id", s.series_id},
          {"course_ids", s.course_ids},
          {"video_score", s.video_score},
          {"pooled_score", s.pooled_score},
          {"target_scores", s.target_scores}};
}

ScoreReport report_from_json(const json& j) {
  try {
    ScoreReport r;
    r.course_id = j.at("course_id").get<std::string>();
    r.video_score = j.at("video_score").get<double>();
    r.accuracy = j.value("accuracy", 0.0);
    r.target_scores = j.at("target_scores").get<std::map<std::string, double>>();
    if (j.contains("target_accuracy")) r.target_accuracy = j["target_accuracy"].get<std::map<std::string, double>>();
    if (j.contains("questions")) {
      for (const auto& q : j["questions"]) {
        QuestionResult qr;
        qr.question_id = q.at("question_id").get<std::string>();
        qr.target_id = q.at("target_id").get<std::string>();
        qr.probabilities.probabilities = q.at("probabilities").get<std::array<double, kOptionCount>>();
        const auto& p = qr.probabilities.probabilities;
        qr.probabilities.chosen_index = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
        qr.answer_index = q.at("answer_index").get<std::size_t>();
        qr.correct_probability = q.at("correct_probability").get<double>();
        qr.is_correct = q.at("is_correct").get<bool>();
        r.questions.push_back(std::move(qr));
      }
    }
    if (j.contains("evidence")) {
      for (const auto& [qid, spans] : j["evidence"].items()) {
        auto& out = r.evidence[qid];
        for (const auto& s : spans) {
          out.push_back({s.at("segment_order").get<std::uint64_t>(), s.at("start").get<std::size_t>(),
                         s.at("end").get<std::size_t>(), s.at("overlap_score").get<double>()});
        }
      }
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("report record: ") + e.what());
  }
}

void write_targets_csv(const std::filesystem::path& path, std::span<const ScoreReport> reports) {
  std::set<std::string> targets;
  for (const auto& r : reports) {
    for (const auto& [t, v] : r.target_scores) targets.insert(t);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "target_id";
  for (const auto& r : reports) out << ',' << r.course_id;
  out << '\n';
  for (const auto& t : targets) {
    out << t;
    for (const auto& r : reports) {
      out << ',';
      if (const auto it = r.target_scores.find(t); it != r.target_scores.end()) out << json(it->second).dump();
    }
    out << '\n';
  }
}

}  // namespace vceval
