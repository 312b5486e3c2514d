#include "vceval/commands.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "vceval/error.hpp"
#include "vceval/jsonl.hpp"
#include "vceval/log.hpp"
#include "vceval/metaeval.hpp"
#include "vceval/parallel.hpp"
#include "vceval/rng.hpp"
#include "vceval/synth.hpp"

namespace vceval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kInclassStream = 100;
constexpr std::uint64_t kSubsetStream = 7;

template <typename T>
T get(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::ConfigInvalid, "config key " + key + " has the wrong type");
  }
}

fs::path questions_path(const RunConfig& c) { return c.out / "questions.jsonl"; }

ExamSet load_exam(const RunConfig& c) {
  const auto path = questions_path(c);
  if (!fs::exists(path)) throw Error(ErrorCode::MissingFile, path.string() + " (run prepare first)");
  return ExamSet(read_questions(path));
}

EvaluationOptions evaluation_options(const RunConfig& c) {
  EvaluationOptions o;
  o.questgen = c.questgen;
  o.model = c.model;
  o.model.seed = c.seed;
  o.evidence_top_k = c.evidence_top_k;
  return o;
}

std::uint64_t exam_seed(const RunConfig& c) { return derive_seed(c.seed, 1); }

/// Course ids for a mix of course and series ids, in first-mention order; all courses when empty.
std::vector<std::string> resolve_courses(const Corpus& corpus, const std::vector<std::string>& ids,
                                         std::vector<std::string>* series_out) {
  std::vector<std::string> courses;
  std::set<std::string> seen;
  auto add = [&](const std::string& id) {
    if (seen.insert(id).second) courses.push_back(id);
  };
  if (ids.empty()) {
    for (const auto& c : corpus.courses()) add(c.course_id);
    return courses;
  }
  for (const auto& id : ids) {
    if (corpus.find_course(id)) {
      add(id);
    } else if (const auto* s = corpus.find_series(id)) {
      for (const auto& c : s->course_ids) add(c);
      if (series_out) series_out->push_back(id);
    } else {
      throw Error(ErrorCode::DanglingReference, "no course or series named " + id);
    }
  }
  return courses;
}

void write_stopwords(const fs::path& path, const std::set<std::string>& words) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& w : words) out << w << '\n';
}

}  // namespace

void apply_config(RunConfig& c, const json& flat) {
  if (!flat.is_object()) throw Error(ErrorCode::ConfigInvalid, "config must be a JSON object");
  auto& m = c.model;
  auto& q = c.questgen;
  for (const auto& [key, v] : flat.items()) {
    if (key == "corpus") c.corpus = get<std::string>(v, key);
    else if (key == "out") c.out = get<std::string>(v, key);
    else if (key == "seed") c.seed = get<std::uint64_t>(v, key);
    else if (key == "jobs") c.jobs = get<int>(v, key);
    else if (key == "evidence_top_k") c.evidence_top_k = get<int>(v, key);
    else if (key == "save_checkpoints") c.save_checkpoints = get<bool>(v, key);
    else if (key == "fractions") c.fractions = get<std::vector<double>>(v, key);
    else if (key == "metrics") {
      c.metrics.clear();
      for (const auto& name : get<std::vector<std::string>>(v, key)) c.metrics.push_back(parse_baseline_metric(name));
    }
    else if (key == "per_target_k") q.per_target_k = get<int>(v, key);
    else if (key == "inclass_k") q.inclass_k = get<int>(v, key);
    else if (key == "distractors") q.distractors = get<int>(v, key);
    else if (key == "stopwords") c.stopwords_file = get<std::string>(v, key);
    else if (key == "embed_dim") m.embed_dim = get<int>(v, key);
    else if (key == "layers") m.layers = get<int>(v, key);
    else if (key == "heads") m.heads = get<int>(v, key);
    else if (key == "context_len") m.context_len = get<int>(v, key);
    else if (key == "ffn_mult") m.ffn_mult = get<int>(v, key);
    else if (key == "lr_unlearn") m.lr_unlearn = get<double>(v, key);
    else if (key == "lr_pretrain") m.lr_pretrain = get<double>(v, key);
    else if (key == "lr_finetune") m.lr_finetune = get<double>(v, key);
    else if (key == "epochs_unlearn") m.epochs_unlearn = get<int>(v, key);
    else if (key == "epochs_pretrain") m.epochs_pretrain = get<int>(v, key);
    else if (key == "epochs_finetune") m.epochs_finetune = get<int>(v, key);
    else if (key == "batch_size") m.batch_size = get<int>(v, key);
    else if (key == "tolerance_uniform") m.tolerance_uniform = get<double>(v, key);
    else if (key == "unlearn_loss_tolerance") m.unlearn_loss_tolerance = get<double>(v, key);
    else if (key == "grad_clip") m.grad_clip = get<double>(v, key);
    else if (key == "init_scale") m.init_scale = get<double>(v, key);
    else if (key == "repeat_unlearn") m.repeat_unlearn = get<bool>(v, key);
    else throw Error(ErrorCode::ConfigInvalid, "unknown config key " + key);
  }
  if (c.stopwords_file) q.stopwords = load_stopwords(*c.stopwords_file);
}

void apply_config_file(RunConfig& c, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
  }
  apply_config(c, j);
}

void validate(const RunConfig& c) {
  validate(c.model);
  auto fail = [](const std::string& what) { throw Error(ErrorCode::ConfigInvalid, what); };
  if (c.jobs < 1) fail("jobs must be >= 1");
  if (c.evidence_top_k < 1) fail("evidence_top_k must be >= 1");
  if (c.questgen.per_target_k < 1 || c.questgen.inclass_k < 1) fail("keyword counts must be >= 1");
  if (c.metrics.empty()) fail("at least one metric is required");
  if (!c.corpus.empty() && !fs::is_directory(c.corpus)) {
    throw Error(ErrorCode::MissingFile, "corpus directory " + c.corpus.string());
  }
}

std::vector<double> parse_fractions(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Usage, "bad fraction '" + item + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::Usage, "no fractions given");
  return out;
}

std::map<std::string, std::size_t> cmd_prepare(const RunConfig& c) {
  const auto corpus = load_corpus(c.corpus);
  const auto exam = build_exam_set(corpus.materials(), c.questgen, exam_seed(c));
  write_questions(questions_path(c), exam.questions());
  for (const auto& course : corpus.courses()) {
    const auto inclass = build_inclass_set(course, c.questgen, derive_seed(c.seed, kInclassStream));
    write_questions(c.out / "inclass" / (course.course_id + ".jsonl"), inclass.questions());
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& [target, ids] : exam.by_target()) counts[target] = ids.size();
  return counts;
}

std::vector<ScoreReport> cmd_evaluate(const RunConfig& c, const std::vector<std::string>& ids) {
  const auto corpus = load_corpus(c.corpus);
  const auto exam = load_exam(c);
  std::vector<std::string> series;
  const auto courses = resolve_courses(corpus, ids, &series);
  if (ids.empty()) {
    for (const auto& s : corpus.series()) series.push_back(s.series_id);
  }
  std::vector<ScoreReport> reports(courses.size());
  parallel_for(courses.size(), c.jobs, [&](std::size_t i) {
    auto options = evaluation_options(c);
    if (c.save_checkpoints) options.checkpoint = c.out / "checkpoints" / (courses[i] + ".ckpt");
    reports[i] = evaluate_course(corpus, courses[i], exam, options);
  });

  std::vector<json> records;
  for (const auto& r : reports) records.push_back(to_json(r));
  for (const auto& sid : series) {
    std::vector<ScoreReport> members;
    for (const auto& cid : corpus.find_series(sid)->course_ids) {
      const auto it = std::find_if(reports.begin(), reports.end(), [&](const ScoreReport& r) { return r.course_id == cid; });
      if (it != reports.end()) members.push_back(*it);
    }
    if (!members.empty()) records.push_back(to_json(aggregate_series(sid, members)));
  }
  jsonl::write(c.out / "report.jsonl", records);
  write_targets_csv(c.out / "targets.csv", reports);
  return reports;
}

void cmd_baseline(const RunConfig& c, const std::vector<std::string>& ids) {
  const auto corpus = load_corpus(c.corpus);
  std::vector<json> records;
  for (const auto& id : resolve_courses(corpus, ids, nullptr)) {
    const auto& course = corpus.course(id);
    for (const auto metric : c.metrics) {
      const auto targets = baseline_target_scores(course, corpus.materials(), metric);
      records.push_back({{"record", "course"},
                         {"method", to_string(metric)},
                         {"course_id", id},
                         {"video_score", baseline_course_score(course, corpus.materials(), metric)},
                         {"target_scores", targets}});
    }
  }
  jsonl::write(c.out / "baseline.jsonl", records);
}

void cmd_meta(const RunConfig& c, const std::vector<fs::path>& report_files) {
  const auto corpus = load_corpus(c.corpus);
  using ScoreMap = std::map<std::string, std::map<std::string, double>>;
  // method -> course -> report
  std::map<std::string, std::map<std::string, ScoreReport>> by_method;
  for (const auto& path : report_files) {
    jsonl::read(path, [&](const json& j, std::size_t) {
      if (j.value("record", "course") != "course") return;
      auto r = report_from_json(j);
      by_method[j.value("method", "vceval")][r.course_id] = std::move(r);
    });
  }

  ScoreMap human_targets;
  std::map<std::string, double> human_video;
  for (const auto& a : corpus.annotations()) {
    if (a.target_id) human_targets[a.subject_id][*a.target_id] = a.score;
    else human_video[a.subject_id] = a.score;
  }

  std::vector<json> records;
  auto emit = [&](const std::string& method, Methodology m, const std::string& metric, double value, std::size_t n,
                  std::size_t skipped) {
    records.push_back({{"method", method},
                       {"methodology", to_string(m)},
                       {"metric", metric},
                       {"value", value},
                       {"n_units", n},
                       {"skipped_degenerate", skipped}});
  };
  for (const auto& [method, reports] : by_method) {
    ScoreMap auto_targets;
    for (const auto& [cid, r] : reports) auto_targets[cid] = r.target_scores;

    PairedScores video = sum_over_targets(auto_targets, human_targets);
    if (video.labels.empty()) {
      for (const auto& [cid, r] : reports) {
        if (const auto h = human_video.find(cid); h != human_video.end()) {
          video.labels.push_back(cid);
          video.automatic.push_back(r.video_score);
          video.human.push_back(h->second);
        }
      }
    }
    if (video.labels.empty()) throw Error(ErrorCode::NoOverlap, "no report of method " + method + " matches an annotation");
    const auto v = meta_video_level(video);
    emit(method, Methodology::video_level, "pearson", v.pearson, v.n_units, v.skipped_degenerate);
    emit(method, Methodology::video_level, "spearman", v.spearman, v.n_units, v.skipped_degenerate);

    std::map<std::string, PairedScores> per_target;
    for (const auto& [cid, targets] : auto_targets) {
      const auto h = human_targets.find(cid);
      if (h == human_targets.end()) continue;
      for (const auto& [tid, score] : targets) {
        if (const auto ht = h->second.find(tid); ht != h->second.end()) {
          auto& p = per_target[tid];
          p.labels.push_back(cid);
          p.automatic.push_back(score);
          p.human.push_back(ht->second);
        }
      }
    }
    if (!per_target.empty()) {
      std::vector<PairedScores> list;
      for (auto& [tid, p] : per_target) list.push_back(std::move(p));
      const auto t = meta_target_level(list);
      emit(method, Methodology::target_level, "pearson", t.pearson, t.n_units, t.skipped_degenerate);
      emit(method, Methodology::target_level, "spearman", t.spearman, t.n_units, t.skipped_degenerate);
    }

    std::vector<PairOutcome> predicted, human;
    for (const auto& p : corpus.pairs()) {
      const auto a = reports.find(p.course_a);
      const auto b = reports.find(p.course_b);
      if (a == reports.end() || b == reports.end()) continue;
      predicted.push_back(pairwise_compare(a->second, b->second, p.target_id));
      human.push_back(p.a_wins ? PairOutcome::a_wins : PairOutcome::b_wins);
    }
    if (!predicted.empty()) {
      emit(method, Methodology::pairwise, "accuracy", pairwise_accuracy(predicted, human), predicted.size(), 0);
    }
  }
  if (records.empty()) throw Error(ErrorCode::NoOverlap, "no report records found");
  jsonl::write(c.out / "meta.jsonl", records);
}

void cmd_synth(const RunConfig& c, const std::optional<fs::path>& spec_file) {
  SyntheticSpec spec;
  if (spec_file) {
    std::ifstream in(*spec_file);
    if (!in) throw Error(ErrorCode::MissingFile, spec_file->string());
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SpecInvalid, e.what());
    }
    spec = spec_from_json(j);
  } else {
    for (const double cov : {1.0, 0.75, 0.5, 0.25, 0.0}) {
      spec.courses.push_back({"course-" + std::to_string(static_cast<int>(cov * 100)), cov, {}, 0.0});
    }
  }
  write_corpus(synthesize_corpus(spec, c.seed), c.out);
  write_stopwords(c.out / "stopwords.txt", default_stopwords());
}

std::vector<ConsistencyPoint> cmd_consistency(const RunConfig& c, const std::string& course_id) {
  const auto corpus = load_corpus(c.corpus);
  const auto exam = load_exam(c);
  const auto curve = consistency_probe(corpus, course_id, exam, evaluation_options(c), c.fractions,
                                       derive_seed(c.seed, kSubsetStream), c.jobs);
  std::vector<json> records;
  for (const auto& p : curve) {
    records.push_back({{"course_id", course_id}, {"fraction", p.fraction}, {"video_score", p.video_score}});
  }
  jsonl::write(c.out / "consistency.jsonl", records);
  return curve;
}

}  // namespace vceval
