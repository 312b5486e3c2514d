#include "vceval/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "vceval/jsonl.hpp"
#include "vceval/rng.hpp"
#include "vceval/unicode.hpp"

namespace vceval {

namespace fs = std::filesystem;
using jsonl::json;

std::string to_string(Channel c) { return c == Channel::asr ? "asr" : "ocr"; }

namespace {

/// Fail-fast throws on the first report; collecting mode accumulates.
struct Diagnostics {
  bool collect = false;
  std::vector<Error> errors;

  void report(const Error& e) {
    if (!collect) throw e;
    errors.push_back(e);
  }
};

template <typename Parse>
void read_file(const fs::path& path, Diagnostics& diag, Parse parse) {
  const auto name = path.filename().string();
  try {
    jsonl::read(path, [&](const json& j, std::size_t line) {
      try {
        parse(jsonl::Record(j, line, name));
      } catch (const Error& e) {
        diag.report(e);
      }
    });
  } catch (const Error& e) {
    diag.report(e);
  }
}

VideoCourse parse_course(const jsonl::Record& r) {
  r.allow_only({"course_id", "series_id", "subject", "segments"});
  VideoCourse c{r.string("course_id"), r.string("series_id"), r.string("subject"), {}};
  for (const auto& s : r.array("segments")) {
    if (!s.is_object()) r.fail("segment must be an object");
    jsonl::Record seg(s, r.line(), "segment");
    try {
      seg.allow_only({"channel", "text", "order"});
    } catch (const Error&) {
      r.fail("segment has unknown keys");
    }
    const auto channel = s.contains("channel") && s["channel"].is_string()
                             ? s["channel"].get<std::string>()
                             : std::string{};
    if (channel != "asr" && channel != "ocr") r.fail("segment channel must be 'asr' or 'ocr'");
    if (!s.contains("text") || !s["text"].is_string()) r.fail("segment text must be a string");
    if (!s.contains("order") || !s["order"].is_number_unsigned()) {
      r.fail("segment order must be a non-negative integer");
    }
    auto text = s["text"].get<std::string>();
    if (unicode::trim(text).empty()) r.fail("segment text is empty");
    c.segments.push_back({channel == "asr" ? Channel::asr : Channel::ocr, std::move(text),
                          s["order"].get<std::uint64_t>()});
  }
  if (c.segments.empty()) r.fail("course '" + c.course_id + "' has no segments");
  std::stable_sort(c.segments.begin(), c.segments.end(),
                   [](const auto& a, const auto& b) { return a.order < b.order; });
  for (std::size_t i = 1; i < c.segments.size(); ++i) {
    if (c.segments[i].order == c.segments[i - 1].order) {
      r.fail("duplicate segment order " + std::to_string(c.segments[i].order));
    }
  }
  return c;
}

CourseSeries parse_series(const jsonl::Record& r) {
  r.allow_only({"series_id", "subject", "course_ids"});
  return {r.string("series_id"), r.string("subject"), r.string_array("course_ids")};
}

TeachingTarget parse_target(const jsonl::Record& r) {
  r.allow_only({"target_id", "subject", "name", "description"});
  TeachingTarget t{r.string("target_id"), r.string("subject"), r.string("name"),
                   r.string("description")};
  if (unicode::trim(t.name).empty()) r.fail("target name is empty");
  return t;
}

ReferenceMaterial parse_material(const jsonl::Record& r) {
  r.allow_only({"target_id", "text"});
  ReferenceMaterial m{r.string("target_id"), r.string("text")};
  if (unicode::trim(m.text).empty()) r.fail("material text is empty");
  return m;
}

HumanAnnotation parse_annotation(const jsonl::Record& r) {
  r.allow_only({"subject_id", "target_id", "score"});
  HumanAnnotation a{r.string("subject_id"), r.nullable_string("target_id"), r.number("score")};
  if (!(a.score >= 0.0 && a.score <= 100.0)) r.fail("score outside [0,100]");
  return a;
}

PairAnnotation parse_pair(const jsonl::Record& r) {
  r.allow_only({"target_id", "a", "b", "winner"});
  PairAnnotation p{r.string("target_id"), r.string("a"), r.string("b"), true};
  const auto winner = r.string("winner");
  if (winner != "a" && winner != "b") r.fail("winner must be 'a' or 'b'");
  p.a_wins = winner == "a";
  return p;
}

void validate(const CorpusRecords& rec, Diagnostics& diag) {
  std::set<std::string> series_ids, course_ids, target_ids;
  for (const auto& s : rec.series) {
    if (!series_ids.insert(s.series_id).second) diag.report(Error(ErrorCode::DuplicateId, s.series_id));
  }
  for (const auto& c : rec.courses) {
    if (!course_ids.insert(c.course_id).second) diag.report(Error(ErrorCode::DuplicateId, c.course_id));
    if (!series_ids.contains(c.series_id)) {
      diag.report(Error(ErrorCode::DanglingReference,
                        c.series_id + " (series of course " + c.course_id + ")"));
    }
    if (c.segments.empty()) diag.report(Error(ErrorCode::MalformedRecord, c.course_id + ": no segments"));
    for (std::size_t i = 1; i < c.segments.size(); ++i) {
      if (c.segments[i].order <= c.segments[i - 1].order) {
        diag.report(Error(ErrorCode::MalformedRecord, c.course_id + ": segment order not increasing"));
      }
    }
  }
  for (const auto& s : rec.series) {
    std::set<std::string> seen;
    for (const auto& id : s.course_ids) {
      if (!seen.insert(id).second) {
        diag.report(Error(ErrorCode::DuplicateId, id + " (twice in series " + s.series_id + ")"));
      }
      if (!course_ids.contains(id)) {
        diag.report(Error(ErrorCode::DanglingReference, id + " (course in series " + s.series_id + ")"));
      }
    }
  }
  for (const auto& t : rec.targets) {
    if (!target_ids.insert(t.target_id).second) diag.report(Error(ErrorCode::DuplicateId, t.target_id));
  }
  for (const auto& m : rec.materials) {
    if (!target_ids.contains(m.target_id)) {
      diag.report(Error(ErrorCode::DanglingReference, m.target_id + " (material target)"));
    }
  }
  std::set<std::pair<std::string, std::string>> annotation_keys;
  for (const auto& a : rec.annotations) {
    if (!course_ids.contains(a.subject_id) && !series_ids.contains(a.subject_id)) {
      diag.report(Error(ErrorCode::DanglingReference, a.subject_id + " (annotation subject)"));
    }
    if (a.target_id && !target_ids.contains(*a.target_id)) {
      diag.report(Error(ErrorCode::DanglingReference, *a.target_id + " (annotation target)"));
    }
    if (!annotation_keys.emplace(a.subject_id, a.target_id.value_or("")).second) {
      diag.report(Error(ErrorCode::DuplicateId,
                        "annotation " + a.subject_id + "/" + a.target_id.value_or("<video>")));
    }
  }
  for (const auto& p : rec.pairs) {
    if (!target_ids.contains(p.target_id)) {
      diag.report(Error(ErrorCode::DanglingReference, p.target_id + " (pair target)"));
    }
    for (const auto* id : {&p.course_a, &p.course_b}) {
      if (!course_ids.contains(*id)) diag.report(Error(ErrorCode::DanglingReference, *id + " (pair course)"));
    }
  }
}

CorpusRecords read_records(const fs::path& root, Diagnostics& diag) {
  CorpusRecords rec;
  read_file(root / "series.jsonl", diag, [&](const jsonl::Record& r) { rec.series.push_back(parse_series(r)); });
  read_file(root / "courses.jsonl", diag, [&](const jsonl::Record& r) { rec.courses.push_back(parse_course(r)); });
  read_file(root / "targets.jsonl", diag, [&](const jsonl::Record& r) { rec.targets.push_back(parse_target(r)); });
  read_file(root / "materials.jsonl", diag,
            [&](const jsonl::Record& r) { rec.materials.push_back(parse_material(r)); });
  if (fs::exists(root / "annotations.jsonl")) {
    read_file(root / "annotations.jsonl", diag,
              [&](const jsonl::Record& r) { rec.annotations.push_back(parse_annotation(r)); });
  }
  if (fs::exists(root / "pairs.jsonl")) {
    read_file(root / "pairs.jsonl", diag, [&](const jsonl::Record& r) { rec.pairs.push_back(parse_pair(r)); });
  }
  return rec;
}

}  // namespace

Corpus::Corpus(CorpusRecords records) : records_(std::move(records)) {
  Diagnostics diag;
  validate(records_, diag);
  for (std::size_t i = 0; i < records_.courses.size(); ++i) course_index_[records_.courses[i].course_id] = i;
  for (std::size_t i = 0; i < records_.series.size(); ++i) series_index_[records_.series[i].series_id] = i;
  for (std::size_t i = 0; i < records_.targets.size(); ++i) target_index_[records_.targets[i].target_id] = i;
}

const VideoCourse* Corpus::find_course(const std::string& id) const {
  const auto it = course_index_.find(id);
  return it == course_index_.end() ? nullptr : &records_.courses[it->second];
}

const CourseSeries* Corpus::find_series(const std::string& id) const {
  const auto it = series_index_.find(id);
  return it == series_index_.end() ? nullptr : &records_.series[it->second];
}

const TeachingTarget* Corpus::find_target(const std::string& id) const {
  const auto it = target_index_.find(id);
  return it == target_index_.end() ? nullptr : &records_.targets[it->second];
}

const VideoCourse& Corpus::course(const std::string& id) const {
  const auto* c = find_course(id);
  if (c == nullptr) throw Error(ErrorCode::DanglingReference, id + " (unknown course)");
  return *c;
}

Corpus load_corpus(const fs::path& root) {
  Diagnostics diag;
  return Corpus(read_records(root, diag));
}

std::vector<Error> validate_corpus_dir(const fs::path& root) {
  Diagnostics diag;
  diag.collect = true;
  const auto rec = read_records(root, diag);
  validate(rec, diag);
  return diag.errors;
}

void write_corpus(const Corpus& corpus, const fs::path& root) {
  const auto& rec = corpus.records();
  std::vector<json> lines;
  for (const auto& s : rec.series) {
    lines.push_back({{"series_id", s.series_id}, {"subject", s.subject}, {"course_ids", s.course_ids}});
  }
  jsonl::write(root / "series.jsonl", lines);
  lines.clear();
  for (const auto& c : rec.courses) {
    json segs = json::array();
    for (const auto& s : c.segments) {
      segs.push_back({{"channel", to_string(s.channel)}, {"text", s.text}, {"order", s.order}});
    }
    lines.push_back({{"course_id", c.course_id},
                     {"series_id", c.series_id},
                     {"subject", c.subject},
                     {"segments", std::move(segs)}});
  }
  jsonl::write(root / "courses.jsonl", lines);
  lines.clear();
  for (const auto& t : rec.targets) {
    lines.push_back({{"target_id", t.target_id},
                     {"subject", t.subject},
                     {"name", t.name},
                     {"description", t.description}});
  }
  jsonl::write(root / "targets.jsonl", lines);
  lines.clear();
  for (const auto& m : rec.materials) lines.push_back({{"target_id", m.target_id}, {"text", m.text}});
  jsonl::write(root / "materials.jsonl", lines);
  lines.clear();
  for (const auto& a : rec.annotations) {
    lines.push_back({{"subject_id", a.subject_id},
                     {"target_id", a.target_id ? json(*a.target_id) : json(nullptr)},
                     {"score", a.score}});
  }
  jsonl::write(root / "annotations.jsonl", lines);
  if (!rec.pairs.empty()) {
    lines.clear();
    for (const auto& p : rec.pairs) {
      lines.push_back(
          {{"target_id", p.target_id}, {"a", p.course_a}, {"b", p.course_b}, {"winner", p.a_wins ? "a" : "b"}});
    }
    jsonl::write(root / "pairs.jsonl", lines);
  }
}

std::string course_text(const VideoCourse& course) {
  std::vector<const TextSegment*> ordered;
  for (const auto& s : course.segments) ordered.push_back(&s);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->order < b->order; });
  std::string out;
  for (const auto* s : ordered) {
    if (!out.empty()) out += ' ';
    out += s->text;
  }
  return out;
}

VideoCourse subset_course(const VideoCourse& course, double keep_fraction, std::uint64_t seed) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidFraction, std::to_string(keep_fraction));
  }
  const auto n = course.segments.size();
  if (keep_fraction == 1.0) return course;
  // Guard against 0.5 * 10 landing a hair above 5 in floating point.
  const auto keep = static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(n) - 1e-9));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(perm));
  perm.resize(std::max<std::size_t>(keep, 1));
  std::sort(perm.begin(), perm.end());
  VideoCourse out{course.course_id, course.series_id, course.subject, {}};
  for (auto i : perm) out.segments.push_back(course.segments[i]);
  return out;
}

}  // namespace vceval
