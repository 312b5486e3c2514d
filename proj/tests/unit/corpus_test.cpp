#include "vceval/corpus.hpp"

#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "../support/fixtures.hpp"
#include "vceval/synth.hpp"

using namespace vceval;
namespace fs = std::filesystem;

namespace {

void write(const fs::path& p, const std::string& body) { std::ofstream(p, std::ios::binary) << body; }

/// Two courses (one with out-of-order segments on disk), three targets, three materials.
fs::path small_corpus(const std::string& name) {
  const auto dir = fixtures::temp_dir(name);
  write(dir / "series.jsonl", R"({"series_id":"s1","subject":"geo","course_ids":["c1","c2"]})" "\n");
  write(dir / "courses.jsonl",
        R"({"course_id":"c1","series_id":"s1","subject":"geo","segments":[{"channel":"asr","text":"B","order":2},{"channel":"ocr","text":"A","order":1}]})" "\n"
        R"({"course_id":"c2","series_id":"s1","subject":"geo","segments":[{"channel":"asr","text":"亚洲 spans zones.","order":0}]})" "\n");
  write(dir / "targets.jsonl",
        R"({"target_id":"t1","subject":"geo","name":"Asia","description":"continent"})" "\n"
        R"({"target_id":"t2","subject":"geo","name":"Rivers","description":""})" "\n"
        R"({"target_id":"t3","subject":"geo","name":"Climate","description":""})" "\n");
  write(dir / "materials.jsonl",
        R"({"target_id":"t1","text":"Asia spans tropical zones."})" "\n"
        R"({"target_id":"t2","text":"Rivers carry silt."})" "\n"
        R"({"target_id":"t3","text":"Climate varies."})" "\n");
  write(dir / "annotations.jsonl",
        R"({"subject_id":"c1","target_id":null,"score":76.0})" "\n"
        R"({"subject_id":"c1","target_id":"t1","score":85.0})" "\n");
  return dir;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::Usage;
}

VideoCourse numbered_course(std::size_t n) {
  VideoCourse c{"c", "s", "x", {}};
  for (std::size_t i = 0; i < n; ++i) c.segments.push_back({Channel::asr, "seg" + std::to_string(i), i * 10});
  return c;
}

}  // namespace

TEST(LoadCorpus, CountsAndOrdering) {
  const auto dir = small_corpus("corpus-counts");
  const auto corpus = load_corpus(dir);
  EXPECT_EQ(corpus.courses().size(), 2u);
  EXPECT_EQ(corpus.targets().size(), 3u);
  EXPECT_EQ(corpus.materials().size(), 3u);
  EXPECT_EQ(course_text(corpus.course("c1")), "A B");
  EXPECT_EQ(corpus.annotations().size(), 2u);
  EXPECT_FALSE(corpus.annotations()[0].target_id.has_value());
  EXPECT_TRUE(corpus.pairs().empty());
  fs::remove_all(dir);
}

TEST(LoadCorpus, Errors) {
  const auto dir = small_corpus("corpus-errors");
  write(dir / "courses.jsonl",
        R"({"course_id":"c1","series_id":"nope","subject":"geo","segments":[{"channel":"asr","text":"x","order":0}]})" "\n");
  EXPECT_EQ(code_of([&] { load_corpus(dir); }), ErrorCode::DanglingReference);

  const auto dir2 = small_corpus("corpus-errors2");
  write(dir2 / "targets.jsonl",
        R"({"target_id":"t1","subject":"geo","name":"A","description":""})" "\n"
        R"({"target_id":"t1","subject":"geo","name":"B","description":""})" "\n");
  EXPECT_EQ(code_of([&] { load_corpus(dir2); }), ErrorCode::DuplicateId);

  const auto dir3 = small_corpus("corpus-errors3");
  write(dir3 / "materials.jsonl", "{\"target_id\":\"t1\",\"text\":\"ok\"}\nnot json\n");
  try {
    load_corpus(dir3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedRecord);
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }

  const auto dir4 = small_corpus("corpus-errors4");
  fs::remove(dir4 / "materials.jsonl");
  EXPECT_EQ(code_of([&] { load_corpus(dir4); }), ErrorCode::MissingFile);
  for (const auto& d : {dir, dir2, dir3, dir4}) fs::remove_all(d);
}

TEST(LoadCorpus, CollectsAllErrors) {
  const auto dir = small_corpus("corpus-collect");
  write(dir / "targets.jsonl",
        R"({"target_id":"t1","subject":"geo","name":"A","description":""})" "\n"
        R"({"target_id":"t1","subject":"geo","name":"B","description":""})" "\n");
  write(dir / "materials.jsonl", R"({"target_id":"t9","text":"x"})" "\n");
  const auto errors = validate_corpus_dir(dir);
  std::set<ErrorCode> codes;
  for (const auto& e : errors) codes.insert(e.code());
  EXPECT_TRUE(codes.contains(ErrorCode::DuplicateId));
  EXPECT_TRUE(codes.contains(ErrorCode::DanglingReference));
  const auto ok = small_corpus("corpus-collect-ok");
  EXPECT_TRUE(validate_corpus_dir(ok).empty());
  fs::remove_all(dir);
  fs::remove_all(ok);
}

TEST(CourseText, Examples) {
  VideoCourse c{"c", "s", "x", {{Channel::asr, "A", 0}, {Channel::ocr, "B", 1}}};
  EXPECT_EQ(course_text(c), "A B");
  c.segments.resize(1);
  c.segments[0].text = "X";
  EXPECT_EQ(course_text(c), "X");
}

TEST(SubsetCourse, Examples) {
  const auto c = numbered_course(10);
  EXPECT_EQ(subset_course(c, 1.0, 3), c);
  const auto half = subset_course(c, 0.5, 7);
  ASSERT_EQ(half.segments.size(), 5u);
  for (std::size_t i = 1; i < half.segments.size(); ++i) EXPECT_LT(half.segments[i - 1].order, half.segments[i].order);
  EXPECT_EQ(subset_course(c, 0.5, 7), half);
  EXPECT_EQ(subset_course(c, 0.31, 1).segments.size(), 4u);
  for (const double bad : {0.0, -0.1, 1.01}) EXPECT_EQ(code_of([&] { subset_course(c, bad, 1); }), ErrorCode::InvalidFraction);
}

TEST(SubsetCourse, SubsetAndNestedProperties) {
  for (std::size_t n = 1; n <= 12; ++n) {
    const auto c = numbered_course(n);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      std::set<std::uint64_t> previous;
      for (const double f : {0.1, 0.25, 0.5, 0.75, 1.0}) {
        const auto s = subset_course(c, f, seed);
        std::set<std::uint64_t> kept;
        for (const auto& seg : s.segments) {
          kept.insert(seg.order);
          EXPECT_EQ(seg.text, "seg" + std::to_string(seg.order / 10));
        }
        EXPECT_TRUE(std::includes(kept.begin(), kept.end(), previous.begin(), previous.end()));
        previous = kept;
      }
    }
  }
}

TEST(CorpusRoundTrip, WriteThenLoad) {
  const auto dir = small_corpus("corpus-rt-src");
  const auto corpus = load_corpus(dir);
  const auto out = fixtures::temp_dir("corpus-rt-dst");
  write_corpus(corpus, out);
  EXPECT_EQ(load_corpus(out), corpus);

  SyntheticSpec spec;
  spec.courses = {{"x", 0.5, {}, 1.0}, {"y", 1.0, {}, 0.0}};
  const auto synthetic = synthesize_corpus(spec, 4);
  write_corpus(synthetic, out);
  EXPECT_EQ(load_corpus(out), synthetic);
  fs::remove_all(dir);
  fs::remove_all(out);
}
