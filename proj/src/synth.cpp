#include "vceval/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vceval/error.hpp"
#include "vceval/questgen.hpp"
#include "vceval/rng.hpp"

namespace vceval {

namespace {

constexpr std::array kOnsets = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "kl", "sn"};
constexpr std::array kVowels = {"a", "e", "i", "o", "u"};
constexpr std::array kCodas = {"", "", "n", "r", "x", "l"};

class WordFactory {
 public:
  explicit WordFactory(std::uint64_t seed) : rng_(seed), taken_(default_stopwords()) {}

  std::string make(int syllables) {
    for (;;) {
      std::string w;
      for (int s = 0; s < syllables; ++s) {
        w += kOnsets[rng_.below(kOnsets.size())];
        w += kVowels[rng_.below(kVowels.size())];
      }
      w += kCodas[rng_.below(kCodas.size())];
      if (taken_.insert(w).second) return w;
    }
  }

 private:
  Rng rng_;
  std::set<std::string> taken_;
};

std::size_t covered_count(double coverage, int keywords) {
  return static_cast<std::size_t>(std::lround(coverage * keywords));
}

std::string sentence(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) {
    if (!s.empty()) s += ' ';
    s += w;
  }
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s + '.';
}

struct PlantedKeyword {
  std::string surface;
  std::array<std::string, 2> sentences;
};

}  // namespace

const std::vector<std::string>& chatter_words() {
  static const std::vector<std::string> words = {"um",    "uh",   "so",      "okay", "right", "well",
                                                 "like",  "yeah", "anyway",  "you",  "know",  "basically",
                                                 "just",  "really", "actually", "alright", "now", "guys"};
  return words;
}

void check_spec(const SyntheticSpec& spec) {
  auto invalid = [](const std::string& what) { throw Error(ErrorCode::SpecInvalid, what); };
  if (spec.targets < 1) invalid("targets must be >= 1");
  if (spec.keywords_per_target < 1) invalid("keywords_per_target must be >= 1");
  if (spec.noise_vocab < 10) invalid("noise_vocab must be >= 10");
  if (spec.courses.empty()) invalid("at least one course is required");
  std::set<std::string> ids;
  for (const auto& c : spec.courses) {
    if (c.course_id.empty() || !ids.insert(c.course_id).second) invalid("course ids must be unique and non-empty");
    if (!(c.coverage >= 0.0 && c.coverage <= 1.0)) invalid("coverage of " + c.course_id + " outside [0,1]");
    if (!c.target_coverage.empty() && c.target_coverage.size() != static_cast<std::size_t>(spec.targets)) {
      invalid("target_coverage of " + c.course_id + " must list one value per target");
    }
    for (double v : c.target_coverage) {
      if (!(v >= 0.0 && v <= 1.0)) invalid("target coverage of " + c.course_id + " outside [0,1]");
    }
    if (!(c.filler_ratio >= 0.0 && c.filler_ratio <= 20.0)) invalid("filler_ratio of " + c.course_id + " outside [0,20]");
  }
}

SyntheticSpec spec_from_json(const nlohmann::json& j) {
  try {
    SyntheticSpec spec;
    spec.targets = j.value("targets", spec.targets);
    spec.keywords_per_target = j.value("keywords_per_target", spec.keywords_per_target);
    spec.noise_vocab = j.value("noise_vocab", spec.noise_vocab);
    spec.subject = j.value("subject", spec.subject);
    spec.series_id = j.value("series_id", spec.series_id);
    for (const auto& c : j.at("courses")) {
      SyntheticCourse course;
      course.course_id = c.at("course_id").get<std::string>();
      course.coverage = c.value("coverage", 1.0);
      course.target_coverage = c.value("target_coverage", std::vector<double>{});
      course.filler_ratio = c.value("filler_ratio", 0.0);
      spec.courses.push_back(std::move(course));
    }
    check_spec(spec);
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SpecInvalid, e.what());
  }
}

Corpus synthesize_corpus(const SyntheticSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  WordFactory words(derive_seed(seed, 10));
  const auto k = static_cast<std::size_t>(spec.keywords_per_target);
  const auto n_targets = static_cast<std::size_t>(spec.targets);

  CorpusRecords rec;
  std::vector<std::vector<PlantedKeyword>> planted(n_targets);
  for (std::size_t t = 0; t < n_targets; ++t) {
    const auto target_id = "t" + std::to_string(t + 1);
    rec.targets.push_back({target_id, spec.subject, "Target " + std::to_string(t + 1),
                           "Synthetic teaching target " + std::to_string(t + 1)});
    std::string material;
    for (std::size_t i = 0; i < k; ++i) {
      PlantedKeyword kw;
      kw.surface = words.make(3);
      std::vector<std::string> ctx;
      for (int c = 0; c < 6; ++c) ctx.push_back(words.make(2));
      kw.sentences[0] = sentence({"the", ctx[0], ctx[1], "of", kw.surface, "is", ctx[2], ctx[3]});
      kw.sentences[1] = sentence({"this", kw.surface, "can", ctx[4], "with", "the", ctx[5]});
      for (const auto& s : kw.sentences) material += (material.empty() ? "" : " ") + s;
      planted[t].push_back(std::move(kw));
    }
    rec.materials.push_back({target_id, material});
  }

  std::vector<std::string> noise;
  for (int i = 0; i < spec.noise_vocab; ++i) noise.push_back(words.make(2));

  // One coverage order per target, shared by all courses, so coverage ladders are nested.
  std::vector<std::vector<std::size_t>> order(n_targets);
  for (std::size_t t = 0; t < n_targets; ++t) {
    order[t].resize(k);
    for (std::size_t i = 0; i < k; ++i) order[t][i] = i;
    Rng rng(derive_seed(seed, 20 + t));
    rng.shuffle(std::span<std::size_t>(order[t]));
  }

  CourseSeries series{spec.series_id, spec.subject, {}};
  std::vector<std::vector<double>> realized(spec.courses.size(), std::vector<double>(n_targets));
  for (std::size_t ci = 0; ci < spec.courses.size(); ++ci) {
    const auto& cs = spec.courses[ci];
    Rng rng(derive_seed(seed, 1000 + ci));
    std::vector<std::string> sentences;
    for (std::size_t t = 0; t < n_targets; ++t) {
      const double cov = cs.target_coverage.empty() ? cs.coverage : cs.target_coverage[t];
      const auto n_cov = covered_count(cov, spec.keywords_per_target);
      realized[ci][t] = static_cast<double>(n_cov) / static_cast<double>(k);
      std::vector<bool> covered(k, false);
      for (std::size_t i = 0; i < n_cov; ++i) covered[order[t][i]] = true;
      for (std::size_t i = 0; i < k; ++i) {
        if (covered[i]) {
          sentences.insert(sentences.end(), planted[t][i].sentences.begin(), planted[t][i].sentences.end());
          continue;
        }
        std::vector<std::string> w;
        for (int j = 0; j < 8; ++j) w.push_back(noise[rng.below(noise.size())]);
        sentences.push_back(sentence({"the", w[0], w[1], "of", w[2], "is", w[3], w[4]}));
        sentences.push_back(sentence({"this", w[5], "can", w[6], "with", "the", w[7]}));
      }
    }
    const auto n_filler = static_cast<std::size_t>(std::lround(cs.filler_ratio * static_cast<double>(sentences.size())));
    const auto& chatter = chatter_words();
    for (std::size_t f = 0; f < n_filler; ++f) {
      std::vector<std::string> w;
      for (int j = 0; j < 6; ++j) w.push_back(chatter[rng.below(chatter.size())]);
      const auto pos = rng.below(sentences.size() + 1);
      sentences.insert(sentences.begin() + static_cast<std::ptrdiff_t>(pos), sentence(w));
    }

    VideoCourse course{cs.course_id, spec.series_id, spec.subject, {}};
    for (std::size_t s = 0; s < sentences.size(); s += 3) {
      TextSegment seg;
      seg.order = course.segments.size();
      seg.channel = seg.order % 4 == 3 ? Channel::ocr : Channel::asr;
      for (std::size_t j = s; j < std::min(s + 3, sentences.size()); ++j) {
        seg.text += (seg.text.empty() ? "" : " ") + sentences[j];
      }
      course.segments.push_back(std::move(seg));
    }
    series.course_ids.push_back(cs.course_id);
    rec.courses.push_back(std::move(course));

    double total = 0.0;
    for (std::size_t t = 0; t < n_targets; ++t) {
      rec.annotations.push_back({cs.course_id, rec.targets[t].target_id, 100.0 * realized[ci][t]});
      total += realized[ci][t];
    }
    rec.annotations.push_back({cs.course_id, std::nullopt, 100.0 * total / static_cast<double>(n_targets)});
  }
  rec.series.push_back(std::move(series));

  for (std::size_t t = 0; t < n_targets; ++t) {
    for (std::size_t a = 0; a < spec.courses.size(); ++a) {
      for (std::size_t b = a + 1; b < spec.courses.size(); ++b) {
        if (realized[a][t] == realized[b][t]) continue;
        rec.pairs.push_back({rec.targets[t].target_id, spec.courses[a].course_id, spec.courses[b].course_id,
                             realized[a][t] > realized[b][t]});
      }
    }
  }
  return Corpus(std::move(rec));
}

}  // namespace vceval
