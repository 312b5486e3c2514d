#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vceval/commands.hpp"
#include "vceval/error.hpp"

using namespace vceval;

namespace {

struct Flags {
  std::optional<std::string> corpus;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> config;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--corpus", f.corpus, "Corpus directory");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--seed", f.seed, "Random seed");
  cmd->add_option("--config", f.config, "Flat JSON config file");
  cmd->add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

RunConfig resolve(const Flags& f) {
  RunConfig c;
  if (f.config) apply_config_file(c, *f.config);
  if (f.corpus) c.corpus = *f.corpus;
  if (f.out) c.out = *f.out;
  if (f.seed) c.seed = *f.seed;
  if (f.jobs) c.jobs = *f.jobs;
  return c;
}

void require_corpus(const RunConfig& c) {
  if (c.corpus.empty()) throw Error(ErrorCode::Usage, "--corpus is required");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Video course evaluation by training an examinee model on the course"};
  app.require_subcommand(1);
  Flags f;

  auto* prepare = app.add_subcommand("prepare", "Build the exam and in-class question sets");
  add_common(prepare, f);

  std::vector<std::string> ids;
  auto* evaluate = app.add_subcommand("evaluate", "Train on each course and score it on the exam");
  add_common(evaluate, f);
  evaluate->add_option("ids", ids, "Course or series ids (default: all courses)");

  std::vector<std::string> metrics;
  auto* baseline = app.add_subcommand("baseline", "Score courses with ROUGE/BLEU against the materials");
  add_common(baseline, f);
  baseline->add_option("--metric", metrics, "rouge1, rouge2, rougeL or bleu (repeatable; default all)");
  baseline->add_option("ids", ids, "Course or series ids (default: all courses)");

  std::vector<std::string> reports;
  auto* meta = app.add_subcommand("meta", "Correlate report scores with human annotations");
  add_common(meta, f);
  meta->add_option("--reports", reports, "Report files (default: <out>/report.jsonl and <out>/baseline.jsonl)");

  std::optional<std::string> spec;
  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus with planted coverage");
  add_common(synth, f);
  synth->add_option("--spec", spec, "Synthetic spec JSON");

  std::string course;
  std::optional<std::string> fractions;
  auto* consistency = app.add_subcommand("consistency", "Score nested subsets of one course");
  add_common(consistency, f);
  consistency->add_option("course", course, "Course id")->required();
  consistency->add_option("--fractions", fractions, "Comma-separated fractions, ascending, ending at 1.0");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    auto c = resolve(f);
    if (*prepare) {
      require_corpus(c);
      validate(c);
      const auto counts = cmd_prepare(c);
      std::size_t total = 0;
      for (const auto& [target, n] : counts) {
        std::cout << target << '\t' << n << '\n';
        total += n;
      }
      std::cout << "total\t" << total << '\n';
    } else if (*evaluate) {
      require_corpus(c);
      validate(c);
      cmd_evaluate(c, ids);
    } else if (*baseline) {
      require_corpus(c);
      if (!metrics.empty()) {
        c.metrics.clear();
        for (const auto& m : metrics) c.metrics.push_back(parse_baseline_metric(m));
      }
      validate(c);
      cmd_baseline(c, ids);
    } else if (*meta) {
      require_corpus(c);
      validate(c);
      std::vector<std::filesystem::path> files(reports.begin(), reports.end());
      if (files.empty()) {
        for (const char* name : {"report.jsonl", "baseline.jsonl"}) {
          if (std::filesystem::exists(c.out / name)) files.push_back(c.out / name);
        }
      }
      if (files.empty()) throw Error(ErrorCode::MissingFile, "no report files under " + c.out.string());
      cmd_meta(c, files);
    } else if (*synth) {
      validate(c);
      cmd_synth(c, spec ? std::optional<std::filesystem::path>(*spec) : std::nullopt);
    } else if (*consistency) {
      require_corpus(c);
      if (fractions) c.fractions = parse_fractions(*fractions);
      validate(c);
      for (const auto& p : cmd_consistency(c, course)) {
        std::cout << p.fraction << '\t' << p.video_score << '\n';
      }
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == ErrorCode::Usage ? 2 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
