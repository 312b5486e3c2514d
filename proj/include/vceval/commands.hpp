#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vceval/consistency.hpp"
#include "vceval/evaluator.hpp"
#include "vceval/textmetrics.hpp"

namespace vceval {

struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path out = "out";
  std::uint64_t seed = 0;
  QuestgenConfig questgen;
  std::optional<std::filesystem::path> stopwords_file;
  ModelConfig model;
  std::vector<double> fractions{0.25, 0.5, 0.75, 1.0};
  std::vector<BaselineMetric> metrics{BaselineMetric::rouge1, BaselineMetric::rouge2, BaselineMetric::rougeL,
                                      BaselineMetric::bleu};
  int jobs = 1;
  int evidence_top_k = 3;
  bool save_checkpoints = true;
};

/// Overlays the keys of a flat JSON object onto `config`. Unknown keys are ConfigInvalid.
void apply_config(RunConfig& config, const nlohmann::json& flat);
void apply_config_file(RunConfig& config, const std::filesystem::path& path);
/// Checks ranges and that the corpus directory exists.
void validate(const RunConfig& config);

std::vector<double> parse_fractions(const std::string& csv);

/// Writes questions.jsonl and inclass/<course>.jsonl under config.out. Returns exam questions per target.
std::map<std::string, std::size_t> cmd_prepare(const RunConfig& config);

/// Evaluates the given course and series ids (all courses when empty) against out/questions.jsonl and
/// writes report.jsonl, targets.csv and checkpoints/<course>.ckpt.
std::vector<ScoreReport> cmd_evaluate(const RunConfig& config, const std::vector<std::string>& ids);

/// Writes baseline.jsonl: one record per course and metric.
void cmd_baseline(const RunConfig& config, const std::vector<std::string>& ids);

/// Correlates every method found in the report files with the corpus annotations; writes meta.jsonl.
void cmd_meta(const RunConfig& config, const std::vector<std::filesystem::path>& reports);

/// Writes a synthetic corpus (and stopwords.txt) to config.out.
void cmd_synth(const RunConfig& config, const std::optional<std::filesystem::path>& spec_file);

/// Writes consistency.jsonl with one record per fraction.
std::vector<ConsistencyPoint> cmd_consistency(const RunConfig& config, const std::string& course_id);

}  // namespace vceval
