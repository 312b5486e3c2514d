#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "vceval/learner.hpp"
#include "vceval/questgen.hpp"
#include "vceval/vocab.hpp"

namespace fixtures {

/// Small enough for the planted-coverage runs to finish in minutes on one core.
inline vceval::ModelConfig small_model(std::uint64_t seed) {
  vceval::ModelConfig m;
  m.embed_dim = 32;
  m.layers = 2;
  m.heads = 4;
  m.context_len = 64;
  m.seed = seed;
  return m;
}

/// Tiny model for finite-difference checks. Larger init so the loss surface is not flat.
inline vceval::ModelConfig micro_model() {
  vceval::ModelConfig m;
  m.embed_dim = 8;
  m.layers = 1;
  m.heads = 2;
  m.context_len = 16;
  m.ffn_mult = 2;
  m.init_scale = 0.5;
  m.seed = 11;
  return m;
}

inline std::vector<std::string> micro_texts() {
  return {"the river carries silt to the delta", "a glacier carves a valley over time",
          "wind moves sand into dunes", "rain feeds the river and the lake"};
}

inline vceval::ExamQuestion question(std::string id, std::string target, std::string stem,
                                     std::array<std::string, 4> options, std::size_t answer) {
  vceval::ExamQuestion q;
  q.question_id = std::move(id);
  q.target_id = std::move(target);
  q.stem = std::move(stem);
  q.options = std::move(options);
  q.answer_index = answer;
  q.answer = q.options[answer];
  return q;
}

inline std::vector<vceval::ExamQuestion> micro_questions() {
  return {
      question("q1", "t1", "the river carries ____ to the delta", {"silt", "sand", "rain", "wind"}, 0),
      question("q2", "t1", "a ____ carves a valley", {"river", "glacier", "lake", "dunes"}, 1),
      question("q3", "t2", "wind moves sand into ____", {"valley", "delta", "dunes", "time"}, 2),
      question("q4", "t2", "rain feeds the ____", {"glacier valley", "sand", "wind", "lake"}, 3),
  };
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("vceval-" + name + "-" + std::to_string(static_cast<long>(::getpid())));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
