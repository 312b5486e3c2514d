#pragma once

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vceval/corpus.hpp"
#include "vceval/model_config.hpp"
#include "vceval/questgen.hpp"
#include "vceval/transformer.hpp"
#include "vceval/vocab.hpp"

namespace vceval {

enum class Stage { unlearn, pretrain, finetune };

std::string to_string(Stage s);

struct StageRecord {
  Stage stage = Stage::unlearn;
  double final_loss = 0.0;

  bool operator==(const StageRecord&) const = default;
};

struct StageReport {
  Stage stage = Stage::unlearn;
  int epochs_run = 0;
  /// Loss at the start of every epoch (unlearning: the full-batch loss before each step).
  std::vector<double> epoch_losses;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  /// False when unlearning hit its epoch cap before reaching the uniform tolerance.
  bool converged = true;
  /// Unlearning: max over questions and options of |P - 1/4|, after the stage.
  double max_deviation = 0.0;
  /// Fine-tuning: accuracy on the in-class set before and after the stage.
  double accuracy_before = 0.0;
  double accuracy_after = 0.0;
};

/// Parameters plus everything needed to interpret them.
struct ModelState {
  ModelConfig config;
  Vocabulary vocab;
  Eigen::VectorXd parameters;
  std::vector<StageRecord> stage_log;

  [[nodiscard]] Transformer network() const { return Transformer(config, vocab.size()); }
  [[nodiscard]] bool fully_trained() const;
};

std::size_t parameter_count(const ModelConfig& config, std::size_t vocab_size);

/// Seeded init: weights uniform in [-init_scale, init_scale], biases 0, layer-norm gains 1.
ModelState init_model(const ModelConfig& config, Vocabulary vocab);

struct OptionDistribution {
  std::array<double, kOptionCount> probabilities{};
  std::size_t chosen_index = 0;
};

/// Softmax over per-option scores; ties in the argmax go to the lowest index.
OptionDistribution distribution_from_scores(const std::array<double, kOptionCount>& scores);

/// Token ids of a question: stem (blank as kBlank) and each option.
struct EncodedQuestion {
  std::vector<TokenId> stem;
  std::array<std::vector<TokenId>, kOptionCount> options;
  std::size_t answer_index = 0;

  /// Longest scored sequence: stem, separator, option.
  [[nodiscard]] std::size_t encoded_length() const;
};

/// ContextOverflow if stem + separator + longest option exceeds context_len.
EncodedQuestion encode_question(const Vocabulary& vocab, const ExamQuestion& question, int context_len);

/// Softmax over options of the mean option-token log-likelihood given stem and separator.
OptionDistribution option_distribution(const ModelState& model, const ExamQuestion& question);
OptionDistribution option_distribution(const ModelState& model, const EncodedQuestion& question);

/// Sliding windows of context_len tokens with stride context_len / 2 covering the whole sequence.
std::vector<std::vector<TokenId>> pretrain_windows(std::span<const TokenId> tokens, int context_len);

/// Stage objectives. Each returns the loss and, when `grad` is non-null, adds its gradient.
namespace objectives {

/// Mean over questions of the sum over options of P(option)^2.
double unlearn(const Transformer& net, const Eigen::VectorXd& theta, std::span<const EncodedQuestion> questions,
               Eigen::VectorXd* grad);

/// Mean over windows of mean next-token cross-entropy.
double pretrain(const Transformer& net, const Eigen::VectorXd& theta,
                std::span<const std::vector<TokenId>> windows, Eigen::VectorXd* grad);

/// Mean over questions of -log P(correct option).
double finetune(const Transformer& net, const Eigen::VectorXd& theta, std::span<const EncodedQuestion> questions,
                Eigen::VectorXd* grad);

}  // namespace objectives

/// Drives option probabilities on the exam toward uniform (full-batch gradient descent).
StageReport train_unlearn(ModelState& model, const ExamSet& exam);

/// Next-token prediction over the course text.
StageReport train_pretrain(ModelState& model, const VideoCourse& course);

/// Maximizes the correct-option probability on the in-class set.
StageReport train_finetune(ModelState& model, const ExamSet& inclass);

/// Versioned binary checkpoint: magic, version, config, vocabulary, stage log, little-endian
/// float64 parameters, crc32 trailer.
void save_model(const ModelState& model, const std::filesystem::path& path);
ModelState load_model(const std::filesystem::path& path);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace vceval
