#pragma once

#include <cstdint>

namespace vceval {

struct ModelConfig {
  int embed_dim = 64;
  int layers = 2;
  int heads = 4;
  int context_len = 128;
  int ffn_mult = 4;

  double lr_unlearn = 0.5;
  double lr_pretrain = 0.1;
  double lr_finetune = 0.1;
  int epochs_unlearn = 200;  // cap; unlearning stops early once uniform
  int epochs_pretrain = 40;
  int epochs_finetune = 60;
  int batch_size = 8;

  /// Unlearning target: every option probability within this distance of 1/4.
  double tolerance_uniform = 0.02;
  /// Unlearning target: per-question sum of squared probabilities within this of 1/4.
  double unlearn_loss_tolerance = 1e-3;
  /// Global gradient-norm clip applied to every SGD step (<= 0 disables).
  double grad_clip = 1.0;
  double init_scale = 0.05;
  /// Run unlearning a second time after pre-training.
  bool repeat_unlearn = false;

  std::uint64_t seed = 0;

  bool operator==(const ModelConfig&) const = default;
};

/// Throws ConfigInvalid when any field is out of range (e.g. embed_dim not divisible by heads).
void validate(const ModelConfig& config);

}  // namespace vceval
