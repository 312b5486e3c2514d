#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

#include "vceval/model_config.hpp"
#include "vceval/vocab.hpp"

namespace vceval {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Offsets of the named parameter blocks inside the flat parameter vector.
struct ParameterLayout {
  struct Layer {
    Eigen::Index ln1_gain, ln1_bias;
    Eigen::Index qkv_weight, qkv_bias;  // D x 3D, 3D
    Eigen::Index proj_weight, proj_bias;  // D x D, D
    Eigen::Index ln2_gain, ln2_bias;
    Eigen::Index ffn_in_weight, ffn_in_bias;  // D x F, F
    Eigen::Index ffn_out_weight, ffn_out_bias;  // F x D, D
  };

  Eigen::Index vocab = 0, dim = 0, ffn = 0, context = 0;
  Eigen::Index token_embedding = 0;     // V x D
  Eigen::Index position_embedding = 0;  // C x D
  std::vector<Layer> layers;
  Eigen::Index final_gain = 0, final_bias = 0;
  Eigen::Index output_weight = 0, output_bias = 0;  // D x V, V
  Eigen::Index total = 0;

  ParameterLayout(const ModelConfig& config, std::size_t vocab_size);

  /// Parameters that start at 1 (layer-norm gains) and at 0 (biases); the rest are weights.
  [[nodiscard]] std::vector<std::pair<Eigen::Index, Eigen::Index>> gain_blocks() const;
  [[nodiscard]] std::vector<std::pair<Eigen::Index, Eigen::Index>> bias_blocks() const;
};

/// Activations kept from a forward pass for the backward pass.
struct ForwardCache {
  struct Layer {
    RowMatrix input, ln1_hat, ln1_out, qkv, attn_out, mid, ln2_hat, ln2_out, pre_act, act;
    Eigen::VectorXd ln1_rstd, ln2_rstd;
    std::vector<RowMatrix> probs;  // per head, T x T
  };
  std::vector<TokenId> tokens;
  std::vector<Layer> layers;
  RowMatrix final_hat, final_out;
  Eigen::VectorXd final_rstd;
};

/// Pre-norm decoder-only transformer with causal multi-head attention and tanh-GELU feed-forward.
/// All parameters live in one flat vector; gradients accumulate into a vector of the same layout.
class Transformer {
 public:
  Transformer(const ModelConfig& config, std::size_t vocab_size);

  [[nodiscard]] const ParameterLayout& layout() const noexcept { return layout_; }

  void forward(const Eigen::VectorXd& theta, std::span<const TokenId> tokens, ForwardCache& cache) const;

  /// Logits (rows.size() x V) for the selected positions of a completed forward pass.
  [[nodiscard]] RowMatrix logits(const Eigen::VectorXd& theta, const ForwardCache& cache,
                                 std::span<const Eigen::Index> rows) const;

  /// Backpropagates d(loss)/d(logits) at `rows` and adds d(loss)/d(theta) into `grad`.
  void backward(const Eigen::VectorXd& theta, const ForwardCache& cache, std::span<const Eigen::Index> rows,
                const RowMatrix& dlogits, Eigen::VectorXd& grad) const;

 private:
  int heads_;
  ParameterLayout layout_;
};

}  // namespace vceval
